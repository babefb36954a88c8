//! Station size classes, component cost sheets, demand profile synthesis and
//! the diesel-parity fuel price.

use thiserror::Error;

use crate::finance::annuity_factor;

/// Hydrogen energy content on the higher-heating-value basis, chosen so that
/// 30 t of stored hydrogen is exactly 999.9 MWh.
pub const H2_KWH_PER_KG: f64 = 33.33;
/// Same constant in MWh per kg, handy for LP coefficients.
pub const H2_MWH_PER_KG: f64 = H2_KWH_PER_KG / 1000.0;
/// Regulatory cap on station throughput and low-pressure storage.
pub const MAX_STATION_KG_PER_DAY: f64 = 30_000.0;
/// The same cap expressed as stored energy.
pub const MAX_STORE_MWH: f64 = 999.9;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("daily demand {0} kg exceeds the 30 t node cap")]
    OverCap(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid profile parameters: {0}")]
    Param(String),
}

/// One row of the station portfolio (XS … XXL).
#[derive(Debug, Clone)]
pub struct StationSizeClass {
    pub label: String,
    pub hdv_per_day: f64,
    pub demand_kg_per_day: f64,
    pub low_pressure_storage_kg: f64,
    pub high_pressure_storage_kg: f64,
    pub electrolyzer_mw: f64,
}

/// Component costs per class in million euro. The authoritative figure is
/// `total_meur`; the component rows are informational and do not sum to it
/// for the larger classes.
#[derive(Debug, Clone)]
pub struct StationCostSheet {
    pub label: String,
    pub high_pressure_storage_meur: f64,
    pub dispenser_meur: f64,
    pub compressors_meur: f64,
    pub cooling_meur: f64,
    pub safety_meur: f64,
    pub total_meur: f64,
}

#[derive(Debug, Clone)]
pub struct StationCatalog {
    pub classes: Vec<StationSizeClass>,
    pub costs: Vec<StationCostSheet>,
}

impl StationCatalog {
    /// The built-in six-class portfolio.
    pub fn builtin() -> Self {
        let labels = ["XS", "S", "M", "L", "XL", "XXL"];
        let hdv = [15.0, 31.0, 61.0, 123.0, 246.0, 492.0];
        let demand = [938.0, 1875.0, 3750.0, 7500.0, 15000.0, 30000.0];
        let lp_storage = demand;
        let hp_storage = [113.0, 225.0, 450.0, 900.0, 1800.0, 3600.0];
        let electrolyzer = [2.0, 5.0, 9.0, 19.0, 37.0, 74.0];
        let hp_cost = [0.13, 0.26, 0.51, 1.03, 2.06, 2.06];
        let dispenser = [0.11, 0.11, 0.21, 0.43, 0.86, 0.86];
        let compressors = [1.58, 2.76, 5.52, 10.65, 21.30, 21.30];
        let cooling = [0.12; 6];
        let safety = [0.14, 0.14, 0.28, 0.56, 1.12, 1.12];
        let total = [0.59, 1.19, 2.37, 4.74, 9.48, 18.96];
        let classes = (0..6)
            .map(|i| StationSizeClass {
                label: labels[i].into(),
                hdv_per_day: hdv[i],
                demand_kg_per_day: demand[i],
                low_pressure_storage_kg: lp_storage[i],
                high_pressure_storage_kg: hp_storage[i],
                electrolyzer_mw: electrolyzer[i],
            })
            .collect();
        let costs = (0..6)
            .map(|i| StationCostSheet {
                label: labels[i].into(),
                high_pressure_storage_meur: hp_cost[i],
                dispenser_meur: dispenser[i],
                compressors_meur: compressors[i],
                cooling_meur: cooling[i],
                safety_meur: safety[i],
                total_meur: total[i],
            })
            .collect();
        StationCatalog { classes, costs }
    }

    /// Smallest class that can serve the given daily demand.
    pub fn classify_station(&self, daily_kg: f64) -> Result<&StationSizeClass, CatalogError> {
        if !(daily_kg > 0.0) {
            return Err(CatalogError::Domain(format!(
                "daily demand must be positive, got {daily_kg}"
            )));
        }
        self.classes
            .iter()
            .find(|c| c.demand_kg_per_day >= daily_kg)
            .ok_or(CatalogError::OverCap(daily_kg))
    }

    pub fn cost_sheet(&self, label: &str) -> Option<&StationCostSheet> {
        self.costs.iter().find(|c| c.label == label)
    }

    /// Annualized cost in €/a of the station components that are sized
    /// outside the system optimization (compressors, high-pressure storage,
    /// dispensers, cooling, safety), from the authoritative class total.
    pub fn expost_capex(
        &self,
        class: &StationSizeClass,
        lifetime_years: f64,
        discount: f64,
    ) -> f64 {
        let sheet = self
            .cost_sheet(&class.label)
            .expect("every class has a cost sheet");
        sheet.total_meur * 1e6 * annuity_factor(discount, lifetime_years)
    }
}

/// A station site chosen by the siting stage together with its demand level.
#[derive(Debug, Clone)]
pub struct HrsSite {
    pub node_id: String,
    pub lat: f64,
    pub lon: f64,
    pub daily_demand_kg: f64,
    pub annual_demand_kg: f64,
}

impl HrsSite {
    pub fn new(
        node_id: impl Into<String>,
        lat: f64,
        lon: f64,
        daily_demand_kg: f64,
    ) -> Result<Self, CatalogError> {
        if daily_demand_kg > MAX_STATION_KG_PER_DAY + 1e-6 {
            return Err(CatalogError::OverCap(daily_demand_kg));
        }
        Ok(HrsSite {
            node_id: node_id.into(),
            lat,
            lon,
            daily_demand_kg,
            annual_demand_kg: daily_demand_kg * 365.0,
        })
    }
}

/// Parameters of the synthetic refueling profile: a weekly driving pattern
/// (reduced nights and weekends) modulated by a seasonal sinusoid.
#[derive(Debug, Clone, Copy)]
pub struct ProfileParams {
    /// Multiplier for hours 22:00–06:00.
    pub night_factor: f64,
    /// Multiplier for Saturday and Sunday.
    pub weekend_factor: f64,
    /// Relative amplitude of the seasonal modulation.
    pub seasonal_amplitude: f64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            night_factor: 0.3,
            weekend_factor: 0.5,
            seasonal_amplitude: 0.1,
        }
    }
}

/// Normalized share of annual hydrogen demand per snapshot. The same profile
/// applies to every station.
#[derive(Debug, Clone)]
pub struct HrsDemandProfile {
    pub weights: Vec<f64>,
    pub dt_hours: f64,
}

/// Expands the weekly pattern across `snapshots` steps of `dt_hours` and
/// normalizes to sum one.
pub fn synth_profile(
    params: &ProfileParams,
    snapshots: usize,
    dt_hours: f64,
) -> Result<HrsDemandProfile, CatalogError> {
    if params.night_factor < 0.0 || params.weekend_factor < 0.0 || params.seasonal_amplitude < 0.0
    {
        return Err(CatalogError::Param(format!("factors must be non-negative: {params:?}")));
    }
    if snapshots == 0 || !(dt_hours > 0.0) {
        return Err(CatalogError::Param(format!(
            "need a positive horizon, got {snapshots} snapshots of {dt_hours} h"
        )));
    }
    let horizon_hours = snapshots as f64 * dt_hours;
    let mut weights: Vec<f64> = (0..snapshots)
        .map(|t| {
            let hour = t as f64 * dt_hours;
            let hour_of_week = hour.rem_euclid(168.0);
            let hour_of_day = hour.rem_euclid(24.0);
            let weekend = hour_of_week >= 120.0;
            let night = !(6.0..22.0).contains(&hour_of_day);
            let mut w = 1.0;
            if night {
                w *= params.night_factor;
            }
            if weekend {
                w *= params.weekend_factor;
            }
            // Seasonal peak at the start of the horizon (winter-aligned
            // inputs put t = 0 on January 1).
            w * (1.0 + params.seasonal_amplitude
                * (2.0 * std::f64::consts::PI * hour / horizon_hours.max(8760.0)).cos())
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) {
        return Err(CatalogError::Param(
            "profile collapsed to zero everywhere".into(),
        ));
    }
    for w in &mut weights {
        *w /= sum;
    }
    Ok(HrsDemandProfile { weights, dt_hours })
}

/// Hydrogen drawn per snapshot in kg: annual demand times profile weight.
pub fn demand_series(site: &HrsSite, profile: &HrsDemandProfile) -> Vec<f64> {
    profile
        .weights
        .iter()
        .map(|w| site.annual_demand_kg * w)
        .collect()
}

/// Fuel price at which hydrogen matches diesel on a cost-per-distance basis.
///
/// `energy_at_wheel` is kWh per 100 km; the tank-side energies follow from
/// the powertrain efficiencies. Returns €/kg of hydrogen.
pub fn diesel_parity(
    energy_at_wheel_kwh_per_100km: f64,
    eta_diesel: f64,
    eta_fcev: f64,
    diesel_kwh_per_litre: f64,
    diesel_eur_per_litre: f64,
    h2_kwh_per_kg: f64,
) -> Result<f64, CatalogError> {
    for (name, eta) in [("diesel", eta_diesel), ("fcev", eta_fcev)] {
        if !(0.0 < eta && eta <= 1.0) {
            return Err(CatalogError::Domain(format!(
                "{name} efficiency must be in (0, 1], got {eta}"
            )));
        }
    }
    if !(diesel_kwh_per_litre > 0.0) || !(h2_kwh_per_kg > 0.0) {
        return Err(CatalogError::Domain("energy contents must be positive".into()));
    }
    let diesel_litres_per_100km = energy_at_wheel_kwh_per_100km / eta_diesel / diesel_kwh_per_litre;
    let diesel_eur_per_100km = diesel_litres_per_100km * diesel_eur_per_litre;
    let h2_kg_per_100km = energy_at_wheel_kwh_per_100km / eta_fcev / h2_kwh_per_kg;
    Ok(diesel_eur_per_100km / h2_kg_per_100km)
}
