//! Post-solution analytics: locational marginal prices, levelized hydrogen
//! cost, system cost accounting and transmission expansion volume.

use thiserror::Error;

use crate::catalog::{StationCatalog, H2_MWH_PER_KG};
use crate::coupling::SolvedCase;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("case carries no dual values")]
    MissingDuals,
    #[error("station {0} produced no hydrogen; LCOH is undefined")]
    ZeroProduction(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

/// Nodal price series of one bus in €/MWh.
#[derive(Debug, Clone)]
pub struct LmpSeries {
    pub bus_id: String,
    pub prices: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
}

/// Locational marginal prices from the duals of the nodal balance rows,
/// normalized by the snapshot weight so the unit is €/MWh regardless of
/// resolution.
pub fn extract_lmp(case: &SolvedCase) -> Result<Vec<LmpSeries>, MetricsError> {
    if case.solution.duals().len() != case.model.lp.num_rows() {
        return Err(MetricsError::MissingDuals);
    }
    let sys = &case.model.sys;
    let dt = sys.dt_hours;
    let mut out = Vec::with_capacity(sys.buses.len());
    for (b, bus) in sys.buses.iter().enumerate() {
        let prices: Vec<f64> = (0..sys.snapshot_count)
            .map(|t| case.solution.dual(case.model.balance_row(b, t)) / dt)
            .collect();
        let mean = prices.iter().sum::<f64>() / prices.len() as f64;
        let variance =
            prices.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / prices.len() as f64;
        out.push(LmpSeries {
            bus_id: bus.id.clone(),
            median: median(&prices),
            mean,
            variance,
            prices,
        });
    }
    Ok(out)
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Cost decomposition of one station's hydrogen production.
#[derive(Debug, Clone)]
pub struct LcohBreakdown {
    pub station_id: String,
    pub capex_electrolyzer_eur_pa: f64,
    pub capex_store_eur_pa: f64,
    pub capex_connection_eur_pa: f64,
    pub capex_expost_eur_pa: f64,
    pub opex_electricity_eur_pa: f64,
    pub opex_vom_eur_pa: f64,
    pub annual_hydrogen_kg: f64,
    pub lcoh_eur_per_kg: f64,
    pub capex_share: f64,
}

impl LcohBreakdown {
    pub fn total_eur_pa(&self) -> f64 {
        self.capex_electrolyzer_eur_pa
            + self.capex_store_eur_pa
            + self.capex_connection_eur_pa
            + self.capex_expost_eur_pa
            + self.opex_electricity_eur_pa
            + self.opex_vom_eur_pa
    }
}

/// Levelized cost of hydrogen for one embedded station: annualized capex of
/// the solved capacities plus the ex-post components, electricity valued at
/// the nodal price of every snapshot, divided by annual production.
pub fn lcoh(
    case: &SolvedCase,
    station_index: usize,
    catalog: &StationCatalog,
) -> Result<LcohBreakdown, MetricsError> {
    let ctx = &case.stations[station_index];
    let model = &case.model;
    let sys = &model.sys;
    let dt = sys.dt_hours;
    let ui = ctx.unit_index;
    let sol = &case.solution;
    if sol.duals().len() != model.lp.num_rows() {
        return Err(MetricsError::MissingDuals);
    }

    let power_mw = sol.value(model.hrs_pow[ui]);
    let store_mwh = sol.value(model.hrs_store[ui]);
    let produced_mwh: f64 = (0..sys.snapshot_count)
        .map(|t| sol.value(model.hrs_prod[ui][t]) * ctx.efficiency * dt)
        .sum();
    let annual_kg = produced_mwh / H2_MWH_PER_KG;
    if annual_kg <= 1e-9 {
        return Err(MetricsError::ZeroProduction(ctx.site.node_id.clone()));
    }

    let bus = ctx.attachment.bus_index;
    let opex_electricity: f64 = (0..sys.snapshot_count)
        .map(|t| {
            let lmp = sol.dual(model.balance_row(bus, t)) / dt;
            lmp * sol.value(model.hrs_prod[ui][t]) * dt
        })
        .sum();

    let class = catalog
        .classify_station(ctx.site.daily_demand_kg)
        .map_err(|e| MetricsError::Degenerate(e.to_string()))?;
    let capex_expost = catalog.expost_capex(class, 20.0, sys.discount_rate);

    let breakdown = LcohBreakdown {
        station_id: ctx.site.node_id.clone(),
        capex_electrolyzer_eur_pa: ctx.elec_capex_eur_per_mw_a * power_mw,
        capex_store_eur_pa: ctx.store_capex_eur_per_mwh_a * store_mwh,
        capex_connection_eur_pa: ctx.conn_capex_eur_per_mw_a * power_mw,
        capex_expost_eur_pa: capex_expost,
        opex_electricity_eur_pa: opex_electricity,
        opex_vom_eur_pa: 0.0,
        annual_hydrogen_kg: annual_kg,
        lcoh_eur_per_kg: 0.0,
        capex_share: 0.0,
    };
    let total = breakdown.total_eur_pa();
    let capex = breakdown.capex_electrolyzer_eur_pa
        + breakdown.capex_store_eur_pa
        + breakdown.capex_connection_eur_pa
        + breakdown.capex_expost_eur_pa;
    Ok(LcohBreakdown {
        lcoh_eur_per_kg: total / annual_kg,
        capex_share: capex / total,
        ..breakdown
    })
}

/// Production-weighted mean LCOH across stations.
pub fn aggregate_lcoh(breakdowns: &[LcohBreakdown]) -> Option<f64> {
    let total_kg: f64 = breakdowns.iter().map(|b| b.annual_hydrogen_kg).sum();
    if total_kg <= 0.0 {
        return None;
    }
    Some(
        breakdowns
            .iter()
            .map(|b| b.lcoh_eur_per_kg * b.annual_hydrogen_kg)
            .sum::<f64>()
            / total_kg,
    )
}

/// Annual system cost split by category, in €/a.
#[derive(Debug, Clone)]
pub struct SystemCostReport {
    pub total_eur_pa: f64,
    pub generation_eur_pa: f64,
    pub storage_eur_pa: f64,
    pub transmission_eur_pa: f64,
    pub hrs_electrolyzers_eur_pa: f64,
    pub hrs_storage_eur_pa: f64,
    /// Total cost per unit of delivered electrical energy.
    pub relative_eur_per_mwh: f64,
    pub expansion_twkm: f64,
    pub expansion_pct: f64,
}

/// Rebuilds the objective from primal values by category. The categories sum
/// to the solver objective exactly (transmission carries the sunk-cost
/// constant of existing line capacity, so it reports expansion cost only).
pub fn system_cost_report(case: &SolvedCase) -> SystemCostReport {
    let model = &case.model;
    let sol = &case.solution;
    let generation = model.cost_of(sol, model.gen_cap.iter().copied())
        + model.cost_of(sol, model.dispatch.iter().flatten().copied());
    let storage = model.cost_of(sol, model.sto_pow.iter().copied())
        + model.cost_of(sol, model.sto_ene.iter().copied());
    let transmission = model.cost_of(sol, model.line_cap.iter().copied())
        + model.cost_of(sol, model.link_cap.iter().copied())
        + model.lp.objective_constant();
    let hrs_electrolyzers = model.cost_of(sol, model.hrs_pow.iter().copied());
    let hrs_storage = model.cost_of(sol, model.hrs_store.iter().copied());
    let (expansion_twkm, expansion_pct) = expansion_volume(case);
    let delivered = model.sys.delivered_energy_mwh();
    let total = sol.objective;
    SystemCostReport {
        total_eur_pa: total,
        generation_eur_pa: generation,
        storage_eur_pa: storage,
        transmission_eur_pa: transmission,
        hrs_electrolyzers_eur_pa: hrs_electrolyzers,
        hrs_storage_eur_pa: hrs_storage,
        relative_eur_per_mwh: if delivered > 0.0 { total / delivered } else { 0.0 },
        expansion_twkm,
        expansion_pct,
    }
}

/// Transmission expansion over existing capacities in TW·km, absolute and
/// as a share of the initial network volume.
pub fn expansion_volume(case: &SolvedCase) -> (f64, f64) {
    let model = &case.model;
    let sys = &model.sys;
    let sol = &case.solution;
    let mut added_mwkm = 0.0;
    let mut base_mwkm = 0.0;
    for (li, line) in sys.lines.iter().enumerate() {
        added_mwkm += (sol.value(model.line_cap[li]) - line.existing_mw) * line.length_km;
        base_mwkm += line.existing_mw * line.length_km;
    }
    for (li, link) in sys.links.iter().enumerate() {
        added_mwkm += (sol.value(model.link_cap[li]) - link.existing_mw) * link.length_km;
        base_mwkm += link.existing_mw * link.length_km;
    }
    let twkm = added_mwkm / 1e6;
    let pct = if base_mwkm > 0.0 {
        added_mwkm / base_mwkm * 100.0
    } else {
        0.0
    };
    (twkm, pct)
}

/// Pearson correlation coefficient.
pub fn correlate(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(MetricsError::Degenerate(format!(
            "need two equal-length series of at least 2 points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(MetricsError::Degenerate("constant series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlate_exact_lines() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
        assert!((correlate(&xs, &ys).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((correlate(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlate_matches_direct_formula() {
        let xs = [0.3, 1.7, 2.9, 4.1, 5.0, 6.6];
        let ys = [2.0, 1.1, 3.8, 3.0, 5.9, 5.1];
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
        let sxx: f64 = xs.iter().map(|a| a * a).sum();
        let syy: f64 = ys.iter().map(|a| a * a).sum();
        let oracle = (n * sxy - sx * sy)
            / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        assert!((correlate(&xs, &ys).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn correlate_rejects_constant_series() {
        assert!(correlate(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
