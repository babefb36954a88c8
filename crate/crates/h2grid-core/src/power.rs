//! Greenfield capacity-expansion model of the power system with linearized
//! DC power flow.
//!
//! One LP co-optimizes generator, storage, transmission and refueling-station
//! capacities together with hourly-resolution dispatch over weighted
//! snapshots:
//!
//! * nodal power balance per bus and snapshot (KCL), tagged `balance:{bus}:{t}`
//!   so locational marginal prices can be read off the duals,
//! * dispatch limited by availability times capacity,
//! * storage state of charge with charge/discharge efficiencies and cyclic
//!   closure over the horizon,
//! * AC flows tied to voltage-angle differences through fixed reactances
//!   (KVL) and limited to a usable fraction of line capacity (contingency
//!   proxy); DC link flows are freely controllable within capacity,
//! * AC lines expandable between their existing capacity and twice it, DC
//!   links from zero up to their ceiling,
//! * an optional system-wide carbon cap, tagged `co2:cap`,
//! * refueling stations as electricity-consuming conversion units with a
//!   bounded hydrogen store and an exogenous hydrogen demand series.
//!
//! The objective is annuitized investment plus dispatch cost. AC line
//! investment is costed on the expansion beyond existing capacity; the
//! matching constant is kept in the program's objective constant so category
//! accounting stays exact.

use std::collections::BTreeMap;

use thiserror::Error;

use h2grid_lp::{LinearProgram, RowId, Sense, Solution, SolveError, VarId};

use crate::finance::annuity;

pub use crate::finance::{annuity as asset_annuity, annuity_factor};

#[derive(Debug, Error)]
pub enum PowerError {
    #[error("validation failed:\n{0}")]
    Validation(String),
    #[error("model assembly failed: {0}")]
    Assembly(String),
}

#[derive(Debug, Clone)]
pub struct Bus {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    /// Electrical load in MW per snapshot.
    pub load_mw: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AcLine {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_km: f64,
    /// Fixed electrical reactance; flow = (θ_from − θ_to) / reactance.
    pub reactance: f64,
    pub existing_mw: f64,
    pub capex_eur_per_mw_km: f64,
    pub fom_pct: f64,
    pub lifetime_years: f64,
}

impl AcLine {
    /// Reinforcement is capped at double the current capacity.
    pub fn max_mw(&self) -> f64 {
        2.0 * self.existing_mw
    }
}

#[derive(Debug, Clone)]
pub struct DcLink {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_km: f64,
    pub existing_mw: f64,
    pub max_mw: f64,
    pub inverter_eur_per_mw: f64,
    pub capex_eur_per_mw_km: f64,
    pub fom_pct: f64,
    pub lifetime_years: f64,
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    pub carrier: String,
    pub capex_eur_per_kw: f64,
    pub fom_pct: f64,
    pub vom_eur_per_mwh: f64,
    /// Electrical efficiency; only meaningful for fueled carriers.
    pub efficiency: f64,
    pub fuel_eur_per_mwh_th: f64,
    pub co2_t_per_mwh_th: f64,
    pub lifetime_years: f64,
    pub potential_mw: f64,
    /// Per-snapshot availability in [0, 1]; `None` means fully dispatchable.
    pub availability: Option<Vec<f64>>,
}

impl Generator {
    /// Short-run cost of one MWh of electricity.
    pub fn marginal_cost(&self) -> f64 {
        if self.fuel_eur_per_mwh_th != 0.0 {
            self.vom_eur_per_mwh + self.fuel_eur_per_mwh_th / self.efficiency
        } else {
            self.vom_eur_per_mwh
        }
    }

    pub fn annuity_eur_per_mw(&self, discount: f64) -> f64 {
        annuity(
            self.capex_eur_per_kw * 1000.0,
            discount,
            self.lifetime_years,
            self.fom_pct,
        )
    }
}

#[derive(Debug, Clone)]
pub struct StorageUnit {
    pub id: String,
    pub bus: String,
    pub kind: String,
    pub power_capex_eur_per_kw: f64,
    pub energy_capex_eur_per_kwh: f64,
    pub power_fom_pct: f64,
    pub energy_fom_pct: f64,
    /// When set, energy capacity is tied to `hours × power` instead of
    /// being optimized freely (pumped hydro).
    pub fixed_hours: Option<f64>,
    pub eff_charge: f64,
    pub eff_discharge: f64,
    pub lifetime_years: f64,
    pub power_max_mw: f64,
    pub energy_max_mwh: Option<f64>,
}

/// A refueling station embedded in the power model: an electrolyzer drawing
/// from its bus, a bounded hydrogen store and an exogenous demand series.
/// Capex terms arrive pre-annuitized because grid-connection cost is folded
/// into the electrolyzer's €/MW by the coupling stage.
#[derive(Debug, Clone)]
pub struct HrsUnit {
    pub station_id: String,
    pub bus: String,
    /// Hydrogen demand in MWh per snapshot.
    pub demand_mwh: Vec<f64>,
    pub elec_capex_eur_per_mw_a: f64,
    pub store_capex_eur_per_mwh_a: f64,
    /// Electricity → hydrogen conversion efficiency.
    pub efficiency: f64,
    pub store_cap_mwh: f64,
    /// Set by scenario 1 to pin the locally sized capacities.
    pub fixed_power_mw: Option<f64>,
    pub fixed_store_mwh: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PowerSystem {
    pub buses: Vec<Bus>,
    pub lines: Vec<AcLine>,
    pub links: Vec<DcLink>,
    pub generators: Vec<Generator>,
    pub storages: Vec<StorageUnit>,
    pub hrs_units: Vec<HrsUnit>,
    pub snapshot_count: usize,
    /// Weight of each snapshot in hours.
    pub dt_hours: f64,
    pub co2_cap_t: Option<f64>,
    pub discount_rate: f64,
    /// Usable share of AC line capacity (N-1 contingency proxy).
    pub ac_usable_fraction: f64,
}

impl PowerSystem {
    pub fn new(snapshot_count: usize, dt_hours: f64) -> Self {
        PowerSystem {
            buses: Vec::new(),
            lines: Vec::new(),
            links: Vec::new(),
            generators: Vec::new(),
            storages: Vec::new(),
            hrs_units: Vec::new(),
            snapshot_count,
            dt_hours,
            co2_cap_t: None,
            discount_rate: 0.07,
            ac_usable_fraction: 0.70,
        }
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Total modeled hours; 8760 when covering a full year.
    pub fn horizon_hours(&self) -> f64 {
        self.snapshot_count as f64 * self.dt_hours
    }

    /// Total electrical energy demand over the horizon in MWh, including
    /// station consumption implied by hydrogen demand and efficiency.
    pub fn delivered_energy_mwh(&self) -> f64 {
        let base: f64 = self
            .buses
            .iter()
            .map(|b| b.load_mw.iter().sum::<f64>() * self.dt_hours)
            .sum();
        let hrs: f64 = self
            .hrs_units
            .iter()
            .map(|u| u.demand_mwh.iter().sum::<f64>() / u.efficiency)
            .sum();
        base + hrs
    }
}

/// Structural findings from [`validate_system`].
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Referential integrity, series lengths and value ranges.
pub fn validate_system(sys: &PowerSystem) -> ValidationReport {
    let mut issues = Vec::new();
    let mut push = |s: String| issues.push(s);

    if sys.snapshot_count == 0 {
        push("system has no snapshots".into());
    }
    if !(sys.dt_hours > 0.0) {
        push(format!("snapshot weight must be positive, got {}", sys.dt_hours));
    }
    if !(0.0 < sys.ac_usable_fraction && sys.ac_usable_fraction <= 1.0) {
        push(format!(
            "usable line fraction must be in (0, 1], got {}",
            sys.ac_usable_fraction
        ));
    }
    if let Some(cap) = sys.co2_cap_t {
        if cap < 0.0 {
            push(format!("carbon cap must be non-negative, got {cap}"));
        }
    }
    let mut seen = BTreeMap::new();
    for b in &sys.buses {
        if seen.insert(b.id.clone(), ()).is_some() {
            push(format!("duplicate bus id {}", b.id));
        }
        if b.load_mw.len() != sys.snapshot_count {
            push(format!(
                "bus {}: load series has {} entries for {} snapshots",
                b.id,
                b.load_mw.len(),
                sys.snapshot_count
            ));
        }
        if b.load_mw.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            push(format!("bus {}: load values must be finite and non-negative", b.id));
        }
    }
    let has_bus = |id: &str| sys.buses.iter().any(|b| b.id == id);
    for l in &sys.lines {
        if !has_bus(&l.from) || !has_bus(&l.to) {
            push(format!("line {}: endpoint missing", l.id));
        }
        if !(l.reactance > 0.0) {
            push(format!("line {}: reactance must be positive", l.id));
        }
        if l.existing_mw < 0.0 || !(l.length_km > 0.0) {
            push(format!("line {}: geometry or capacity out of range", l.id));
        }
    }
    for l in &sys.links {
        if !has_bus(&l.from) || !has_bus(&l.to) {
            push(format!("link {}: endpoint missing", l.id));
        }
        if l.existing_mw < 0.0 || l.max_mw < 0.0 || !(l.length_km > 0.0) {
            push(format!("link {}: geometry or capacity out of range", l.id));
        }
    }
    for g in &sys.generators {
        if !has_bus(&g.bus) {
            push(format!("generator {}: bus {} missing", g.id, g.bus));
        }
        if let Some(series) = &g.availability {
            if series.len() != sys.snapshot_count {
                push(format!(
                    "generator {}: availability series has {} entries for {} snapshots",
                    g.id,
                    series.len(),
                    sys.snapshot_count
                ));
            }
            if series.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
                push(format!("generator {}: availability outside [0, 1]", g.id));
            }
        }
        if g.potential_mw < 0.0 {
            push(format!("generator {}: negative potential", g.id));
        }
        if (g.fuel_eur_per_mwh_th != 0.0 || g.co2_t_per_mwh_th != 0.0) && !(g.efficiency > 0.0) {
            push(format!(
                "generator {}: fueled carrier needs a positive efficiency",
                g.id
            ));
        }
    }
    for s in &sys.storages {
        if !has_bus(&s.bus) {
            push(format!("storage {}: bus {} missing", s.id, s.bus));
        }
        if !(0.0 < s.eff_charge && s.eff_charge <= 1.0)
            || !(0.0 < s.eff_discharge && s.eff_discharge <= 1.0)
        {
            push(format!("storage {}: efficiencies must be in (0, 1]", s.id));
        }
        if s.power_max_mw < 0.0 {
            push(format!("storage {}: negative power limit", s.id));
        }
    }
    for u in &sys.hrs_units {
        if !has_bus(&u.bus) {
            push(format!("station {}: bus {} missing", u.station_id, u.bus));
        }
        if u.demand_mwh.len() != sys.snapshot_count {
            push(format!(
                "station {}: demand series has {} entries for {} snapshots",
                u.station_id,
                u.demand_mwh.len(),
                sys.snapshot_count
            ));
        }
        if !(0.0 < u.efficiency && u.efficiency <= 1.0) {
            push(format!("station {}: efficiency must be in (0, 1]", u.station_id));
        }
        if let Some(e) = u.fixed_store_mwh {
            if e > u.store_cap_mwh + 1e-9 {
                push(format!(
                    "station {}: fixed store {} exceeds cap {}",
                    u.station_id, e, u.store_cap_mwh
                ));
            }
        }
    }
    ValidationReport { issues }
}

/// The assembled expansion LP with typed handles into its variables.
pub struct ExpansionModel {
    pub lp: LinearProgram,
    pub sys: PowerSystem,
    pub gen_cap: Vec<VarId>,
    pub dispatch: Vec<Vec<VarId>>,
    pub sto_pow: Vec<VarId>,
    pub sto_ene: Vec<VarId>,
    pub sto_ch: Vec<Vec<VarId>>,
    pub sto_dis: Vec<Vec<VarId>>,
    pub sto_soc: Vec<Vec<VarId>>,
    pub line_cap: Vec<VarId>,
    pub line_flow: Vec<Vec<VarId>>,
    pub link_cap: Vec<VarId>,
    pub link_flow: Vec<Vec<VarId>>,
    pub hrs_pow: Vec<VarId>,
    pub hrs_store: Vec<VarId>,
    pub hrs_prod: Vec<Vec<VarId>>,
    pub hrs_soc: Vec<Vec<VarId>>,
    balance_rows: Vec<Vec<RowId>>,
    pub co2_row: Option<RowId>,
}

impl ExpansionModel {
    pub fn solve(&self) -> Result<Solution, SolveError> {
        h2grid_lp::solve_lp(&self.lp)
    }

    pub fn balance_row(&self, bus: usize, t: usize) -> RowId {
        self.balance_rows[bus][t]
    }

    /// Sum of `cost · value` over a set of variables.
    pub fn cost_of(&self, sol: &Solution, vars: impl IntoIterator<Item = VarId>) -> f64 {
        vars.into_iter()
            .map(|v| self.lp.var(v).cost * sol.value(v))
            .sum()
    }
}

/// Builds the expansion LP. Fails with every validation issue listed when
/// the system is not well-formed.
pub fn build_expansion_lp(sys: &PowerSystem) -> Result<ExpansionModel, PowerError> {
    let report = validate_system(sys);
    if !report.is_clean() {
        return Err(PowerError::Validation(report.issues.join("\n")));
    }
    let asm = |e: h2grid_lp::ModelError| PowerError::Assembly(e.to_string());
    let t_count = sys.snapshot_count;
    let dt = sys.dt_hours;
    let r = sys.discount_rate;
    let mut lp = LinearProgram::new("capacity-expansion");

    // --- variables ---------------------------------------------------
    let mut gen_cap = Vec::new();
    let mut dispatch = Vec::new();
    for g in &sys.generators {
        gen_cap.push(
            lp.add_var(
                format!("gencap:{}", g.id),
                0.0,
                g.potential_mw,
                g.annuity_eur_per_mw(r),
            )
            .map_err(asm)?,
        );
        let mc = g.marginal_cost();
        dispatch.push(
            (0..t_count)
                .map(|t| lp.add_var(format!("gen:{}:{t}", g.id), 0.0, f64::INFINITY, mc * dt))
                .collect::<Result<Vec<_>, _>>()
                .map_err(asm)?,
        );
    }

    let mut sto_pow = Vec::new();
    let mut sto_ene = Vec::new();
    let mut sto_ch = Vec::new();
    let mut sto_dis = Vec::new();
    let mut sto_soc = Vec::new();
    for s in &sys.storages {
        sto_pow.push(
            lp.add_var(
                format!("stpow:{}", s.id),
                0.0,
                s.power_max_mw,
                annuity(
                    s.power_capex_eur_per_kw * 1000.0,
                    r,
                    s.lifetime_years,
                    s.power_fom_pct,
                ),
            )
            .map_err(asm)?,
        );
        sto_ene.push(
            lp.add_var(
                format!("stene:{}", s.id),
                0.0,
                s.energy_max_mwh.unwrap_or(f64::INFINITY),
                annuity(
                    s.energy_capex_eur_per_kwh * 1000.0,
                    r,
                    s.lifetime_years,
                    s.energy_fom_pct,
                ),
            )
            .map_err(asm)?,
        );
        let mut mk = |prefix: &str| -> Result<Vec<VarId>, PowerError> {
            (0..t_count)
                .map(|t| lp.add_var(format!("{prefix}:{}:{t}", s.id), 0.0, f64::INFINITY, 0.0))
                .collect::<Result<Vec<_>, _>>()
                .map_err(asm)
        };
        sto_ch.push(mk("stch")?);
        sto_dis.push(mk("stdis")?);
        sto_soc.push(mk("stsoc")?);
    }

    let mut line_cap = Vec::new();
    let mut line_flow = Vec::new();
    for l in &sys.lines {
        let per_mw = annuity(
            l.capex_eur_per_mw_km * l.length_km,
            r,
            l.lifetime_years,
            l.fom_pct,
        );
        line_cap.push(
            lp.add_var(format!("accap:{}", l.id), l.existing_mw, l.max_mw(), per_mw)
                .map_err(asm)?,
        );
        // Investment is costed on expansion only.
        lp.add_objective_constant(-per_mw * l.existing_mw);
        line_flow.push(
            (0..t_count)
                .map(|t| {
                    lp.add_var(
                        format!("acflow:{}:{t}", l.id),
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                        0.0,
                    )
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(asm)?,
        );
    }

    let mut link_cap = Vec::new();
    let mut link_flow = Vec::new();
    for l in &sys.links {
        let per_mw = annuity(
            l.inverter_eur_per_mw + l.capex_eur_per_mw_km * l.length_km,
            r,
            l.lifetime_years,
            l.fom_pct,
        );
        link_cap.push(
            lp.add_var(format!("dccap:{}", l.id), 0.0, l.max_mw, per_mw)
                .map_err(asm)?,
        );
        link_flow.push(
            (0..t_count)
                .map(|t| {
                    lp.add_var(
                        format!("dcflow:{}:{t}", l.id),
                        f64::NEG_INFINITY,
                        f64::INFINITY,
                        0.0,
                    )
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(asm)?,
        );
    }

    // Voltage angles exist only where AC lines attach; one bus per
    // AC-connected component is the angle reference.
    let mut component = (0..sys.buses.len()).collect::<Vec<usize>>();
    fn root(component: &mut Vec<usize>, mut i: usize) -> usize {
        while component[i] != i {
            component[i] = component[component[i]];
            i = component[i];
        }
        i
    }
    for l in &sys.lines {
        let a = sys.bus_index(&l.from).expect("validated");
        let b = sys.bus_index(&l.to).expect("validated");
        let (ra, rb) = (root(&mut component, a), root(&mut component, b));
        if ra != rb {
            component[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut touches_ac = vec![false; sys.buses.len()];
    for l in &sys.lines {
        touches_ac[sys.bus_index(&l.from).unwrap()] = true;
        touches_ac[sys.bus_index(&l.to).unwrap()] = true;
    }
    let mut angles: Vec<Option<Vec<VarId>>> = vec![None; sys.buses.len()];
    for (b, bus) in sys.buses.iter().enumerate() {
        if touches_ac[b] {
            let is_reference = root(&mut component, b) == b;
            let (lo, hi) = if is_reference {
                (0.0, 0.0)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            };
            angles[b] = Some(
                (0..t_count)
                    .map(|t| lp.add_var(format!("angle:{}:{t}", bus.id), lo, hi, 0.0))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(asm)?,
            );
        }
    }

    let mut hrs_pow = Vec::new();
    let mut hrs_store = Vec::new();
    let mut hrs_prod = Vec::new();
    let mut hrs_soc = Vec::new();
    for u in &sys.hrs_units {
        let (plo, phi) = match u.fixed_power_mw {
            Some(p) => (p, p),
            None => (0.0, f64::INFINITY),
        };
        hrs_pow.push(
            lp.add_var(
                format!("hrspow:{}", u.station_id),
                plo,
                phi,
                u.elec_capex_eur_per_mw_a,
            )
            .map_err(asm)?,
        );
        let (elo, ehi) = match u.fixed_store_mwh {
            Some(e) => (e, e),
            None => (0.0, u.store_cap_mwh),
        };
        hrs_store.push(
            lp.add_var(
                format!("hrsstore:{}", u.station_id),
                elo,
                ehi,
                u.store_capex_eur_per_mwh_a,
            )
            .map_err(asm)?,
        );
        hrs_prod.push(
            (0..t_count)
                .map(|t| {
                    lp.add_var(format!("hrsdraw:{}:{t}", u.station_id), 0.0, f64::INFINITY, 0.0)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(asm)?,
        );
        hrs_soc.push(
            (0..t_count)
                .map(|t| {
                    lp.add_var(format!("hrssoc:{}:{t}", u.station_id), 0.0, f64::INFINITY, 0.0)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(asm)?,
        );
    }

    // --- constraints ---------------------------------------------------
    // Nodal balance terms are accumulated first, then emitted in bus order.
    let mut balance_terms: Vec<Vec<Vec<(VarId, f64)>>> =
        vec![vec![Vec::new(); t_count]; sys.buses.len()];
    for (gi, g) in sys.generators.iter().enumerate() {
        let b = sys.bus_index(&g.bus).unwrap();
        for t in 0..t_count {
            balance_terms[b][t].push((dispatch[gi][t], 1.0));
        }
    }
    for (si, s) in sys.storages.iter().enumerate() {
        let b = sys.bus_index(&s.bus).unwrap();
        for t in 0..t_count {
            balance_terms[b][t].push((sto_dis[si][t], 1.0));
            balance_terms[b][t].push((sto_ch[si][t], -1.0));
        }
    }
    for (li, l) in sys.lines.iter().enumerate() {
        let from = sys.bus_index(&l.from).unwrap();
        let to = sys.bus_index(&l.to).unwrap();
        for t in 0..t_count {
            balance_terms[from][t].push((line_flow[li][t], -1.0));
            balance_terms[to][t].push((line_flow[li][t], 1.0));
        }
    }
    for (li, l) in sys.links.iter().enumerate() {
        let from = sys.bus_index(&l.from).unwrap();
        let to = sys.bus_index(&l.to).unwrap();
        for t in 0..t_count {
            balance_terms[from][t].push((link_flow[li][t], -1.0));
            balance_terms[to][t].push((link_flow[li][t], 1.0));
        }
    }
    for (ui, u) in sys.hrs_units.iter().enumerate() {
        let b = sys.bus_index(&u.bus).unwrap();
        for t in 0..t_count {
            balance_terms[b][t].push((hrs_prod[ui][t], -1.0));
        }
    }
    let mut balance_rows = Vec::with_capacity(sys.buses.len());
    for (b, bus) in sys.buses.iter().enumerate() {
        let mut rows = Vec::with_capacity(t_count);
        for t in 0..t_count {
            rows.push(
                lp.add_row(
                    format!("balance:{}:{t}", bus.id),
                    Sense::Eq,
                    bus.load_mw[t],
                    balance_terms[b][t].iter().copied(),
                )
                .map_err(asm)?,
            );
        }
        balance_rows.push(rows);
    }

    for (gi, g) in sys.generators.iter().enumerate() {
        for t in 0..t_count {
            let avail = g.availability.as_ref().map_or(1.0, |a| a[t]);
            lp.add_row(
                format!("genlim:{}:{t}", g.id),
                Sense::Le,
                0.0,
                vec![(dispatch[gi][t], 1.0), (gen_cap[gi], -avail)],
            )
            .map_err(asm)?;
        }
    }

    for (si, s) in sys.storages.iter().enumerate() {
        for t in 0..t_count {
            lp.add_row(
                format!("chlim:{}:{t}", s.id),
                Sense::Le,
                0.0,
                vec![(sto_ch[si][t], 1.0), (sto_pow[si], -1.0)],
            )
            .map_err(asm)?;
            lp.add_row(
                format!("dislim:{}:{t}", s.id),
                Sense::Le,
                0.0,
                vec![(sto_dis[si][t], 1.0), (sto_pow[si], -1.0)],
            )
            .map_err(asm)?;
            lp.add_row(
                format!("soclim:{}:{t}", s.id),
                Sense::Le,
                0.0,
                vec![(sto_soc[si][t], 1.0), (sto_ene[si], -1.0)],
            )
            .map_err(asm)?;
            // Cyclic recursion; t = 0 closes against the final snapshot.
            let prev = if t == 0 { t_count - 1 } else { t - 1 };
            lp.add_row(
                format!("socbal:{}:{t}", s.id),
                Sense::Eq,
                0.0,
                vec![
                    (sto_soc[si][t], 1.0),
                    (sto_soc[si][prev], -1.0),
                    (sto_ch[si][t], -s.eff_charge * dt),
                    (sto_dis[si][t], dt / s.eff_discharge),
                ],
            )
            .map_err(asm)?;
        }
        if let Some(hours) = s.fixed_hours {
            lp.add_row(
                format!("stfix:{}", s.id),
                Sense::Eq,
                0.0,
                vec![(sto_ene[si], 1.0), (sto_pow[si], -hours)],
            )
            .map_err(asm)?;
        }
    }

    for (li, l) in sys.lines.iter().enumerate() {
        let from = sys.bus_index(&l.from).unwrap();
        let to = sys.bus_index(&l.to).unwrap();
        let susceptance = 1.0 / l.reactance;
        let usable = sys.ac_usable_fraction;
        for t in 0..t_count {
            let theta_f = angles[from].as_ref().unwrap()[t];
            let theta_t = angles[to].as_ref().unwrap()[t];
            lp.add_row(
                format!("kvl:{}:{t}", l.id),
                Sense::Eq,
                0.0,
                vec![
                    (line_flow[li][t], 1.0),
                    (theta_f, -susceptance),
                    (theta_t, susceptance),
                ],
            )
            .map_err(asm)?;
            lp.add_row(
                format!("aclim+:{}:{t}", l.id),
                Sense::Le,
                0.0,
                vec![(line_flow[li][t], 1.0), (line_cap[li], -usable)],
            )
            .map_err(asm)?;
            lp.add_row(
                format!("aclim-:{}:{t}", l.id),
                Sense::Le,
                0.0,
                vec![(line_flow[li][t], -1.0), (line_cap[li], -usable)],
            )
            .map_err(asm)?;
        }
    }

    for (li, l) in sys.links.iter().enumerate() {
        for t in 0..t_count {
            lp.add_row(
                format!("dclim+:{}:{t}", l.id),
                Sense::Le,
                0.0,
                vec![(link_flow[li][t], 1.0), (link_cap[li], -1.0)],
            )
            .map_err(asm)?;
            lp.add_row(
                format!("dclim-:{}:{t}", l.id),
                Sense::Le,
                0.0,
                vec![(link_flow[li][t], -1.0), (link_cap[li], -1.0)],
            )
            .map_err(asm)?;
        }
    }

    for (ui, u) in sys.hrs_units.iter().enumerate() {
        for t in 0..t_count {
            lp.add_row(
                format!("hrslim:{}:{t}", u.station_id),
                Sense::Le,
                0.0,
                vec![(hrs_prod[ui][t], 1.0), (hrs_pow[ui], -1.0)],
            )
            .map_err(asm)?;
            lp.add_row(
                format!("hrssoclim:{}:{t}", u.station_id),
                Sense::Le,
                0.0,
                vec![(hrs_soc[ui][t], 1.0), (hrs_store[ui], -1.0)],
            )
            .map_err(asm)?;
            let prev = if t == 0 { t_count - 1 } else { t - 1 };
            // soc_t − soc_{t−1} − η·Δt·draw_t = −demand_t
            lp.add_row(
                format!("hbal:{}:{t}", u.station_id),
                Sense::Eq,
                -u.demand_mwh[t],
                vec![
                    (hrs_soc[ui][t], 1.0),
                    (hrs_soc[ui][prev], -1.0),
                    (hrs_prod[ui][t], -u.efficiency * dt),
                ],
            )
            .map_err(asm)?;
        }
    }

    let mut co2_row = None;
    if let Some(cap) = sys.co2_cap_t {
        let mut terms = Vec::new();
        for (gi, g) in sys.generators.iter().enumerate() {
            if g.co2_t_per_mwh_th > 0.0 {
                let per_mwh_el = g.co2_t_per_mwh_th / g.efficiency;
                for t in 0..t_count {
                    terms.push((dispatch[gi][t], per_mwh_el * dt));
                }
            }
        }
        co2_row = Some(lp.add_row("co2:cap", Sense::Le, cap, terms).map_err(asm)?);
    }

    Ok(ExpansionModel {
        lp,
        sys: sys.clone(),
        gen_cap,
        dispatch,
        sto_pow,
        sto_ene,
        sto_ch,
        sto_dis,
        sto_soc,
        line_cap,
        line_flow,
        link_cap,
        link_flow,
        hrs_pow,
        hrs_store,
        hrs_prod,
        hrs_soc,
        balance_rows,
        co2_row,
    })
}
