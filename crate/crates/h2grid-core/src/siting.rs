//! Node-capacitated flow-refueling station siting.
//!
//! Builds a MILP over binary open/close decisions `z_i` and continuous
//! refueling allocations `x_iq` ∈ [0, 1]:
//!
//! ```text
//! min Σ_i z_i
//! s.t.  Σ_{i∈K(q,a)} z_i ≥ 1          per arc a of q not covered by the
//!                                      initial fuel          (coverage)
//!       Σ_q w_q · x_iq ≤ c · z_i       per candidate node i   (capacity)
//!       Σ_{i∈K(q,a)} x_iq = 1          per arc a of q         (allocation)
//!       Σ_i x_iq = l_q                 per trip q             (occasions)
//!       x_iq ≤ z_i
//! ```
//!
//! with `w_q = f_q · p · d_q / l_q`, the fuel mass one refueling occasion of
//! trip `q` places on its chosen station, so that a trip's total refueled
//! mass is exactly `f_q · p · d_q`. The allocation equality holds on every
//! arc; only the coverage constraint is waived on arcs reachable with the
//! initial fuel. On instances with nested candidate sets and few occasions
//! the equalities can over-constrain each other; such instances surface as
//! infeasible rather than silently dropping a constraint.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use h2grid_lp::{solve_milp, LinearProgram, RowId, Sense, SolveError, VarId};

use crate::highway::{build_candidate_sets, filter_trips, shortest_path, CandidateSet,
    HighwayError, HighwayNetwork, ODTrip, TripPath};

/// Absolute tolerance on capacity feasibility checks.
pub const CAPACITY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SitingError {
    #[error("input error: {0}")]
    InconsistentInput(String),
    #[error("siting problem is infeasible: {report}")]
    Infeasible { report: String },
    #[error(transparent)]
    Highway(#[from] HighwayError),
    #[error("solver failure: {0}")]
    Solver(String),
}

/// Parameters of the siting problem.
#[derive(Debug, Clone, Copy)]
pub struct SitingConfig {
    pub range_km: f64,
    pub initial_fuel_km: f64,
    /// Fuel use per vehicle in kg/km.
    pub fuel_kg_per_km: f64,
    /// Station throughput cap in kg/day.
    pub node_capacity_kg_per_day: f64,
    /// Share of traffic that must be refueled; this implementation fixes
    /// full coverage.
    pub coverage_target: f64,
    /// Trips at or below this path length need no refueling.
    pub min_trip_km: f64,
}

impl SitingConfig {
    pub fn new(range_km: f64, fuel_kg_per_km: f64, node_capacity_kg_per_day: f64) -> Self {
        SitingConfig {
            range_km,
            initial_fuel_km: range_km,
            fuel_kg_per_km,
            node_capacity_kg_per_day,
            coverage_target: 1.0,
            min_trip_km: 50.0,
        }
    }

    pub fn validate(&self) -> Result<(), SitingError> {
        let positive = [
            ("range_km", self.range_km),
            ("fuel_kg_per_km", self.fuel_kg_per_km),
            ("node_capacity_kg_per_day", self.node_capacity_kg_per_day),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(SitingError::InconsistentInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.initial_fuel_km < 0.0 {
            return Err(SitingError::InconsistentInput(
                "initial fuel cannot be negative".into(),
            ));
        }
        if (self.coverage_target - 1.0).abs() > 1e-12 {
            return Err(SitingError::InconsistentInput(
                "only full coverage is supported".into(),
            ));
        }
        Ok(())
    }
}

/// A retained trip with its routed path and per-arc candidate sets.
#[derive(Debug, Clone)]
pub struct TripPlan {
    pub trip: ODTrip,
    pub path: TripPath,
    pub candidate_sets: Vec<CandidateSet>,
}

impl TripPlan {
    /// Fuel mass per refueling occasion of this trip, `f·p·d/l` in kg/day.
    pub fn occasion_load_kg(&self, cfg: &SitingConfig) -> f64 {
        self.trip.flow_per_day * cfg.fuel_kg_per_km * self.path.total_distance_km
            / self.path.refuel_occasions as f64
    }
}

/// Routes all trips, drops the short ones and attaches candidate sets.
pub fn prepare_trips(
    net: &HighwayNetwork,
    trips: &[ODTrip],
    cfg: &SitingConfig,
) -> Result<Vec<TripPlan>, SitingError> {
    cfg.validate()?;
    let mut routed = Vec::with_capacity(trips.len());
    for trip in trips {
        let path = shortest_path(net, trip, cfg.range_km)?;
        routed.push((trip.clone(), path));
    }
    Ok(filter_trips(routed, cfg.min_trip_km)
        .into_iter()
        .map(|(trip, path)| {
            let candidate_sets = build_candidate_sets(net, &path, cfg.range_km, cfg.initial_fuel_km);
            TripPlan {
                trip,
                path,
                candidate_sets,
            }
        })
        .collect())
}

/// The assembled MILP with handles into the underlying program.
pub struct SitingModel {
    pub lp: LinearProgram,
    /// Candidate node index → its binary open variable.
    pub z: BTreeMap<usize, VarId>,
    /// (candidate node index, plan index) → allocation variable.
    pub x: BTreeMap<(usize, usize), VarId>,
    pub plans: Vec<TripPlan>,
    pub config: SitingConfig,
    coverage_rows: Vec<RowId>,
    capacity_rows: BTreeMap<usize, RowId>,
}

/// Encodes the siting MILP for the prepared trips.
pub fn build_model(
    net: &HighwayNetwork,
    plans: Vec<TripPlan>,
    cfg: SitingConfig,
) -> Result<SitingModel, SitingError> {
    cfg.validate()?;
    let mut lp = LinearProgram::new("station-siting");
    let mut z: BTreeMap<usize, VarId> = BTreeMap::new();
    let mut x: BTreeMap<(usize, usize), VarId> = BTreeMap::new();

    let fail = |e: h2grid_lp::ModelError| SitingError::InconsistentInput(e.to_string());

    // Open variables for every candidate node on any retained path.
    for plan in &plans {
        for &node in &plan.path.node_sequence {
            if net.node(node).is_candidate && !z.contains_key(&node) {
                let var = lp
                    .add_binary_var(format!("open:{}", net.node(node).id), 1.0)
                    .map_err(fail)?;
                z.insert(node, var);
            }
        }
    }
    // Allocation variables where a candidate lies on a trip's path.
    for (q, plan) in plans.iter().enumerate() {
        for &node in &plan.path.node_sequence {
            if z.contains_key(&node) {
                let var = lp
                    .add_var(
                        format!("alloc:{}:{}", net.node(node).id, plan.trip.id),
                        0.0,
                        1.0,
                        0.0,
                    )
                    .map_err(fail)?;
                x.insert((node, q), var);
            }
        }
    }

    let mut coverage_rows = Vec::new();
    for (q, plan) in plans.iter().enumerate() {
        if plan.candidate_sets.len() != plan.path.arcs.len() {
            return Err(SitingError::InconsistentInput(format!(
                "trip {} has {} candidate sets for {} arcs",
                plan.trip.id,
                plan.candidate_sets.len(),
                plan.path.arcs.len()
            )));
        }
        for set in &plan.candidate_sets {
            let arc_name = format!(
                "{}-{}",
                net.node(set.arc.0).id,
                net.node(set.arc.1).id
            );
            // Coverage only where the initial fuel does not reach.
            if !set.pre_covered {
                let row = lp
                    .add_row(
                        format!("cover:{}:{arc_name}", plan.trip.id),
                        Sense::Ge,
                        1.0,
                        set.members.iter().map(|n| (z[n], 1.0)),
                    )
                    .map_err(fail)?;
                coverage_rows.push(row);
            }
            // Allocation equality holds on every arc.
            lp.add_row(
                format!("alloc:{}:{arc_name}", plan.trip.id),
                Sense::Eq,
                1.0,
                set.members.iter().map(|n| (x[&(*n, q)], 1.0)),
            )
            .map_err(fail)?;
        }
        // Each trip places exactly l_q refueling occasions.
        lp.add_row(
            format!("occasions:{}", plan.trip.id),
            Sense::Eq,
            plan.path.refuel_occasions as f64,
            plan.path
                .node_sequence
                .iter()
                .filter(|n| z.contains_key(n))
                .map(|n| (x[&(*n, q)], 1.0)),
        )
        .map_err(fail)?;
        // Refueling requires an open station.
        for &node in &plan.path.node_sequence {
            if let Some(&zv) = z.get(&node) {
                lp.add_row(
                    format!("open:{}:{}", plan.trip.id, net.node(node).id),
                    Sense::Le,
                    0.0,
                    vec![(x[&(node, q)], 1.0), (zv, -1.0)],
                )
                .map_err(fail)?;
            }
        }
    }

    // Node capacity couples all trips through a node.
    let mut capacity_rows = BTreeMap::new();
    for (&node, &zv) in &z {
        let mut terms: Vec<(VarId, f64)> = plans
            .iter()
            .enumerate()
            .filter_map(|(q, plan)| {
                x.get(&(node, q))
                    .map(|&xv| (xv, plan.occasion_load_kg(&cfg)))
            })
            .collect();
        terms.push((zv, -cfg.node_capacity_kg_per_day));
        let row = lp
            .add_row(format!("cap:{}", net.node(node).id), Sense::Le, 0.0, terms)
            .map_err(fail)?;
        capacity_rows.insert(node, row);
    }

    Ok(SitingModel {
        lp,
        z,
        x,
        plans,
        config: cfg,
        coverage_rows,
        capacity_rows,
    })
}

/// Station placements with per-node fuel loads.
#[derive(Debug, Clone)]
pub struct SitingSolution {
    pub stations: BTreeSet<usize>,
    /// (node, plan index) → allocation share.
    pub allocations: BTreeMap<(usize, usize), f64>,
    /// kg/day served at each open station.
    pub node_load: BTreeMap<usize, f64>,
    pub objective: u32,
}

/// Solves the MILP to optimality.
pub fn solve_siting(model: &SitingModel) -> Result<SitingSolution, SitingError> {
    let sol = match solve_milp(&model.lp) {
        Ok(sol) => sol,
        Err(SolveError::Infeasible { rows, detail }) => {
            return Err(SitingError::Infeasible {
                report: diagnose_infeasibility(model, &rows, &detail),
            })
        }
        Err(other) => return Err(SitingError::Solver(other.to_string())),
    };
    let mut stations = BTreeSet::new();
    for (&node, &zv) in &model.z {
        if sol.value(zv) > 0.5 {
            stations.insert(node);
        }
    }
    let mut allocations = BTreeMap::new();
    for (&key, &xv) in &model.x {
        let v = sol.value(xv);
        if v.abs() > 1e-12 {
            allocations.insert(key, v);
        }
    }
    let node_load = station_loads(&model.plans, &model.config, &allocations);
    Ok(SitingSolution {
        stations,
        objective: sol.objective.round() as u32,
        allocations,
        node_load,
    })
}

/// Names at least one requirement the infeasible instance cannot meet.
fn diagnose_infeasibility(model: &SitingModel, rows: &[RowId], detail: &str) -> String {
    // Structural impossibility first: an arc no candidate can refuel.
    for plan in &model.plans {
        for set in &plan.candidate_sets {
            if set.members.is_empty() && !set.pre_covered {
                return format!(
                    "arc {} of trip {} cannot be refueled by any candidate within range",
                    set.arc_index, plan.trip.id
                );
            }
        }
    }
    let mut tags: Vec<String> = rows
        .iter()
        .map(|r| model.lp.row(*r).tag.clone())
        .collect();
    if tags.is_empty() {
        tags.push(detail.to_string());
    }
    format!("violated requirements: {}", tags.join(", "))
}

/// Fuel load per station implied by an allocation, in kg/day. Conservation:
/// summed over stations this equals `Σ_q f_q·p·d_q`.
pub fn station_loads(
    plans: &[TripPlan],
    cfg: &SitingConfig,
    allocations: &BTreeMap<(usize, usize), f64>,
) -> BTreeMap<usize, f64> {
    let mut loads: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(node, q), &share) in allocations {
        if share.abs() > 0.0 {
            *loads.entry(node).or_insert(0.0) += plans[q].occasion_load_kg(cfg) * share;
        }
    }
    loads.retain(|_, v| v.abs() > 1e-12);
    loads
}

/// One re-checked constraint violation.
#[derive(Debug, Clone)]
pub struct SitingViolation {
    pub constraint: String,
    pub magnitude: f64,
}

/// Independently re-checks every constraint class of a claimed solution.
pub fn verify_solution(model: &SitingModel, solution: &SitingSolution) -> Vec<SitingViolation> {
    let mut violations = Vec::new();
    let cfg = &model.config;
    let alloc = |node: usize, q: usize| {
        solution
            .allocations
            .get(&(node, q))
            .copied()
            .unwrap_or(0.0)
    };

    for (q, plan) in model.plans.iter().enumerate() {
        for set in &plan.candidate_sets {
            if !set.pre_covered {
                let open = set
                    .members
                    .iter()
                    .filter(|n| solution.stations.contains(n))
                    .count();
                if open == 0 {
                    violations.push(SitingViolation {
                        constraint: format!("cover:{}:{}", plan.trip.id, set.arc_index),
                        magnitude: 1.0,
                    });
                }
            }
            let total: f64 = set.members.iter().map(|&n| alloc(n, q)).sum();
            if (total - 1.0).abs() > CAPACITY_TOL {
                violations.push(SitingViolation {
                    constraint: format!("alloc:{}:{}", plan.trip.id, set.arc_index),
                    magnitude: (total - 1.0).abs(),
                });
            }
        }
        let placed: f64 = plan
            .path
            .node_sequence
            .iter()
            .map(|&n| alloc(n, q))
            .sum();
        if (placed - plan.path.refuel_occasions as f64).abs() > CAPACITY_TOL {
            violations.push(SitingViolation {
                constraint: format!("occasions:{}", plan.trip.id),
                magnitude: (placed - plan.path.refuel_occasions as f64).abs(),
            });
        }
        for &node in &plan.path.node_sequence {
            let a = alloc(node, q);
            if !(-CAPACITY_TOL..=1.0 + CAPACITY_TOL).contains(&a) {
                violations.push(SitingViolation {
                    constraint: format!("bounds:{}:{node}", plan.trip.id),
                    magnitude: a.max(a.abs() - 1.0),
                });
            }
            if a > CAPACITY_TOL && !solution.stations.contains(&node) {
                violations.push(SitingViolation {
                    constraint: format!("open:{}:{node}", plan.trip.id),
                    magnitude: a,
                });
            }
        }
    }
    let loads = station_loads(&model.plans, cfg, &solution.allocations);
    for (node, load) in loads {
        if load > cfg.node_capacity_kg_per_day + CAPACITY_TOL {
            violations.push(SitingViolation {
                constraint: format!("cap:{node}"),
                magnitude: load - cfg.node_capacity_kg_per_day,
            });
        }
    }
    violations
}

impl SitingModel {
    pub fn coverage_rows(&self) -> &[RowId] {
        &self.coverage_rows
    }

    pub fn capacity_row(&self, node: usize) -> Option<RowId> {
        self.capacity_rows.get(&node).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::highway::GeoNode;

    fn node(id: &str, lat: f64) -> GeoNode {
        GeoNode {
            id: id.into(),
            lat,
            lon: 8.0,
            is_candidate: true,
        }
    }

    /// Three nodes on a line, 100 km apart, one trip A→C of 100 vehicles/day.
    fn t1_instance() -> (HighwayNetwork, Vec<ODTrip>) {
        let net = HighwayNetwork::new(
            vec![node("A", 50.0), node("B", 50.5), node("C", 51.0)],
            vec![
                ("A".into(), "B".into(), 100.0),
                ("B".into(), "C".into(), 100.0),
            ],
        )
        .unwrap();
        let trips = vec![ODTrip::new("q1", "A", "C", 100.0).unwrap()];
        (net, trips)
    }

    fn t1_config(capacity: f64) -> SitingConfig {
        SitingConfig::new(250.0, 0.066, capacity)
    }

    #[test]
    fn t1_model_shape() {
        let (net, trips) = t1_instance();
        let cfg = t1_config(30000.0);
        let plans = prepare_trips(&net, &trips, &cfg).unwrap();
        assert_eq!(plans.len(), 1);
        assert_eq!(plans[0].path.refuel_occasions, 1);
        let model = build_model(&net, plans, cfg).unwrap();
        assert_eq!(model.z.len(), 3);
        assert_eq!(model.x.len(), 3);
        // Both arcs are pre-covered at full initial fuel: no coverage rows.
        assert!(model.coverage_rows().is_empty());
    }

    #[test]
    fn t1_solves_to_one_station_with_expected_load() {
        let (net, trips) = t1_instance();
        let cfg = t1_config(30000.0);
        let plans = prepare_trips(&net, &trips, &cfg).unwrap();
        let model = build_model(&net, plans, cfg).unwrap();
        let sol = solve_siting(&model).unwrap();
        assert_eq!(sol.objective, 1);
        assert_eq!(sol.stations.len(), 1);
        let total: f64 = sol.node_load.values().sum();
        assert!((total - 1320.0).abs() < 1e-6, "{total}");
        assert!(verify_solution(&model, &sol).is_empty());
    }

    #[test]
    fn t1_with_tight_capacity_is_infeasible() {
        // One 1320 kg refueling occasion cannot be split below the cap: the
        // first arc's allocation equality pins it to a single node.
        let (net, trips) = t1_instance();
        let cfg = t1_config(1000.0);
        let plans = prepare_trips(&net, &trips, &cfg).unwrap();
        let model = build_model(&net, plans, cfg).unwrap();
        match solve_siting(&model) {
            Err(SitingError::Infeasible { .. }) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn zero_trips_gives_empty_model() {
        let (net, _) = t1_instance();
        let cfg = t1_config(30000.0);
        let model = build_model(&net, Vec::new(), cfg).unwrap();
        assert_eq!(model.lp.num_vars(), 0);
        assert_eq!(model.lp.num_rows(), 0);
        let sol = solve_siting(&model).unwrap();
        assert_eq!(sol.objective, 0);
        assert!(sol.stations.is_empty());
        assert!(sol.node_load.is_empty());
    }

    #[test]
    fn uncoverable_arc_is_infeasible_with_named_cause() {
        // B-C segment of 300 km exceeds the range: nothing can refuel it.
        let net = HighwayNetwork::new(
            vec![node("A", 50.0), node("B", 50.5), node("C", 51.0)],
            vec![
                ("A".into(), "B".into(), 100.0),
                ("B".into(), "C".into(), 300.0),
            ],
        )
        .unwrap();
        let trips = vec![ODTrip::new("q1", "A", "C", 10.0).unwrap()];
        let cfg = t1_config(30000.0);
        let plans = prepare_trips(&net, &trips, &cfg).unwrap();
        assert!(plans[0].candidate_sets[1].members.is_empty());
        let model = build_model(&net, plans, cfg).unwrap();
        match solve_siting(&model) {
            Err(SitingError::Infeasible { report }) => {
                assert!(report.contains("cannot be refueled"), "{report}");
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn parallel_trips_load_like_merged_flow() {
        let (net, _) = t1_instance();
        let cfg = t1_config(30000.0);
        let twin = vec![
            ODTrip::new("q1", "A", "C", 50.0).unwrap(),
            ODTrip::new("q2", "A", "C", 50.0).unwrap(),
        ];
        let plans = prepare_trips(&net, &twin, &cfg).unwrap();
        let model = build_model(&net, plans, cfg).unwrap();
        let sol = solve_siting(&model).unwrap();
        let total: f64 = sol.node_load.values().sum();
        assert!((total - 1320.0).abs() < 1e-6);
    }

    #[test]
    fn verify_flags_forced_closures_and_perturbations() {
        let (net, trips) = t1_instance();
        let cfg = t1_config(30000.0);
        let plans = prepare_trips(&net, &trips, &cfg).unwrap();
        let model = build_model(&net, plans, cfg).unwrap();
        let sol = solve_siting(&model).unwrap();

        let mut closed = sol.clone();
        closed.stations.clear();
        let v = verify_solution(&model, &closed);
        assert!(v.iter().any(|v| v.constraint.starts_with("open:")));

        let mut shifted = sol.clone();
        let key = *shifted.allocations.keys().next().unwrap();
        *shifted.allocations.get_mut(&key).unwrap() += 0.1;
        let v = verify_solution(&model, &shifted);
        assert!(v.iter().any(|v| v.constraint.starts_with("occasions:")
            || v.constraint.starts_with("alloc:")));
    }

    #[test]
    fn coverage_row_emitted_without_initial_fuel() {
        let (net, trips) = t1_instance();
        let mut cfg = t1_config(30000.0);
        cfg.initial_fuel_km = 0.0;
        let plans = prepare_trips(&net, &trips, &cfg).unwrap();
        let model = build_model(&net, plans, cfg).unwrap();
        assert_eq!(model.coverage_rows().len(), 2);
        let sol = solve_siting(&model).unwrap();
        assert!(verify_solution(&model, &sol).is_empty());
    }
}
