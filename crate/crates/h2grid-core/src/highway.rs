//! Highway network, origin-destination trips and shortest-path routing.
//!
//! The network is an undirected weighted graph of geographic nodes. Trips
//! are routed with Dijkstra's algorithm; among equal-length shortest paths
//! the lexicographically smallest node-id sequence is chosen so that every
//! downstream optimization sees a deterministic input. Each routed path
//! carries its directed arc list, cumulative distances and the number of
//! refueling occasions, and per-arc candidate sets record which nodes can
//! refuel each arc.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::collections::BTreeMap;

use thiserror::Error;

/// Sphere radius used by the haversine distance.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error)]
pub enum HighwayError {
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("unknown node id {0}")]
    UnknownNode(String),
    #[error("no path between {origin} and {destination}")]
    Unreachable { origin: String, destination: String },
    #[error("domain error: {0}")]
    Domain(String),
}

/// A geographic node of the highway graph.
#[derive(Debug, Clone)]
pub struct GeoNode {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    /// Whether a station may be built here.
    pub is_candidate: bool,
}

/// Great-circle distance in km on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_distance(a: &GeoNode, b: &GeoNode) -> f64 {
    haversine_km(a.lat, a.lon, b.lat, b.lon)
}

pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let phi1 = lat1.to_radians();
    let phi2 = lat2.to_radians();
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// An origin-destination traffic flow in vehicles per day.
#[derive(Debug, Clone)]
pub struct ODTrip {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub flow_per_day: f64,
}

impl ODTrip {
    pub fn new(
        id: impl Into<String>,
        origin: impl Into<String>,
        destination: impl Into<String>,
        flow_per_day: f64,
    ) -> Result<Self, HighwayError> {
        let (id, origin, destination) = (id.into(), origin.into(), destination.into());
        if flow_per_day <= 0.0 || !flow_per_day.is_finite() {
            return Err(HighwayError::Domain(format!(
                "trip {id}: flow must be positive, got {flow_per_day}"
            )));
        }
        if origin == destination {
            return Err(HighwayError::Domain(format!(
                "trip {id}: origin equals destination ({origin})"
            )));
        }
        Ok(ODTrip {
            id,
            origin,
            destination,
            flow_per_day,
        })
    }
}

#[derive(Debug, Clone)]
pub struct HighwayNetwork {
    nodes: Vec<GeoNode>,
    /// Undirected edges as (node index, node index, km).
    edges: Vec<(usize, usize, f64)>,
    /// Sorted adjacency: node index → (neighbor index, km).
    adjacency: Vec<Vec<(usize, f64)>>,
    index: BTreeMap<String, usize>,
}

impl HighwayNetwork {
    pub fn new(
        nodes: Vec<GeoNode>,
        edges_by_id: Vec<(String, String, f64)>,
    ) -> Result<Self, HighwayError> {
        let mut index = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if !(-90.0..=90.0).contains(&n.lat) || !(-180.0..=180.0).contains(&n.lon) {
                return Err(HighwayError::Invalid(format!(
                    "node {}: coordinates ({}, {}) out of range",
                    n.id, n.lat, n.lon
                )));
            }
            if index.insert(n.id.clone(), i).is_some() {
                return Err(HighwayError::Invalid(format!("duplicate node id {}", n.id)));
            }
        }
        let mut edges = Vec::with_capacity(edges_by_id.len());
        for (from, to, km) in edges_by_id {
            let a = *index
                .get(&from)
                .ok_or_else(|| HighwayError::UnknownNode(from.clone()))?;
            let b = *index
                .get(&to)
                .ok_or_else(|| HighwayError::UnknownNode(to.clone()))?;
            if a == b {
                return Err(HighwayError::Invalid(format!("self-loop at {from}")));
            }
            if !(km > 0.0) || !km.is_finite() {
                return Err(HighwayError::Invalid(format!(
                    "edge {from}-{to}: length must be positive, got {km}"
                )));
            }
            edges.push((a, b, km));
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(a, b, km) in &edges {
            adjacency[a].push((b, km));
            adjacency[b].push((a, km));
        }
        for adj in &mut adjacency {
            adj.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        }
        Ok(HighwayNetwork {
            nodes,
            edges,
            adjacency,
            index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: usize) -> &GeoNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[GeoNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Result<usize, HighwayError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| HighwayError::UnknownNode(id.to_string()))
    }

    /// Shortest distances from `source` to every node (infinity where
    /// unreachable).
    fn dijkstra(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        dist[source] = 0.0;
        let mut heap: BinaryHeap<Reverse<(OrdF64, usize)>> = BinaryHeap::new();
        heap.push(Reverse((OrdF64(0.0), source)));
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        dist
    }
}

/// Total order wrapper so distances can live in the heap.
#[derive(PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A routed trip: node sequence, directed arcs, cumulative distances and the
/// number of refueling occasions for the configured range.
#[derive(Debug, Clone)]
pub struct TripPath {
    pub trip_id: String,
    /// Node indices from origin to destination.
    pub node_sequence: Vec<usize>,
    /// Directed arcs (j, k) connecting consecutive sequence nodes.
    pub arcs: Vec<(usize, usize)>,
    /// Cumulative km from the origin, aligned with `node_sequence`.
    pub cumulative_km: Vec<f64>,
    pub total_distance_km: f64,
    pub refuel_occasions: u32,
}

impl TripPath {
    /// Position of a node within the sequence, if it lies on the path.
    pub fn position(&self, node: usize) -> Option<usize> {
        self.node_sequence.iter().position(|&n| n == node)
    }

    /// Path distance between two sequence positions.
    pub fn distance_between(&self, from_pos: usize, to_pos: usize) -> f64 {
        (self.cumulative_km[to_pos] - self.cumulative_km[from_pos]).abs()
    }
}

/// Number of refuel events needed to cover `total_km` with `range_km` per
/// tank: `ceil(total/range)`, at least one.
pub fn refuel_occasions(total_km: f64, range_km: f64) -> Result<u32, HighwayError> {
    if !(range_km > 0.0) {
        return Err(HighwayError::Domain(format!(
            "vehicle range must be positive, got {range_km}"
        )));
    }
    if !(total_km > 0.0) {
        return Err(HighwayError::Domain(format!(
            "trip distance must be positive, got {total_km}"
        )));
    }
    Ok(((total_km / range_km).ceil() as u32).max(1))
}

/// Routes a trip on its shortest path. Among equal-length paths the
/// lexicographically smallest node-id sequence wins: after computing
/// distances to the destination, the path is grown greedily from the origin,
/// always stepping to the smallest-id neighbor that still lies on a shortest
/// path.
pub fn shortest_path(
    net: &HighwayNetwork,
    trip: &ODTrip,
    range_km: f64,
) -> Result<TripPath, HighwayError> {
    let origin = net.index_of(&trip.origin)?;
    let destination = net.index_of(&trip.destination)?;
    let dist_to_dest = net.dijkstra(destination);
    if !dist_to_dest[origin].is_finite() {
        return Err(HighwayError::Unreachable {
            origin: trip.origin.clone(),
            destination: trip.destination.clone(),
        });
    }
    let total = dist_to_dest[origin];
    let mut sequence = vec![origin];
    let mut cumulative = vec![0.0];
    let mut current = origin;
    while current != destination {
        let remaining = dist_to_dest[current];
        let mut next: Option<(usize, f64)> = None;
        for &(v, w) in &net.adjacency[current] {
            let on_shortest =
                (w + dist_to_dest[v] - remaining).abs() <= 1e-9 * (1.0 + remaining);
            if on_shortest {
                let better = match next {
                    None => true,
                    Some((best, _)) => net.node(v).id < net.node(best).id,
                };
                if better {
                    next = Some((v, w));
                }
            }
        }
        let (v, w) = next.ok_or_else(|| HighwayError::Invalid(
            "shortest-path reconstruction lost the route (inconsistent distances)".into(),
        ))?;
        cumulative.push(cumulative.last().unwrap() + w);
        sequence.push(v);
        current = v;
    }
    let arcs = sequence.windows(2).map(|w| (w[0], w[1])).collect();
    Ok(TripPath {
        trip_id: trip.id.clone(),
        node_sequence: sequence,
        arcs,
        total_distance_km: total,
        refuel_occasions: refuel_occasions(total, range_km)?,
    })
}

/// Drops trips at or below the minimum distance and degenerate same-node
/// trips. Takes routed pairs so the decision uses actual path lengths.
pub fn filter_trips(
    routed: Vec<(ODTrip, TripPath)>,
    min_km: f64,
) -> Vec<(ODTrip, TripPath)> {
    routed
        .into_iter()
        .filter(|(trip, path)| trip.origin != trip.destination && path.total_distance_km > min_km)
        .collect()
}

/// Candidate stations able to refuel one directed arc of a path.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub trip_id: String,
    /// Index of the arc within the path's arc list.
    pub arc_index: usize,
    /// Arc endpoints as node indices (j, k).
    pub arc: (usize, usize),
    /// Candidate node indices, ordered by path position.
    pub members: Vec<usize>,
    /// Whether the arc is already reachable on the initial fuel.
    pub pre_covered: bool,
}

/// Builds one candidate set per arc: candidates at or before the arc tail
/// whose path distance to the arc head fits within the range. An arc whose
/// head lies within `initial_fuel_km` of the origin is flagged pre-covered.
pub fn build_candidate_sets(
    net: &HighwayNetwork,
    path: &TripPath,
    range_km: f64,
    initial_fuel_km: f64,
) -> Vec<CandidateSet> {
    let mut sets = Vec::with_capacity(path.arcs.len());
    for (arc_index, &(j, k)) in path.arcs.iter().enumerate() {
        let j_pos = arc_index;
        let k_pos = arc_index + 1;
        let mut members = Vec::new();
        for pos in 0..=j_pos {
            let node = path.node_sequence[pos];
            if net.node(node).is_candidate && path.distance_between(pos, k_pos) <= range_km {
                members.push(node);
            }
        }
        sets.push(CandidateSet {
            trip_id: path.trip_id.clone(),
            arc_index,
            arc: (j, k),
            members,
            pre_covered: path.cumulative_km[k_pos] <= initial_fuel_km,
        });
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, lat: f64, lon: f64) -> GeoNode {
        GeoNode {
            id: id.into(),
            lat,
            lon,
            is_candidate: true,
        }
    }

    fn line_network(segment_km: f64) -> HighwayNetwork {
        HighwayNetwork::new(
            vec![node("A", 50.0, 8.0), node("B", 50.5, 8.5), node("C", 51.0, 9.0)],
            vec![
                ("A".into(), "B".into(), segment_km),
                ("B".into(), "C".into(), segment_km),
            ],
        )
        .unwrap()
    }

    #[test]
    fn haversine_coincident_points_is_zero() {
        let a = node("a", 52.52, 13.405);
        assert_eq!(haversine_distance(&a, &a), 0.0);
    }

    #[test]
    fn haversine_berlin_munich_against_law_of_cosines() {
        // Independent spherical-law-of-cosines oracle.
        let (lat1, lon1) = (52.52f64, 13.405f64);
        let (lat2, lon2) = (48.137f64, 11.575f64);
        let oracle = EARTH_RADIUS_KM
            * (lat1.to_radians().sin() * lat2.to_radians().sin()
                + lat1.to_radians().cos()
                    * lat2.to_radians().cos()
                    * (lon2 - lon1).to_radians().cos())
            .acos();
        let a = node("berlin", lat1, lon1);
        let b = node("munich", lat2, lon2);
        let d = haversine_distance(&a, &b);
        assert!((d - oracle).abs() / oracle < 1e-3, "{d} vs {oracle}");
        assert_eq!(d.to_bits(), haversine_distance(&b, &a).to_bits());
    }

    #[test]
    fn haversine_antipodal_is_half_circumference() {
        let a = node("a", 0.0, 0.0);
        let b = node("b", 0.0, 180.0);
        let d = haversine_distance(&a, &b);
        assert!((d - std::f64::consts::PI * EARTH_RADIUS_KM).abs() < 1.0);
    }

    #[test]
    fn single_edge_path() {
        let net = HighwayNetwork::new(
            vec![node("A", 50.0, 8.0), node("B", 50.5, 8.5)],
            vec![("A".into(), "B".into(), 100.0)],
        )
        .unwrap();
        let trip = ODTrip::new("t", "A", "B", 10.0).unwrap();
        let path = shortest_path(&net, &trip, 250.0).unwrap();
        assert_eq!(path.node_sequence, vec![0, 1]);
        assert_eq!(path.total_distance_km, 100.0);
        assert_eq!(path.refuel_occasions, 1);
    }

    #[test]
    fn diamond_tie_breaks_lexicographically() {
        // Two equal routes S-A-T and S-B-T; the A route must win.
        let net = HighwayNetwork::new(
            vec![
                node("S", 50.0, 8.0),
                node("T", 51.0, 9.0),
                node("A", 50.5, 8.2),
                node("B", 50.5, 8.8),
            ],
            vec![
                ("S".into(), "A".into(), 50.0),
                ("A".into(), "T".into(), 50.0),
                ("S".into(), "B".into(), 50.0),
                ("B".into(), "T".into(), 50.0),
            ],
        )
        .unwrap();
        let trip = ODTrip::new("t", "S", "T", 10.0).unwrap();
        let path = shortest_path(&net, &trip, 250.0).unwrap();
        let ids: Vec<&str> = path
            .node_sequence
            .iter()
            .map(|&i| net.node(i).id.as_str())
            .collect();
        assert_eq!(ids, vec!["S", "A", "T"]);
    }

    #[test]
    fn unreachable_pair_errors() {
        let net = HighwayNetwork::new(
            vec![node("A", 50.0, 8.0), node("B", 50.5, 8.5), node("C", 51.0, 9.0)],
            vec![("A".into(), "B".into(), 100.0)],
        )
        .unwrap();
        let trip = ODTrip::new("t", "A", "C", 10.0).unwrap();
        assert!(matches!(
            shortest_path(&net, &trip, 250.0),
            Err(HighwayError::Unreachable { .. })
        ));
    }

    #[test]
    fn refuel_occasion_examples() {
        assert_eq!(refuel_occasions(200.0, 250.0).unwrap(), 1);
        assert_eq!(refuel_occasions(1000.0, 400.0).unwrap(), 3);
        assert_eq!(refuel_occasions(400.0, 400.0).unwrap(), 1);
        assert!(refuel_occasions(100.0, 0.0).is_err());
    }

    #[test]
    fn filter_trips_thresholds() {
        let net = line_network(24.5);
        let mk = |id: &str| ODTrip::new(id, "A", "C", 5.0).unwrap();
        let short = shortest_path(&net, &mk("short"), 250.0).unwrap();
        assert_eq!(short.total_distance_km, 49.0);
        let net2 = line_network(25.5);
        let long = shortest_path(&net2, &mk("long"), 250.0).unwrap();
        let kept = filter_trips(vec![(mk("short"), short), (mk("long"), long)], 50.0);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].0.id, "long");
        assert!(filter_trips(Vec::new(), 50.0).is_empty());
    }

    #[test]
    fn candidate_sets_short_segments() {
        let net = line_network(100.0);
        let trip = ODTrip::new("t", "A", "C", 100.0).unwrap();
        let path = shortest_path(&net, &trip, 250.0).unwrap();
        let sets = build_candidate_sets(&net, &path, 250.0, 250.0);
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].members, vec![0]); // {A}
        assert!(sets[0].pre_covered);
        assert_eq!(sets[1].members, vec![0, 1]); // {A, B}
        assert!(sets[1].pre_covered);
    }

    #[test]
    fn candidate_sets_long_segments() {
        let net = line_network(200.0);
        let trip = ODTrip::new("t", "A", "C", 100.0).unwrap();
        let path = shortest_path(&net, &trip, 250.0).unwrap();
        let sets = build_candidate_sets(&net, &path, 250.0, 250.0);
        // A cannot refuel arc (B, C): A→C is 400 km > 250 km.
        assert_eq!(sets[1].members, vec![1]);
        assert!(!sets[1].pre_covered);
    }

    #[test]
    fn full_range_pre_covers_everything() {
        let net = line_network(100.0);
        let trip = ODTrip::new("t", "A", "C", 100.0).unwrap();
        let path = shortest_path(&net, &trip, 500.0).unwrap();
        let sets = build_candidate_sets(&net, &path, 500.0, 500.0);
        assert!(sets.iter().all(|s| s.pre_covered));
    }

    #[test]
    fn members_always_lie_on_path() {
        let net = line_network(120.0);
        let trip = ODTrip::new("t", "A", "C", 100.0).unwrap();
        let path = shortest_path(&net, &trip, 300.0).unwrap();
        for set in build_candidate_sets(&net, &path, 300.0, 0.0) {
            for &m in &set.members {
                assert!(path.position(m).is_some());
            }
        }
    }
}
