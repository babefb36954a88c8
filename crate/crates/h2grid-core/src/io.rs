//! CSV ingestion and artifact export.
//!
//! All inputs are UTF-8 CSV with a header row and dot decimal separator.
//! Errors carry file and line so malformed inputs are reported precisely.
//! Writers emit rows in deterministic order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::catalog::{StationCatalog, StationCostSheet, StationSizeClass};
use crate::coupling::HrsNodeDesign;
use crate::highway::{GeoNode, HighwayNetwork, ODTrip};
use crate::metrics::{LcohBreakdown, LmpSeries, SystemCostReport};
use crate::power::{AcLine, Bus, DcLink, Generator, PowerSystem, StorageUnit};
use crate::siting::SitingSolution;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{file}:{line}: {detail}")]
    Parse {
        file: String,
        line: u64,
        detail: String,
    },
    #[error("{file}: {detail}")]
    File { file: String, detail: String },
}

impl IoError {
    fn file(path: &Path, detail: impl ToString) -> Self {
        IoError::File {
            file: path.display().to_string(),
            detail: detail.to_string(),
        }
    }
}

/// One CSV record with typed, line-attributed field access.
struct Row<'a> {
    file: &'a str,
    line: u64,
    headers: &'a csv::StringRecord,
    record: csv::StringRecord,
}

impl Row<'_> {
    fn raw(&self, name: &str) -> Result<&str, IoError> {
        let idx = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::File {
                file: self.file.to_string(),
                detail: format!("missing column {name}"),
            })?;
        self.record.get(idx).ok_or_else(|| IoError::Parse {
            file: self.file.to_string(),
            line: self.line,
            detail: format!("row too short for column {name}"),
        })
    }

    fn text(&self, name: &str) -> Result<String, IoError> {
        Ok(self.raw(name)?.trim().to_string())
    }

    fn number(&self, name: &str) -> Result<f64, IoError> {
        let raw = self.raw(name)?.trim();
        raw.parse::<f64>().map_err(|_| IoError::Parse {
            file: self.file.to_string(),
            line: self.line,
            detail: format!("column {name}: expected a number, got {raw:?}"),
        })
    }

    /// Empty cell → `None`.
    fn optional_number(&self, name: &str) -> Result<Option<f64>, IoError> {
        let raw = self.raw(name)?.trim();
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse::<f64>().map(Some).map_err(|_| IoError::Parse {
            file: self.file.to_string(),
            line: self.line,
            detail: format!("column {name}: expected a number, got {raw:?}"),
        })
    }

    fn flag(&self, name: &str) -> Result<bool, IoError> {
        let raw = self.raw(name)?.trim();
        match raw {
            "1" | "true" | "TRUE" | "True" | "yes" => Ok(true),
            "0" | "false" | "FALSE" | "False" | "no" => Ok(false),
            other => Err(IoError::Parse {
                file: self.file.to_string(),
                line: self.line,
                detail: format!("column {name}: expected a flag, got {other:?}"),
            }),
        }
    }
}

fn for_each_row(
    path: &Path,
    mut f: impl FnMut(Row) -> Result<(), IoError>,
) -> Result<(), IoError> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| IoError::file(path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| IoError::file(path, e))?
        .clone();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(0);
            IoError::Parse {
                file: file.clone(),
                line,
                detail: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        f(Row {
            file: &file,
            line,
            headers: &headers,
            record,
        })?;
    }
    Ok(())
}

// --- highway ingestion ---------------------------------------------------

pub fn read_nodes(path: &Path) -> Result<Vec<GeoNode>, IoError> {
    let mut nodes = Vec::new();
    for_each_row(path, |row| {
        nodes.push(GeoNode {
            id: row.text("id")?,
            lat: row.number("lat")?,
            lon: row.number("lon")?,
            is_candidate: row.flag("is_candidate")?,
        });
        Ok(())
    })?;
    Ok(nodes)
}

pub fn read_edges(path: &Path) -> Result<Vec<(String, String, f64)>, IoError> {
    let mut edges = Vec::new();
    for_each_row(path, |row| {
        edges.push((row.text("from")?, row.text("to")?, row.number("length_km")?));
        Ok(())
    })?;
    Ok(edges)
}

pub fn read_network(nodes_path: &Path, edges_path: &Path) -> Result<HighwayNetwork, IoError> {
    let nodes = read_nodes(nodes_path)?;
    let edges = read_edges(edges_path)?;
    HighwayNetwork::new(nodes, edges).map_err(|e| IoError::file(nodes_path, e))
}

pub fn read_trips(path: &Path) -> Result<Vec<ODTrip>, IoError> {
    let mut trips = Vec::new();
    for_each_row(path, |row| {
        let trip = ODTrip::new(
            row.text("id")?,
            row.text("origin")?,
            row.text("destination")?,
            row.number("flow_per_day")?,
        )
        .map_err(|e| IoError::Parse {
            file: row.file.to_string(),
            line: row.line,
            detail: e.to_string(),
        })?;
        trips.push(trip);
        Ok(())
    })?;
    Ok(trips)
}

// --- power system ingestion ------------------------------------------------

/// System-level parameters that come from the run configuration rather than
/// the CSV tables.
#[derive(Debug, Clone, Copy)]
pub struct PowerParams {
    pub dt_hours: f64,
    pub co2_cap_t: Option<f64>,
    pub discount_rate: f64,
    pub ac_usable_fraction: f64,
}

impl Default for PowerParams {
    fn default() -> Self {
        PowerParams {
            dt_hours: 2.0,
            co2_cap_t: None,
            discount_rate: 0.07,
            ac_usable_fraction: 0.70,
        }
    }
}

/// Reads a matrix CSV (`snapshot,<id1>,<id2>,…`) into per-column series.
fn read_matrix(path: &Path) -> Result<BTreeMap<String, Vec<f64>>, IoError> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| IoError::file(path, e))?;
    let headers = reader
        .headers()
        .map_err(|e| IoError::file(path, e))?
        .clone();
    let ids: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    let mut columns: BTreeMap<String, Vec<f64>> =
        ids.iter().map(|id| (id.clone(), Vec::new())).collect();
    for result in reader.records() {
        let record = result.map_err(|e| IoError::Parse {
            file: file.clone(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for (i, id) in ids.iter().enumerate() {
            let raw = record.get(i + 1).ok_or_else(|| IoError::Parse {
                file: file.clone(),
                line,
                detail: format!("row too short for column {id}"),
            })?;
            let value = raw.trim().parse::<f64>().map_err(|_| IoError::Parse {
                file: file.clone(),
                line,
                detail: format!("column {id}: expected a number, got {raw:?}"),
            })?;
            columns.get_mut(id).unwrap().push(value);
        }
    }
    Ok(columns)
}

/// Reads a power system from a directory of CSV tables: `buses.csv` and
/// `load.csv` are required; `lines.csv`, `links.csv`, `generators.csv`,
/// `storages.csv` and per-carrier `availability_<carrier>.csv` matrices are
/// optional. The snapshot count is the load matrix length.
pub fn read_power_system(dir: &Path, params: &PowerParams) -> Result<PowerSystem, IoError> {
    let load = read_matrix(&dir.join("load.csv"))?;
    let snapshots = load
        .values()
        .next()
        .map(|v| v.len())
        .ok_or_else(|| IoError::file(&dir.join("load.csv"), "no bus columns"))?;

    let mut sys = PowerSystem::new(snapshots, params.dt_hours);
    sys.co2_cap_t = params.co2_cap_t;
    sys.discount_rate = params.discount_rate;
    sys.ac_usable_fraction = params.ac_usable_fraction;

    for_each_row(&dir.join("buses.csv"), |row| {
        let id = row.text("id")?;
        let series = load.get(&id).cloned().unwrap_or_default();
        sys.buses.push(Bus {
            id,
            lat: row.number("lat")?,
            lon: row.number("lon")?,
            load_mw: series,
        });
        Ok(())
    })?;

    let lines_path = dir.join("lines.csv");
    if lines_path.exists() {
        for_each_row(&lines_path, |row| {
            sys.lines.push(AcLine {
                id: row.text("id")?,
                from: row.text("from")?,
                to: row.text("to")?,
                length_km: row.number("length_km")?,
                reactance: row.number("reactance")?,
                existing_mw: row.number("existing_mw")?,
                capex_eur_per_mw_km: row.number("capex_eur_per_mw_km")?,
                fom_pct: row.number("fom_pct")?,
                lifetime_years: row.number("lifetime_a")?,
            });
            Ok(())
        })?;
    }

    let links_path = dir.join("links.csv");
    if links_path.exists() {
        for_each_row(&links_path, |row| {
            sys.links.push(DcLink {
                id: row.text("id")?,
                from: row.text("from")?,
                to: row.text("to")?,
                length_km: row.number("length_km")?,
                existing_mw: row.number("existing_mw")?,
                max_mw: row.number("max_mw")?,
                inverter_eur_per_mw: row.number("inverter_eur_per_mw")?,
                capex_eur_per_mw_km: row.number("capex_eur_per_mw_km")?,
                fom_pct: row.number("fom_pct")?,
                lifetime_years: row.number("lifetime_a")?,
            });
            Ok(())
        })?;
    }

    let gens_path = dir.join("generators.csv");
    if gens_path.exists() {
        let mut availability: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
        for_each_row(&gens_path, |row| {
            let carrier = row.text("carrier")?;
            let bus = row.text("bus")?;
            if !availability.contains_key(&carrier) {
                let path = dir.join(format!("availability_{carrier}.csv"));
                let matrix = if path.exists() {
                    read_matrix(&path)?
                } else {
                    BTreeMap::new()
                };
                availability.insert(carrier.clone(), matrix);
            }
            let series = availability[&carrier].get(&bus).cloned();
            sys.generators.push(Generator {
                id: row.text("id")?,
                bus,
                carrier,
                capex_eur_per_kw: row.number("capex_eur_per_kw")?,
                fom_pct: row.number("fom_pct")?,
                vom_eur_per_mwh: row.number("vom_eur_per_mwh")?,
                efficiency: row.number("efficiency")?,
                fuel_eur_per_mwh_th: row.number("fuel_eur_per_mwh_th")?,
                co2_t_per_mwh_th: row.number("co2_t_per_mwh_th")?,
                lifetime_years: row.number("lifetime_a")?,
                potential_mw: row
                    .optional_number("potential_mw")?
                    .unwrap_or(f64::INFINITY),
                availability: series,
            });
            Ok(())
        })?;
    }

    let storages_path = dir.join("storages.csv");
    if storages_path.exists() {
        for_each_row(&storages_path, |row| {
            sys.storages.push(StorageUnit {
                id: row.text("id")?,
                bus: row.text("bus")?,
                kind: row.text("kind")?,
                power_capex_eur_per_kw: row.number("power_capex_eur_per_kw")?,
                energy_capex_eur_per_kwh: row.number("energy_capex_eur_per_kwh")?,
                power_fom_pct: row.number("power_fom_pct")?,
                energy_fom_pct: row.number("energy_fom_pct")?,
                fixed_hours: row.optional_number("fixed_hours")?,
                eff_charge: row.number("eff_charge")?,
                eff_discharge: row.number("eff_discharge")?,
                lifetime_years: row.number("lifetime_a")?,
                power_max_mw: row.number("power_max_mw")?,
                energy_max_mwh: row.optional_number("energy_max_mwh")?,
            });
            Ok(())
        })?;
    }
    Ok(sys)
}

/// Optional catalog override: one row per class.
pub fn read_catalog(path: &Path) -> Result<StationCatalog, IoError> {
    let mut classes = Vec::new();
    let mut costs = Vec::new();
    for_each_row(path, |row| {
        let label = row.text("label")?;
        classes.push(StationSizeClass {
            label: label.clone(),
            hdv_per_day: row.number("hdv_per_day")?,
            demand_kg_per_day: row.number("demand_kg_per_day")?,
            low_pressure_storage_kg: row.number("lp_storage_kg")?,
            high_pressure_storage_kg: row.number("hp_storage_kg")?,
            electrolyzer_mw: row.number("electrolyzer_mw")?,
        });
        costs.push(StationCostSheet {
            label,
            high_pressure_storage_meur: row.number("hp_storage_meur")?,
            dispenser_meur: row.number("dispenser_meur")?,
            compressors_meur: row.number("compressors_meur")?,
            cooling_meur: row.number("cooling_meur")?,
            safety_meur: row.number("safety_meur")?,
            total_meur: row.number("total_meur")?,
        });
        Ok(())
    })?;
    Ok(StationCatalog { classes, costs })
}

// --- writers ---------------------------------------------------------------

fn write_file(path: &Path, content: &str) -> Result<(), IoError> {
    fs::write(path, content).map_err(|e| IoError::file(path, e))
}

/// `node_id,open,load_kg_per_day` over every candidate node of the model.
pub fn write_stations_csv(
    path: &Path,
    net: &HighwayNetwork,
    candidates: &[usize],
    solution: &SitingSolution,
) -> Result<(), IoError> {
    let mut out = String::from("node_id,open,load_kg_per_day\n");
    for &node in candidates {
        let open = solution.stations.contains(&node);
        let load = solution.node_load.get(&node).copied().unwrap_or(0.0);
        out.push_str(&format!(
            "{},{},{}\n",
            net.node(node).id,
            if open { 1 } else { 0 },
            load
        ));
    }
    write_file(path, &out)
}

/// Open stations as a GeoJSON point collection with their loads.
pub fn write_stations_geojson(
    path: &Path,
    net: &HighwayNetwork,
    solution: &SitingSolution,
) -> Result<(), IoError> {
    let features: Vec<serde_json::Value> = solution
        .stations
        .iter()
        .map(|&node| {
            let n = net.node(node);
            let load = solution.node_load.get(&node).copied().unwrap_or(0.0);
            serde_json::json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [n.lon, n.lat]},
                "properties": {"node_id": n.id, "load_kg_per_day": load},
            })
        })
        .collect();
    let doc = serde_json::json!({"type": "FeatureCollection", "features": features});
    write_file(path, &format!("{:#}\n", doc))
}

pub fn write_designs_csv(path: &Path, designs: &[(HrsNodeDesign, String, f64)]) -> Result<(), IoError> {
    let mut out = String::from("station,bus,distance_km,P_MW,E_MWh,capex_eur_pa\n");
    for (design, bus, distance) in designs {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            design.station_id, bus, distance, design.electrolyzer_mw, design.store_mwh,
            design.capex_eur_pa
        ));
    }
    write_file(path, &out)
}

pub fn read_designs_csv(path: &Path) -> Result<Vec<(HrsNodeDesign, String, f64)>, IoError> {
    let mut out = Vec::new();
    for_each_row(path, |row| {
        out.push((
            HrsNodeDesign {
                station_id: row.text("station")?,
                electrolyzer_mw: row.number("P_MW")?,
                store_mwh: row.number("E_MWh")?,
                capex_eur_pa: row.number("capex_eur_pa")?,
            },
            row.text("bus")?,
            row.number("distance_km")?,
        ));
        Ok(())
    })?;
    Ok(out)
}

pub fn write_lmp_csv(path: &Path, series: &[LmpSeries]) -> Result<(), IoError> {
    let mut out = String::from("bus,snapshot,price_eur_per_mwh\n");
    for s in series {
        for (t, p) in s.prices.iter().enumerate() {
            out.push_str(&format!("{},{t},{p}\n", s.bus_id));
        }
    }
    write_file(path, &out)
}

pub fn write_lmp_summary_csv(path: &Path, series: &[LmpSeries]) -> Result<(), IoError> {
    let mut out = String::from("bus,mean,median,variance\n");
    for s in series {
        out.push_str(&format!("{},{},{},{}\n", s.bus_id, s.mean, s.median, s.variance));
    }
    write_file(path, &out)
}

pub fn write_cost_report_csv(path: &Path, report: &SystemCostReport) -> Result<(), IoError> {
    let rows = [
        ("total_eur_pa", report.total_eur_pa),
        ("generation_eur_pa", report.generation_eur_pa),
        ("storage_eur_pa", report.storage_eur_pa),
        ("transmission_eur_pa", report.transmission_eur_pa),
        ("hrs_electrolyzers_eur_pa", report.hrs_electrolyzers_eur_pa),
        ("hrs_storage_eur_pa", report.hrs_storage_eur_pa),
        ("relative_eur_per_mwh", report.relative_eur_per_mwh),
        ("expansion_twkm", report.expansion_twkm),
        ("expansion_pct", report.expansion_pct),
    ];
    let mut out = String::from("metric,value\n");
    for (k, v) in rows {
        out.push_str(&format!("{k},{v}\n"));
    }
    write_file(path, &out)
}

pub fn read_cost_report_csv(path: &Path) -> Result<BTreeMap<String, f64>, IoError> {
    let mut out = BTreeMap::new();
    for_each_row(path, |row| {
        out.insert(row.text("metric")?, row.number("value")?);
        Ok(())
    })?;
    Ok(out)
}

pub fn write_lcoh_csv(path: &Path, breakdowns: &[LcohBreakdown]) -> Result<(), IoError> {
    let mut out = String::from(
        "station,lcoh_eur_per_kg,annual_kg,capex_share,capex_electrolyzer_eur_pa,\
         capex_store_eur_pa,capex_connection_eur_pa,capex_expost_eur_pa,\
         opex_electricity_eur_pa,opex_vom_eur_pa\n",
    );
    for b in breakdowns {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            b.station_id,
            b.lcoh_eur_per_kg,
            b.annual_hydrogen_kg,
            b.capex_share,
            b.capex_electrolyzer_eur_pa,
            b.capex_store_eur_pa,
            b.capex_connection_eur_pa,
            b.capex_expost_eur_pa,
            b.opex_electricity_eur_pa,
            b.opex_vom_eur_pa
        ));
    }
    write_file(path, &out)
}

/// Stations colored by LCOH and buses by median nodal price, as one layer
/// each, for GIS inspection.
pub fn write_metrics_geojson(
    path: &Path,
    stations: &[(f64, f64, String, f64)],
    buses: &[(f64, f64, String, f64)],
) -> Result<(), IoError> {
    let mut features = Vec::new();
    for (lon, lat, id, lcoh) in stations {
        features.push(serde_json::json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [lon, lat]},
            "properties": {"layer": "station", "id": id, "lcoh_eur_per_kg": lcoh},
        }));
    }
    for (lon, lat, id, lmp) in buses {
        features.push(serde_json::json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [lon, lat]},
            "properties": {"layer": "bus", "id": id, "median_lmp_eur_per_mwh": lmp},
        }));
    }
    let doc = serde_json::json!({"type": "FeatureCollection", "features": features});
    write_file(path, &format!("{:#}\n", doc))
}

/// Minimal SVG bar chart of the cost categories.
pub fn write_cost_chart_svg(path: &Path, report: &SystemCostReport) -> Result<(), IoError> {
    let bars = [
        ("generation", report.generation_eur_pa),
        ("storage", report.storage_eur_pa),
        ("transmission", report.transmission_eur_pa),
        ("hrs electrolyzers", report.hrs_electrolyzers_eur_pa),
        ("hrs storage", report.hrs_storage_eur_pa),
    ];
    let max = bars.iter().map(|(_, v)| v.abs()).fold(1.0f64, f64::max);
    let width = 480.0;
    let bar_h = 28.0;
    let gap = 12.0;
    let height = bars.len() as f64 * (bar_h + gap) + gap;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n",
        w = width + 220.0,
        h = height
    );
    for (i, (label, value)) in bars.iter().enumerate() {
        let y = gap + i as f64 * (bar_h + gap);
        let w = (value.abs() / max * width).max(1.0);
        svg.push_str(&format!(
            "  <rect x=\"160\" y=\"{y}\" width=\"{w:.1}\" height=\"{bar_h}\" fill=\"#4878a8\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"8\" y=\"{ty:.1}\" font-family=\"sans-serif\" font-size=\"13\">{label}</text>\n",
            ty = y + bar_h * 0.7
        ));
        svg.push_str(&format!(
            "  <text x=\"{tx:.1}\" y=\"{ty:.1}\" font-family=\"sans-serif\" font-size=\"12\">{v:.3e} €/a</text>\n",
            tx = 160.0 + w + 6.0,
            ty = y + bar_h * 0.7,
            v = value
        ));
    }
    svg.push_str("</svg>\n");
    write_file(path, &svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn nodes_round_trip() {
        let f = temp_csv("id,lat,lon,is_candidate\nn1,50.0,8.5,1\nn2,51.25,9.75,0\n");
        let nodes = read_nodes(f.path()).unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[0].id, "n1");
        assert!(nodes[0].is_candidate);
        assert!(!nodes[1].is_candidate);
        assert_eq!(nodes[1].lat, 51.25);
    }

    #[test]
    fn parse_error_carries_line_number() {
        let f = temp_csv("id,lat,lon,is_candidate\nn1,50.0,8.5,1\nn2,abc,9.75,0\n");
        match read_nodes(f.path()) {
            Err(IoError::Parse { line, detail, .. }) => {
                assert_eq!(line, 3);
                assert!(detail.contains("lat"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn trips_reject_degenerate_rows() {
        let f = temp_csv("id,origin,destination,flow_per_day\nq1,a,a,5\n");
        assert!(matches!(read_trips(f.path()), Err(IoError::Parse { .. })));
    }

    #[test]
    fn matrix_reader_keeps_columns() {
        let f = temp_csv("snapshot,b1,b2\n0,1.5,2.5\n1,3.5,4.5\n");
        let m = read_matrix(f.path()).unwrap();
        assert_eq!(m["b1"], vec![1.5, 3.5]);
        assert_eq!(m["b2"], vec![2.5, 4.5]);
    }

    #[test]
    fn designs_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("designs.csv");
        let designs = vec![(
            HrsNodeDesign {
                station_id: "s1".into(),
                electrolyzer_mw: 1.25,
                store_mwh: 17.5,
                capex_eur_pa: 123456.789,
            },
            "b1".to_string(),
            12.5,
        )];
        write_designs_csv(&path, &designs).unwrap();
        let back = read_designs_csv(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].0.station_id, "s1");
        assert_eq!(back[0].0.electrolyzer_mw, 1.25);
        assert_eq!(back[0].1, "b1");
        assert_eq!(back[0].2, 12.5);
    }
}
