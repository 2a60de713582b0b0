//! `nodes.csv` and `mosq_edges.csv`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{Bounds, KernelEdge, PatchNetwork};
use crate::error::{Error, Result};
use crate::model::ModelParams;

pub const NODES_HEADER: &str = "id,x_m,y_m,population,area_m2";
pub const EDGES_HEADER: &str = "i,j,distance_m,weight";

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub x_m: f64,
    pub y_m: f64,
    pub population: f64,
    #[serde(default)]
    pub area_m2: Option<f64>,
}

#[derive(Deserialize)]
struct EdgeRecord {
    i: usize,
    j: usize,
    distance_m: f64,
    #[allow(dead_code)]
    weight: f64,
}

pub(crate) fn read_records<T: for<'de> Deserialize<'de>>(
    path: &Path,
    required: &[&str],
) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    for &col in required {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: 1,
                message: format!("missing column `{col}`"),
            });
        }
    }
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let record: T = row.map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_nodes(path: impl AsRef<Path>) -> Result<Vec<NodeRecord>> {
    let path = path.as_ref();
    let records: Vec<NodeRecord> = read_records(path, &["id", "x_m", "y_m", "population"])?;
    if records.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: "no nodes".into(),
        });
    }
    for (k, r) in records.iter().enumerate() {
        let line = k as u64 + 2;
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        if r.id != k {
            return Err(bad(format!("expected id {k}, found {}", r.id)));
        }
        if !r.x_m.is_finite() || !r.y_m.is_finite() {
            return Err(bad("non-finite coordinate".into()));
        }
        if !(r.population >= 0.0) || !r.population.is_finite() {
            return Err(bad(format!("invalid population {}", r.population)));
        }
        if let Some(a) = r.area_m2 {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(bad(format!("invalid area {a}")));
            }
        }
    }
    Ok(records)
}

/// Builds a network from node records. Missing areas are computed by a
/// Voronoi tessellation of `bounds`, or of the data's bounding box grown by
/// `d_max` when no bounds are given.
pub fn network_from_records(
    records: &[NodeRecord],
    bounds: Option<&Bounds>,
    params: &ModelParams,
    d_max: f64,
    cached_edges: Option<Vec<KernelEdge>>,
) -> Result<PatchNetwork> {
    let coords: Vec<(f64, f64)> = records.iter().map(|r| (r.x_m, r.y_m)).collect();
    let populations: Vec<f64> = records.iter().map(|r| r.population).collect();
    let areas: Vec<f64> = if records.iter().all(|r| r.area_m2.is_some()) {
        records.iter().map(|r| r.area_m2.unwrap()).collect()
    } else {
        let fallback;
        let bounds = match bounds {
            Some(b) => b,
            None => {
                fallback = Bounds::around(&coords, d_max)?;
                &fallback
            }
        };
        let computed = super::voronoi_areas(&coords, bounds)?;
        records
            .iter()
            .zip(computed)
            .map(|(r, a)| r.area_m2.unwrap_or(a))
            .collect()
    };
    match cached_edges {
        None => PatchNetwork::from_areas(&coords, &populations, &areas, params, d_max),
        Some(edges) => {
            super::voronoi::check_distinct(&coords)?;
            let base = PatchNetwork::from_areas(&coords, &populations, &areas, params, d_max)?;
            PatchNetwork::with_edges(base.nodes().to_vec(), d_max, edges)
        }
    }
}

pub fn nodes_csv(network: &PatchNetwork) -> String {
    let mut out = String::from(NODES_HEADER);
    out.push('\n');
    for n in network.nodes() {
        let _ = writeln!(out, "{},{},{},{},{}", n.id, n.x, n.y, n.population, n.area);
    }
    out
}

pub fn edges_csv(network: &PatchNetwork) -> String {
    let mut out = String::from(EDGES_HEADER);
    out.push('\n');
    for e in network.edges() {
        let _ = writeln!(out, "{},{},{},{}", e.i, e.j, e.distance, e.weight);
    }
    out
}

pub fn read_edges(path: impl AsRef<Path>) -> Result<Vec<KernelEdge>> {
    let path = path.as_ref();
    let records: Vec<EdgeRecord> = read_records(path, &["i", "j", "distance_m", "weight"])?;
    Ok(records
        .into_iter()
        .map(|r| KernelEdge {
            i: r.i,
            j: r.j,
            distance: r.distance_m,
            weight: 0.0,
        })
        .collect())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_nodes(path: impl AsRef<Path>, network: &PatchNetwork) -> Result<()> {
    write_text(path.as_ref(), &nodes_csv(network))
}

pub fn write_edges(path: impl AsRef<Path>, network: &PatchNetwork) -> Result<()> {
    write_text(path.as_ref(), &edges_csv(network))
}
