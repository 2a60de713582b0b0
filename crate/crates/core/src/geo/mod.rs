//! Road-intersection and population-grid ingestion.

mod synth;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use log::warn;
use serde::Deserialize;

pub use synth::{synthesize_island, IslandConfig};

use crate::error::{Error, Result};
use crate::network::io::read_records;

pub const CELLS_HEADER: &str = "x0_m,y0_m,size_m,population";
pub const INTERSECTIONS_HEADER: &str = "x_m,y_m";

/// Square population cell `[x0, x0 + size) × [y0, y0 + size)`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct GridCell {
    #[serde(rename = "x0_m")]
    pub x0: f64,
    #[serde(rename = "y0_m")]
    pub y0: f64,
    #[serde(rename = "size_m")]
    pub size: f64,
    pub population: u64,
}

impl GridCell {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x0 + self.size && y >= self.y0 && y < self.y0 + self.size
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x0 + 0.5 * self.size, self.y0 + 0.5 * self.size)
    }
}

/// Result of spreading cell populations over nodes. Nodes spawned for
/// populated cells without intersections are appended after the input ones.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub coords: Vec<(f64, f64)>,
    pub populations: Vec<u64>,
    pub created: usize,
}

/// Removes exact coordinate repeats, keeping first occurrences in order.
pub fn dedup_coordinates(points: &[(f64, f64)]) -> (Vec<(f64, f64)>, usize) {
    let mut seen = HashSet::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for &(x, y) in points {
        // Normalize -0.0 so it collides with 0.0.
        let key = ((x + 0.0).to_bits(), (y + 0.0).to_bits());
        if seen.insert(key) {
            out.push((x, y));
        }
    }
    let removed = points.len() - out.len();
    (out, removed)
}

/// Reads `intersections.csv` (planar meters) and collapses exact duplicates.
pub fn load_intersections(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        x_m: f64,
        y_m: f64,
    }
    let path = path.as_ref();
    let rows: Vec<Row> = read_records(path, &["x_m", "y_m"])?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: "no nodes".into(),
        });
    }
    let mut points = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        if !r.x_m.is_finite() || !r.y_m.is_finite() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: k as u64 + 2,
                message: "non-finite coordinate".into(),
            });
        }
        points.push((r.x_m, r.y_m));
    }
    let (points, removed) = dedup_coordinates(&points);
    if removed > 0 {
        warn!("{}: collapsed {removed} duplicate intersections", path.display());
    }
    Ok(points)
}

pub fn load_cells(path: impl AsRef<Path>) -> Result<Vec<GridCell>> {
    let path = path.as_ref();
    let cells: Vec<GridCell> = read_records(path, &["x0_m", "y0_m", "size_m", "population"])?;
    for (k, c) in cells.iter().enumerate() {
        if !(c.size > 0.0 && c.size.is_finite() && c.x0.is_finite() && c.y0.is_finite()) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: k as u64 + 2,
                message: format!("invalid cell geometry ({}, {}, {})", c.x0, c.y0, c.size),
            });
        }
    }
    Ok(cells)
}

/// Cell lookup: a hash on lattice indices when all cells share one size and
/// lie on a common lattice, a linear scan otherwise. The first listed cell
/// wins on overlaps.
struct CellIndex<'a> {
    cells: &'a [GridCell],
    lattice: Option<Lattice>,
}

/// Origin x, origin y, cell size and the cell at each lattice index.
type Lattice = (f64, f64, f64, HashMap<(i64, i64), usize>);

impl<'a> CellIndex<'a> {
    fn new(cells: &'a [GridCell]) -> Self {
        let lattice = cells.first().and_then(|c0| {
            let (ox, oy, size) = (c0.x0, c0.y0, c0.size);
            let mut map = HashMap::with_capacity(cells.len());
            for (k, c) in cells.iter().enumerate() {
                let fx = (c.x0 - ox) / size;
                let fy = (c.y0 - oy) / size;
                if c.size != size || fx.fract() != 0.0 || fy.fract() != 0.0 {
                    return None;
                }
                map.entry((fx as i64, fy as i64)).or_insert(k);
            }
            Some((ox, oy, size, map))
        });
        CellIndex { cells, lattice }
    }

    fn locate(&self, x: f64, y: f64) -> Option<usize> {
        match &self.lattice {
            Some((ox, oy, size, map)) => {
                let key = (((x - ox) / size).floor() as i64, ((y - oy) / size).floor() as i64);
                let k = *map.get(&key)?;
                // Guard the half-open edges against rounding in the division.
                self.cells[k].contains(x, y).then_some(k)
            }
            None => self.cells.iter().position(|c| c.contains(x, y)),
        }
    }
}

/// Splits each cell's population evenly over the nodes inside it; the
/// integer remainder goes one resident each to the lowest node ids. A
/// populated cell without nodes gets one new node at its center.
pub fn distribute_population(cells: &[GridCell], nodes: &[(f64, f64)]) -> Distribution {
    let index = CellIndex::new(cells);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cells.len()];
    let mut outside = 0usize;
    for (id, &(x, y)) in nodes.iter().enumerate() {
        match index.locate(x, y) {
            Some(k) => members[k].push(id),
            None => outside += 1,
        }
    }
    if outside > 0 {
        warn!("{outside} nodes lie outside every population cell and get no residents");
    }
    let mut coords = nodes.to_vec();
    let mut populations = vec![0u64; nodes.len()];
    let mut created = 0;
    for (cell, ids) in cells.iter().zip(&members) {
        if ids.is_empty() {
            if cell.population > 0 {
                coords.push(cell.center());
                populations.push(cell.population);
                created += 1;
            }
            continue;
        }
        let count = ids.len() as u64;
        let (share, remainder) = (cell.population / count, cell.population % count);
        for (rank, &id) in ids.iter().enumerate() {
            populations[id] = share + u64::from((rank as u64) < remainder);
        }
    }
    Distribution {
        coords,
        populations,
        created,
    }
}

/// Equirectangular projection about the centroid of `lonlat` (degrees) to
/// planar meters. Adequate over an island-sized extent.
pub fn project_lonlat(lonlat: &[(f64, f64)]) -> Vec<(f64, f64)> {
    const EARTH_RADIUS_M: f64 = 6_371_008.8;
    if lonlat.is_empty() {
        return Vec::new();
    }
    let n = lonlat.len() as f64;
    let lon0 = lonlat.iter().map(|p| p.0).sum::<f64>() / n;
    let lat0 = lonlat.iter().map(|p| p.1).sum::<f64>() / n;
    let scale_x = EARTH_RADIUS_M * lat0.to_radians().cos();
    lonlat
        .iter()
        .map(|&(lon, lat)| {
            (
                scale_x * (lon - lon0).to_radians(),
                EARTH_RADIUS_M * (lat - lat0).to_radians(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn cell(x0: f64, y0: f64, population: u64) -> GridCell {
        GridCell {
            x0,
            y0,
            size: 1000.0,
            population,
        }
    }

    #[test]
    fn even_split() {
        let nodes = [(100.0, 100.0), (200.0, 200.0), (300.0, 300.0), (400.0, 400.0)];
        let d = distribute_population(&[cell(0.0, 0.0, 100)], &nodes);
        assert_eq!(d.populations, vec![25; 4]);
        assert_eq!(d.created, 0);
    }

    #[test]
    fn remainder_to_lowest_ids() {
        let nodes = [(100.0, 100.0), (200.0, 200.0), (300.0, 300.0)];
        let d = distribute_population(&[cell(0.0, 0.0, 10)], &nodes);
        assert_eq!(d.populations, vec![4, 3, 3]);
    }

    #[test]
    fn empty_populated_cell_spawns_center_node() {
        let d = distribute_population(&[cell(0.0, 0.0, 100), cell(1000.0, 0.0, 0)], &[]);
        assert_eq!(d.coords, vec![(500.0, 500.0)]);
        assert_eq!(d.populations, vec![100]);
        assert_eq!(d.created, 1);
    }

    #[test]
    fn half_open_boundaries_and_outside_nodes() {
        let cells = [cell(0.0, 0.0, 7), cell(1000.0, 0.0, 5)];
        let nodes = [(1000.0, 0.0), (999.999, 10.0), (5000.0, 5000.0)];
        let d = distribute_population(&cells, &nodes);
        assert_eq!(d.populations, vec![5, 7, 0]);
    }

    #[test]
    fn irregular_cells_use_scan() {
        let cells = [
            GridCell {
                x0: 0.0,
                y0: 0.0,
                size: 500.0,
                population: 9,
            },
            cell(700.0, 0.0, 4),
        ];
        let nodes = [(100.0, 100.0), (800.0, 100.0), (900.0, 100.0)];
        let d = distribute_population(&cells, &nodes);
        assert_eq!(d.populations, vec![9, 2, 2]);
        let total: u64 = d.populations.iter().sum();
        assert_eq!(total, 13);
    }

    #[test]
    fn intersections_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("intersections.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "x_m,y_m\n0,0\n10,0\n0,0\n5,5").unwrap();
        drop(f);
        assert_eq!(load_intersections(&path).unwrap(), vec![(0.0, 0.0), (10.0, 0.0), (5.0, 5.0)]);

        std::fs::write(&path, "x_m,y_m\n").unwrap();
        let err = load_intersections(&path).unwrap_err().to_string();
        assert!(err.contains("no nodes"), "{err}");

        std::fs::write(&path, "x_m,y_m\n1,2\nabc,3\n").unwrap();
        let err = load_intersections(&path).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        std::fs::write(&path, "x_m,y_m\n1,NaN\n").unwrap();
        assert!(load_intersections(&path).is_err());
    }

    #[test]
    fn projection_is_locally_metric() {
        let pts = project_lonlat(&[(55.5, -21.1), (55.51, -21.1)]);
        let dx = pts[1].0 - pts[0].0;
        let expected = 6_371_008.8 * 0.01f64.to_radians() * (-21.1f64).to_radians().cos();
        assert!((dx - expected).abs() < 1e-6);
        assert!((pts[0].1 - pts[1].1).abs() < 1e-9);
    }
}
