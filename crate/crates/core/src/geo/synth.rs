//! Synthetic islands: clustered intersections over a rectangle, with
//! residents apportioned through a coarse population grid.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use super::{distribute_population, GridCell};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::network::{Bounds, PatchNetwork, DEFAULT_D_MAX};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IslandConfig {
    pub node_count: usize,
    pub width_m: f64,
    pub height_m: f64,
    pub population_total: u64,
    /// Towns around which most intersections gather.
    pub cluster_count: usize,
    /// Standard deviation of a town, meters.
    pub cluster_spread_m: f64,
    /// Share of intersections scattered uniformly instead of in towns.
    pub background_fraction: f64,
    /// Side of the population grid cells, meters.
    pub cell_size_m: f64,
    pub d_max: f64,
    pub seed: u64,
}

impl Default for IslandConfig {
    fn default() -> Self {
        IslandConfig {
            node_count: 500,
            width_m: 8000.0,
            height_m: 6000.0,
            population_total: 50_000,
            cluster_count: 6,
            cluster_spread_m: 600.0,
            background_fraction: 0.2,
            cell_size_m: 1000.0,
            d_max: DEFAULT_D_MAX,
            seed: 0,
        }
    }
}

impl IslandConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::InvalidParameter {
                name: "node_count",
                reason: "must be at least 1".into(),
            });
        }
        let positive = [
            ("width_m", self.width_m),
            ("height_m", self.height_m),
            ("cell_size_m", self.cell_size_m),
            ("d_max", self.d_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        if !(self.cluster_spread_m >= 0.0 && self.cluster_spread_m.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "cluster_spread_m",
                reason: format!("must be non-negative, got {}", self.cluster_spread_m),
            });
        }
        if !(0.0..=1.0).contains(&self.background_fraction) {
            return Err(Error::InvalidParameter {
                name: "background_fraction",
                reason: format!("must lie in [0, 1], got {}", self.background_fraction),
            });
        }
        Ok(())
    }
}

/// Integer apportionment of `total` proportional to `weights` by largest
/// remainders; ties go to the lower index.
pub fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || !(sum > 0.0) {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&k| weights[k] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(assigned);
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        out[k] += 1;
        left -= 1;
    }
    out
}

fn place_nodes(cfg: &IslandConfig, rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let (w, h) = (cfg.width_m, cfg.height_m);
    let centers: Vec<(f64, f64)> = (0..cfg.cluster_count)
        .map(|_| (rng.gen_range(0.1 * w..0.9 * w), rng.gen_range(0.1 * h..0.9 * h)))
        .collect();
    let spread = Normal::new(0.0, cfg.cluster_spread_m).expect("validated spread");
    let mut seen = HashSet::with_capacity(cfg.node_count);
    let mut points = Vec::with_capacity(cfg.node_count);
    while points.len() < cfg.node_count {
        let in_town = !centers.is_empty() && rng.gen::<f64>() >= cfg.background_fraction;
        let (x, y) = if in_town {
            let (cx, cy) = centers[rng.gen_range(0..centers.len())];
            (cx + spread.sample(rng), cy + spread.sample(rng))
        } else {
            (rng.gen_range(0.0..w), rng.gen_range(0.0..h))
        };
        if !(0.0..w).contains(&x) || !(0.0..h).contains(&y) {
            continue;
        }
        if seen.insert((x.to_bits(), y.to_bits())) {
            points.push((x, y));
        }
    }
    points
}

/// Residents per node: the grid cells get shares proportional to their
/// node count times a random factor in [0.5, 1.5), then each cell is split
/// evenly over its nodes.
fn assign_population(cfg: &IslandConfig, points: &[(f64, f64)], rng: &mut ChaCha8Rng) -> Vec<u64> {
    let size = cfg.cell_size_m;
    let nx = (cfg.width_m / size).ceil().max(1.0) as usize;
    let ny = (cfg.height_m / size).ceil().max(1.0) as usize;
    let mut counts = vec![0usize; nx * ny];
    for &(x, y) in points {
        let ix = ((x / size) as usize).min(nx - 1);
        let iy = ((y / size) as usize).min(ny - 1);
        counts[iy * nx + ix] += 1;
    }
    let weights: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let factor: f64 = rng.gen_range(0.5..1.5);
            c as f64 * factor
        })
        .collect();
    let shares = apportion(cfg.population_total, &weights);
    let cells: Vec<GridCell> = (0..nx * ny)
        .map(|k| GridCell {
            x0: (k % nx) as f64 * size,
            y0: (k / nx) as f64 * size,
            size,
            population: shares[k],
        })
        .collect();
    let dist = distribute_population(&cells, points);
    debug_assert_eq!(dist.created, 0);
    dist.populations
}

/// Builds a synthetic island: clustered nodes, grid-apportioned residents,
/// Voronoi areas inside the rectangle, capacities and kernel edges.
pub fn synthesize_island(cfg: &IslandConfig, params: &ModelParams) -> Result<PatchNetwork> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points = place_nodes(cfg, &mut rng);
    let populations: Vec<f64> = assign_population(cfg, &points, &mut rng)
        .into_iter()
        .map(|p| p as f64)
        .collect();
    let bounds = Bounds::rectangle(0.0, 0.0, cfg.width_m, cfg.height_m)?;
    PatchNetwork::build(&points, &populations, &bounds, params, cfg.d_max)
}
