//! Final seroprevalence over a grid of infection rates, with bilinear
//! interpolation between grid points.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_scenario, RunSettings};
use crate::engine::EventSpec;
use crate::error::{Error, Result};
use crate::mobility::TravelMatrices;
use crate::model::ModelParams;
use crate::network::PatchNetwork;

pub const GRID_HEADER: &str = "beta_h,beta_m,seroprevalence";

fn default_horizon() -> f64 {
    400.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub beta_h: Vec<f64>,
    pub beta_m: Vec<f64>,
    /// Days simulated per cell.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
}

fn check_axis(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter {
            name,
            reason: "needs at least one value".into(),
        });
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidParameter {
            name,
            reason: "values must be finite and non-negative".into(),
        });
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter {
            name,
            reason: "values must be strictly increasing".into(),
        });
    }
    Ok(())
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        check_axis("beta_h", &self.beta_h)?;
        check_axis("beta_m", &self.beta_m)?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                reason: format!("must be positive, got {}", self.horizon),
            });
        }
        Ok(())
    }
}

/// Seroprevalence fraction (ever infected over total population) at the
/// horizon; `seroprevalence[a][b]` belongs to `(beta_h[a], beta_m[b])`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    pub beta_h: Vec<f64>,
    pub beta_m: Vec<f64>,
    pub horizon: f64,
    pub seroprevalence: Vec<Vec<f64>>,
}

impl SweepGrid {
    pub fn new(beta_h: Vec<f64>, beta_m: Vec<f64>, horizon: f64, seroprevalence: Vec<Vec<f64>>) -> Result<Self> {
        check_axis("beta_h", &beta_h)?;
        check_axis("beta_m", &beta_m)?;
        if seroprevalence.len() != beta_h.len() || seroprevalence.iter().any(|row| row.len() != beta_m.len()) {
            return Err(Error::InvalidInput("grid values do not match the axes".into()));
        }
        Ok(SweepGrid {
            beta_h,
            beta_m,
            horizon,
            seroprevalence,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(GRID_HEADER);
        out.push('\n');
        for (a, bh) in self.beta_h.iter().enumerate() {
            for (b, bm) in self.beta_m.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", bh, bm, self.seroprevalence[a][b]);
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::network::io::write_text(path.as_ref(), &self.to_csv())
    }
}

/// Runs every grid cell from the same seeded equilibrium. Cells are
/// independent and run in parallel; results are assembled in grid order.
pub fn run_beta_grid(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    base: &ModelParams,
    spec: &GridSpec,
    settings: &RunSettings,
) -> Result<SweepGrid> {
    spec.validate()?;
    let mut settings = settings.clone();
    settings.integrate.t1 = settings.integrate.t0 + spec.horizon;
    settings.integrate.output_interval = spec.horizon;
    settings.integrate.tracked_nodes.clear();
    settings.integrate.snapshot_times.clear();
    let total = network.total_population();
    let cells: Vec<(f64, f64)> = spec
        .beta_h
        .iter()
        .flat_map(|&bh| spec.beta_m.iter().map(move |&bm| (bh, bm)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(bh, bm)| {
            let params = base.with_infection_rates(bh, bm);
            let traj = run_scenario(network, matrices, &params, &EventSpec::default(), &settings)?;
            Ok(traj.seroprevalence.last().copied().unwrap_or(0.0) / total)
        })
        .collect::<Result<Vec<f64>>>()?;
    let rows = values.chunks(spec.beta_m.len()).map(<[f64]>::to_vec).collect();
    SweepGrid::new(spec.beta_h.clone(), spec.beta_m.clone(), spec.horizon, rows)
}

/// Lower index and weight of `x` on a sorted axis; `None` outside the hull.
fn locate(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let (first, last) = (axis[0], *axis.last().unwrap());
    if !(x >= first && x <= last) {
        return None;
    }
    if axis.len() == 1 {
        return Some((0, 0.0));
    }
    let k = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1) - 1;
    let t = (x - axis[k]) / (axis[k + 1] - axis[k]);
    Some((k, t))
}

/// Bilinear blend of the four grid values around `(beta_h, beta_m)`.
pub fn bilinear_interpolate(grid: &SweepGrid, beta_h: f64, beta_m: f64) -> Result<f64> {
    let outside = || {
        Error::InvalidInput(format!(
            "({beta_h}, {beta_m}) lies outside the grid [{}, {}] x [{}, {}]",
            grid.beta_h[0],
            grid.beta_h.last().unwrap(),
            grid.beta_m[0],
            grid.beta_m.last().unwrap()
        ))
    };
    let (a, tx) = locate(&grid.beta_h, beta_h).ok_or_else(outside)?;
    let (b, ty) = locate(&grid.beta_m, beta_m).ok_or_else(outside)?;
    let v = &grid.seroprevalence;
    let a1 = (a + 1).min(grid.beta_h.len() - 1);
    let b1 = (b + 1).min(grid.beta_m.len() - 1);
    Ok((1.0 - tx) * (1.0 - ty) * v[a][b] + tx * (1.0 - ty) * v[a1][b] + (1.0 - tx) * ty * v[a][b1] + tx * ty * v[a1][b1])
}
