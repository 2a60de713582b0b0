//! Robustness to the random destination draw: the same scenario over
//! independently regenerated travel tables.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_scenario, RunSettings};
use crate::engine::EventSpec;
use crate::error::{Error, Result};
use crate::mobility::{generate_travel_matrices, MobilityGenConfig};
use crate::model::ModelParams;
use crate::network::PatchNetwork;

pub const STATS_HEADER: &str = "t_days,node_id,min,q1,median,q3,max,sd";
pub const NETWORK_STATS_HEADER: &str = "t_days,min,q1,median,q3,max,sd";
pub const SD_TABLE_HEADER: &str = "node_id,population,max_sd,t_max_sd,sd_percent_population";

fn default_replicates() -> usize {
    30
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplicateConfig {
    #[serde(default = "default_replicates")]
    pub n_replicates: usize,
    #[serde(default)]
    pub observed_nodes: Vec<usize>,
}

impl Default for ReplicateConfig {
    fn default() -> Self {
        ReplicateConfig {
            n_replicates: default_replicates(),
            observed_nodes: Vec::new(),
        }
    }
}

/// Per-replicate mobility seeds drawn from one master seed.
pub fn replicate_seeds(master_seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// Order statistics and sample standard deviation of one sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub sd: f64,
}

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Summary {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
        sd: var.sqrt(),
    }
}

/// Largest standard deviation over time, for one node or the network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SdSummary {
    /// `None` for the network-level row.
    pub node: Option<usize>,
    pub population: f64,
    pub max_sd: f64,
    pub t_max_sd: f64,
    pub sd_percent: f64,
}

fn sd_summary(node: Option<usize>, population: f64, times: &[f64], stats: &[Summary]) -> SdSummary {
    let k = crate::engine::first_argmax(stats.iter().map(|s| s.sd)).expect("at least one output");
    let max_sd = stats[k].sd;
    SdSummary {
        node,
        population,
        max_sd,
        t_max_sd: times[k],
        sd_percent: if population > 0.0 { 100.0 * max_sd / population } else { 0.0 },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicateStats {
    pub seeds: Vec<u64>,
    pub times: Vec<f64>,
    pub observed_nodes: Vec<usize>,
    /// `node_stats[m][k]`: `I_H` present at observed node `m`, output `k`.
    pub node_stats: Vec<Vec<Summary>>,
    /// Total `I_H` over the network.
    pub network_stats: Vec<Summary>,
    pub node_sd: Vec<SdSummary>,
    pub network_sd: SdSummary,
}

impl ReplicateStats {
    pub fn stats_csv(&self) -> String {
        let mut out = String::from(STATS_HEADER);
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            for (m, node) in self.observed_nodes.iter().enumerate() {
                let s = &self.node_stats[m][k];
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    t, node, s.min, s.q1, s.median, s.q3, s.max, s.sd
                );
            }
        }
        out
    }

    pub fn network_csv(&self) -> String {
        let mut out = String::from(NETWORK_STATS_HEADER);
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.network_stats) {
            let _ = writeln!(out, "{},{},{},{},{},{},{}", t, s.min, s.q1, s.median, s.q3, s.max, s.sd);
        }
        out
    }

    /// Per-node maximum deviation, its date and its share of the node
    /// population, closed by the network row.
    pub fn sd_table_csv(&self) -> String {
        let mut out = String::from(SD_TABLE_HEADER);
        out.push('\n');
        for row in self.node_sd.iter().chain(std::iter::once(&self.network_sd)) {
            let id = row.node.map_or_else(|| "network".to_string(), |n| n.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                id, row.population, row.max_sd, row.t_max_sd, row.sd_percent
            );
        }
        out
    }
}

struct ReplicateSeries {
    times: Vec<f64>,
    nodes: Vec<Vec<f64>>,
    total: Vec<f64>,
}

/// Runs the scenario once per seed, each with travel tables regenerated from
/// `gen` with that seed. Population and leave rates are unchanged; only the
/// destinations differ.
pub fn run_replicates_with_seeds(
    network: &PatchNetwork,
    gen: &MobilityGenConfig,
    params: &ModelParams,
    settings: &RunSettings,
    seeds: &[u64],
    observed_nodes: &[usize],
) -> Result<ReplicateStats> {
    if seeds.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "n_replicates",
            reason: format!("needs at least 2 replicates, got {}", seeds.len()),
        });
    }
    if let Some(&bad) = observed_nodes.iter().find(|&&k| k >= network.len()) {
        return Err(Error::NodeOutOfRange {
            index: bad,
            count: network.len(),
        });
    }
    let mut settings = settings.clone();
    settings.integrate.tracked_nodes = observed_nodes.to_vec();
    settings.integrate.snapshot_times.clear();
    let runs = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = MobilityGenConfig { seed, ..gen.clone() };
            let matrices = generate_travel_matrices(network, &cfg)?;
            let traj = run_scenario(network, &matrices, params, &EventSpec::default(), &settings)?;
            let nodes = (0..observed_nodes.len())
                .map(|m| traj.node_series.iter().map(|row| row[m].i_h_present).collect())
                .collect();
            Ok(ReplicateSeries {
                total: traj.infected(),
                times: traj.times,
                nodes,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let times = runs[0].times.clone();
    let across = |pick: &dyn Fn(&ReplicateSeries) -> &[f64]| -> Vec<Summary> {
        (0..times.len())
            .map(|k| summarize(&runs.iter().map(|r| pick(r)[k]).collect::<Vec<_>>()))
            .collect()
    };
    let node_stats: Vec<Vec<Summary>> = (0..observed_nodes.len())
        .map(|m| across(&|r: &ReplicateSeries| &r.nodes[m]))
        .collect();
    let network_stats = across(&|r: &ReplicateSeries| &r.total);
    let node_sd = observed_nodes
        .iter()
        .zip(&node_stats)
        .map(|(&node, stats)| sd_summary(Some(node), network.nodes()[node].population, &times, stats))
        .collect();
    let network_sd = sd_summary(None, network.total_population(), &times, &network_stats);
    Ok(ReplicateStats {
        seeds: seeds.to_vec(),
        times,
        observed_nodes: observed_nodes.to_vec(),
        node_stats,
        network_stats,
        node_sd,
        network_sd,
    })
}

/// [`run_replicates_with_seeds`] with seeds split from `master_seed`.
pub fn run_replicates(
    network: &PatchNetwork,
    gen: &MobilityGenConfig,
    params: &ModelParams,
    settings: &RunSettings,
    master_seed: u64,
    cfg: &ReplicateConfig,
) -> Result<ReplicateStats> {
    let seeds = replicate_seeds(master_seed, cfg.n_replicates);
    run_replicates_with_seeds(network, gen, params, settings, &seeds, &cfg.observed_nodes)
}
