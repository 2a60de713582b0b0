//! Scenario drivers: spread from one seed, mosquito-mobility ablation,
//! quarantine sweeps, infection-rate grids, mutation runs, comparison with
//! weekly case counts and replicate statistics over regenerated mobility.

pub mod compare;
pub mod grid;
pub mod replicates;
pub mod verify;

use rayon::prelude::*;

pub use compare::{compare_timeseries, read_reference, weekly_new_cases, Comparison};
pub use grid::{bilinear_interpolate, run_beta_grid, GridSpec, SweepGrid};
pub use replicates::{replicate_seeds, run_replicates, ReplicateConfig, ReplicateStats};

use crate::engine::{AquaticMode, EventSpec, IntegrateOptions, Mutation, Quarantine, Simulation, Trajectory};
use crate::error::{Error, Result};
use crate::mobility::{network_dfe, TravelMatrices};
use crate::model::ModelParams;
use crate::network::PatchNetwork;
use crate::state::NetworkState;

/// Integration and seeding shared by the scenario drivers.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub integrate: IntegrateOptions,
    pub aquatic: AquaticMode,
    pub seed_node: usize,
    pub seed_count: f64,
}

impl RunSettings {
    pub fn new(t1: f64, seed_node: usize) -> Self {
        RunSettings {
            integrate: IntegrateOptions::new(0.0, t1),
            aquatic: AquaticMode::Dynamic,
            seed_node,
            seed_count: 1.0,
        }
    }
}

/// Disease-free equilibrium with `count` infected residents at `node`.
pub fn seeded_dfe(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    node: usize,
    count: f64,
) -> Result<NetworkState> {
    let mut state = network_dfe(network, matrices, params)?;
    state.seed_infection(node, count)?;
    Ok(state)
}

/// One run from the seeded equilibrium.
pub fn run_scenario(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    events: &EventSpec,
    settings: &RunSettings,
) -> Result<Trajectory> {
    let state0 = seeded_dfe(network, matrices, params, settings.seed_node, settings.seed_count)?;
    Simulation::new(network, matrices, *params)?
        .with_events(events.clone())?
        .with_aquatic(settings.aquatic)
        .integrate(&state0, &settings.integrate)
}

/// Per-node shares: humans over humans present, mosquitoes over adults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NormalizedNode {
    pub s_h: f64,
    pub i_h: f64,
    pub s_m: f64,
    pub i_m: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpreadResult {
    pub trajectory: Trajectory,
    /// `normalized[m][k]` is observed node `m` at output `k`.
    pub normalized: Vec<Vec<NormalizedNode>>,
}

impl SpreadResult {
    /// Time of the first maximum of `I_H` present at observed node `m`.
    pub fn peak_time(&self, m: usize) -> f64 {
        let series = self.trajectory.node_series.iter().map(|row| row[m].i_h_present);
        let k = crate::engine::first_argmax(series).expect("at least one output");
        self.trajectory.times[k]
    }
}

fn share(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        part / whole
    } else {
        0.0
    }
}

pub fn run_spread_scenario(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    settings: &RunSettings,
    observed_nodes: &[usize],
) -> Result<SpreadResult> {
    let mut settings = settings.clone();
    settings.integrate.tracked_nodes = observed_nodes.to_vec();
    let trajectory = run_scenario(network, matrices, params, &EventSpec::default(), &settings)?;
    let normalized = (0..observed_nodes.len())
        .map(|m| {
            trajectory
                .node_series
                .iter()
                .map(|row| {
                    let o = &row[m];
                    let adults = o.s_m + o.i_m;
                    NormalizedNode {
                        s_h: share(o.s_h_present, o.present()),
                        i_h: share(o.i_h_present, o.present()),
                        s_m: share(o.s_m, adults),
                        i_m: share(o.i_m, adults),
                    }
                })
                .collect()
        })
        .collect();
    Ok(SpreadResult {
        trajectory,
        normalized,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationResult {
    pub with_mobility: Trajectory,
    pub without_mobility: Trajectory,
}

/// Two runs differing only in the mosquito kernel: full edge set versus
/// self interaction only.
pub fn run_mosquito_mobility_comparison(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    settings: &RunSettings,
) -> Result<AblationResult> {
    let isolated = network.without_mosquito_mobility();
    let (with_mobility, without_mobility) = rayon::join(
        || run_scenario(network, matrices, params, &EventSpec::default(), settings),
        || run_scenario(&isolated, matrices, params, &EventSpec::default(), settings),
    );
    Ok(AblationResult {
        with_mobility: with_mobility?,
        without_mobility: without_mobility?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuarantineSweep {
    pub baseline: Trajectory,
    /// `(threshold, run)` in input order.
    pub runs: Vec<(f64, Trajectory)>,
}

pub fn run_quarantine_sweep(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    settings: &RunSettings,
    thresholds: &[f64],
    check_interval: f64,
) -> Result<QuarantineSweep> {
    for &t in thresholds {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "threshold",
                reason: format!("must lie in (0, 1], got {t}"),
            });
        }
    }
    let events: Vec<EventSpec> = std::iter::once(EventSpec::default())
        .chain(thresholds.iter().map(|&threshold| EventSpec {
            quarantine: Some(Quarantine {
                threshold,
                check_interval,
            }),
            mutation: None,
        }))
        .collect();
    let mut runs = events
        .par_iter()
        .map(|ev| run_scenario(network, matrices, params, ev, settings))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let baseline = runs.next().expect("baseline run");
    Ok(QuarantineSweep {
        baseline,
        runs: thresholds.iter().copied().zip(runs).collect(),
    })
}

/// A single run with a one-time infection-rate switch.
pub fn run_mutation_scenario(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params_pre: &ModelParams,
    mutation: &Mutation,
    settings: &RunSettings,
) -> Result<Trajectory> {
    if !(mutation.time < settings.integrate.t1) {
        return Err(Error::InvalidParameter {
            name: "time",
            reason: format!(
                "mutation at {} is not before the horizon {}",
                mutation.time, settings.integrate.t1
            ),
        });
    }
    let events = EventSpec {
        quarantine: None,
        mutation: Some(mutation.clone()),
    };
    run_scenario(network, matrices, params_pre, &events, settings)
}

/// Peaks of a series separated by drops of at least `prominence` times the
/// peak height on both sides, in order. Plateaus report their first index.
pub fn waves(series: &[f64], prominence: f64) -> Vec<usize> {
    let mut peaks = Vec::new();
    let Some(&first) = series.first() else {
        return peaks;
    };
    let keep = 1.0 - prominence;
    let (mut low, mut best, mut rising) = (first, 0, true);
    for (k, &v) in series.iter().enumerate() {
        if rising {
            if v < low {
                low = v;
                best = k;
            } else if v > series[best] {
                best = k;
            } else if v <= keep * series[best] && low <= keep * series[best] && series[best] > 0.0 {
                peaks.push(best);
                rising = false;
                low = v;
            }
        } else if v < low {
            low = v;
        } else if v > low {
            rising = true;
            best = k;
        }
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::PatchNode;

    fn pair_network(spacing: f64) -> PatchNetwork {
        let nodes = (0..3)
            .map(|i| PatchNode {
                id: i,
                x: i as f64 * spacing,
                y: 0.0,
                population: 20.0,
                area: 1e5,
                k_e: 1000.0,
                k_l: 500.0,
            })
            .collect();
        PatchNetwork::new(nodes, 200.0).unwrap()
    }

    #[test]
    fn spread_reaches_neighbour_later_and_skips_isolated_node() {
        // Node 2 is out of mosquito range and receives no travellers.
        let net = pair_network(150.0);
        let nodes: Vec<PatchNode> = net
            .nodes()
            .iter()
            .map(|n| PatchNode {
                x: if n.id == 2 { 10_000.0 } else { n.x },
                ..n.clone()
            })
            .collect();
        let net = PatchNetwork::new(nodes, 200.0).unwrap();
        let travel = TravelMatrices::from_lists(&[vec![(1, 0.2, 1.0)], vec![(0, 0.2, 1.0)], vec![]]).unwrap();
        let params = ModelParams::reference(0.2, 0.15);
        let mut settings = RunSettings::new(200.0, 0);
        settings.integrate.output_interval = 0.5;
        let res = run_spread_scenario(&net, &travel, &params, &settings, &[0, 1, 2]).unwrap();
        assert!(res.peak_time(1) >= res.peak_time(0));
        assert!(res.trajectory.node_series.iter().all(|row| row[2].i_h_present == 0.0));
        assert!(res.normalized[0].iter().any(|x| x.i_h > 0.01));
    }

    #[test]
    fn no_transmission_decays() {
        let net = pair_network(150.0);
        let travel = TravelMatrices::sedentary(3);
        let params = ModelParams::reference(0.0, 0.0);
        let res = run_spread_scenario(&net, &travel, &params, &RunSettings::new(200.0, 0), &[0]).unwrap();
        let last = res.trajectory.totals.last().unwrap();
        assert!(last.i_h < 1e-9);
        assert!(last.i_m == 0.0);
    }

    #[test]
    fn ablation_on_single_node_is_identical() {
        let nodes = vec![pair_network(150.0).nodes()[0].clone()];
        let net = PatchNetwork::new(nodes, 200.0).unwrap();
        let travel = TravelMatrices::sedentary(1);
        let params = ModelParams::reference(0.2, 0.15);
        let r = run_mosquito_mobility_comparison(&net, &travel, &params, &RunSettings::new(100.0, 0)).unwrap();
        assert_eq!(r.with_mobility, r.without_mobility);
    }

    #[test]
    fn threshold_one_matches_baseline() {
        let net = pair_network(150.0);
        let travel = TravelMatrices::from_lists(&[vec![(1, 0.2, 1.0)], vec![(2, 0.2, 1.0)], vec![(0, 0.2, 1.0)]])
            .unwrap();
        let params = ModelParams::reference(0.2, 0.15);
        let sweep =
            run_quarantine_sweep(&net, &travel, &params, &RunSettings::new(60.0, 0), &[1.0], 1.0).unwrap();
        assert_eq!(sweep.runs[0].1.totals, sweep.baseline.totals);
        assert!(run_quarantine_sweep(&net, &travel, &params, &RunSettings::new(1.0, 0), &[0.0], 1.0).is_err());
    }

    #[test]
    fn mutation_at_start_equals_post_parameters() {
        let net = pair_network(150.0);
        let travel = TravelMatrices::sedentary(3);
        let pre = ModelParams::reference(0.0118, 0.0101);
        let post = pre.with_infection_rates(0.0245, 0.0161);
        let m = Mutation {
            time: 0.0,
            new_beta_h: 0.0245,
            new_beta_m: 0.0161,
        };
        let settings = RunSettings::new(50.0, 0);
        let a = run_mutation_scenario(&net, &travel, &pre, &m, &settings).unwrap();
        let b = run_scenario(&net, &travel, &post, &EventSpec::default(), &settings).unwrap();
        assert_eq!(a.totals, b.totals);
        let late = Mutation { time: 50.0, ..m };
        assert!(run_mutation_scenario(&net, &travel, &pre, &late, &settings).is_err());
    }

    #[test]
    fn wave_detection() {
        assert_eq!(waves(&[0.0, 1.0, 3.0, 1.0, 0.5, 2.0, 6.0, 2.0, 0.0], 0.3), vec![2, 6]);
        assert_eq!(waves(&[0.0, 1.0, 2.0, 3.0], 0.3), Vec::<usize>::new());
        assert_eq!(waves(&[0.0, 5.0, 4.9, 5.0, 0.0], 0.3), vec![1]);
        assert_eq!(waves(&[0.0, 2.0, 2.0, 0.0], 0.3), vec![1]);
        assert!(waves(&[], 0.3).is_empty());
    }
}
