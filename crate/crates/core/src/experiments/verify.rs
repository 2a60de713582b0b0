//! Numerical checks of the analytical properties of the network model:
//! stationarity of the disease-free state, resident conservation, the
//! single-patch reduction, extinction below threshold and endemic reach.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{run_scenario, RunSettings};
use crate::engine::{aggregate_observables, network_rhs, EventSpec};
use crate::error::Result;
use crate::mobility::{network_dfe, TravelMatrices};
use crate::model::{single_patch_rhs, ModelParams, PatchState};
use crate::network::{PatchNetwork, PatchNode};
use crate::state::{self, NetworkState, HUMAN_FIELDS};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Max-norm of the vector field at the disease-free equilibrium.
pub fn dfe_residual(network: &PatchNetwork, matrices: &TravelMatrices, params: &ModelParams) -> Result<f64> {
    let dfe = network_dfe(network, matrices, params)?;
    let dy = network_rhs(&dfe, network, matrices, params, 0.0)?;
    Ok(dy.iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Random non-negative state with mosquitoes near capacity and humans spread
/// over the stored pairs.
pub fn random_state(network: &PatchNetwork, matrices: &TravelMatrices, seed: u64) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = NetworkState::zeros(matrices.layout().clone());
    for (i, node) in network.nodes().iter().enumerate() {
        st.set_mosquito(i, state::EGGS, rng.gen::<f64>() * node.k_e);
        st.set_mosquito(i, state::LARVAE, rng.gen::<f64>() * node.k_l);
        st.set_mosquito(i, state::S_M, rng.gen::<f64>() * node.k_l);
        st.set_mosquito(i, state::I_M, rng.gen::<f64>() * 0.1 * node.k_l);
    }
    for p in 0..matrices.layout().pair_count() {
        for f in 0..HUMAN_FIELDS {
            st.set_human(p, f, rng.gen::<f64>() * 50.0);
        }
    }
    st
}

/// Largest per-origin sum of human derivatives at a random state, relative
/// to the resident total.
pub fn resident_balance_residual(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    seed: u64,
) -> Result<f64> {
    let st = random_state(network, matrices, seed);
    let dy = network_rhs(&st, network, matrices, params, 0.0)?;
    let layout = matrices.layout();
    let mut worst: f64 = 0.0;
    for i in 0..layout.node_count() {
        let sum: f64 = layout
            .pairs_of(i)
            .flat_map(|p| (0..HUMAN_FIELDS).map(move |f| layout.human_index(p, f)))
            .map(|k| dy[k])
            .sum();
        worst = worst.max(sum.abs() / st.resident_total(i).max(1.0));
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConservationReport {
    pub max_relative_drift: f64,
    pub max_undershoot: f64,
    pub min_value: f64,
}

/// Runs the seeded scenario and compares per-origin resident totals at the
/// horizon with the initial ones.
pub fn conservation_report(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    settings: &RunSettings,
) -> Result<ConservationReport> {
    let before = network_dfe(network, matrices, params)?.resident_totals();
    let traj = run_scenario(network, matrices, params, &EventSpec::default(), settings)?;
    let after = traj.final_state.resident_totals();
    let drift = before
        .iter()
        .zip(&after)
        .filter(|(b, _)| **b > 0.0)
        .map(|(b, a)| (a - b).abs() / b)
        .fold(0.0, f64::max);
    let min_value = traj.final_state.values().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConservationReport {
        max_relative_drift: drift,
        max_undershoot: traj.max_undershoot,
        min_value,
    })
}

/// Largest relative gap between the one-node network field and the
/// isolated-patch model at a fixed state.
pub fn single_node_reduction_error(params: &ModelParams) -> Result<f64> {
    let node = PatchNode {
        id: 0,
        x: 0.0,
        y: 0.0,
        population: 1000.0,
        area: 1.0,
        k_e: params.k_e,
        k_l: params.k_l,
    };
    let net = PatchNetwork::new(vec![node], 200.0)?;
    let travel = TravelMatrices::sedentary(1);
    let patch = PatchState {
        eggs: 612.0,
        larvae: 233.0,
        adults: 341.0,
        s_m: 300.0,
        i_m: 41.0,
        s_h: 900.0,
        i_h: 60.0,
        r_h: 40.0,
    };
    let mut st = NetworkState::zeros(travel.layout().clone());
    st.set_mosquito(0, state::EGGS, patch.eggs);
    st.set_mosquito(0, state::LARVAE, patch.larvae);
    st.set_mosquito(0, state::S_M, patch.s_m);
    st.set_mosquito(0, state::I_M, patch.i_m);
    st.set_human(0, state::S_H, patch.s_h);
    st.set_human(0, state::I_H, patch.i_h);
    st.set_human(0, state::R_H, patch.r_h);
    let dy = network_rhs(&st, &net, &travel, params, 0.0)?;
    let want = single_patch_rhs(&patch, params, 0.0)?;
    let expected = [want.eggs, want.larvae, want.s_m, want.i_m, want.s_h, want.i_h, want.r_h];
    Ok(dy
        .iter()
        .zip(expected)
        .map(|(g, e)| (g - e).abs() / e.abs().max(1.0))
        .fold(0.0, f64::max))
}

/// Nodes that infection can reach from `from`: travel links in their
/// direction of departure and mosquito kernel links both ways.
pub fn infection_reachable(network: &PatchNetwork, matrices: &TravelMatrices, from: usize) -> Vec<bool> {
    let succ = matrices.successors();
    let mut seen = vec![false; network.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        let kernel = network.kernel_row(v).0.iter().copied();
        for w in succ[v].iter().copied().chain(kernel) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

/// Whether the directed travel graph is strongly connected.
pub fn travel_strongly_connected(matrices: &TravelMatrices) -> bool {
    let n = matrices.node_count();
    if n == 0 {
        return true;
    }
    let succ = matrices.successors();
    let mut pred = vec![Vec::new(); n];
    for (i, s) in succ.iter().enumerate() {
        for &j in s {
            pred[j].push(i);
        }
    }
    let covers = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    covers(&succ) && covers(&pred)
}

/// Largest `I_H` present or `I_m` over all nodes at the horizon.
pub fn residual_infection(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    settings: &RunSettings,
) -> Result<f64> {
    let traj = run_scenario(network, matrices, params, &EventSpec::default(), settings)?;
    let obs = aggregate_observables(&traj.final_state);
    Ok(obs
        .nodes
        .iter()
        .map(|n| n.i_h_present.max(n.i_m))
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReachReport {
    pub reachable: usize,
    /// Smallest `I_H` present at the horizon over reachable nodes.
    pub min_reachable_infected: f64,
    pub unreachable: usize,
    /// Largest `I_H` present or `I_m` ever seen on an unreachable node.
    pub max_unreachable_infection: f64,
}

pub fn endemic_reach(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    settings: &RunSettings,
) -> Result<ReachReport> {
    let reach = infection_reachable(network, matrices, settings.seed_node);
    let unreachable: Vec<usize> = (0..network.len()).filter(|&k| !reach[k]).collect();
    let mut settings = settings.clone();
    settings.integrate.tracked_nodes = unreachable.clone();
    let traj = run_scenario(network, matrices, params, &EventSpec::default(), &settings)?;
    let end = aggregate_observables(&traj.final_state);
    let min_reachable = (0..network.len())
        .filter(|&k| reach[k])
        .map(|k| end.nodes[k].i_h_present)
        .fold(f64::INFINITY, f64::min);
    let max_unreachable = traj
        .node_series
        .iter()
        .flatten()
        .map(|o| o.i_h_present.max(o.i_m))
        .fold(0.0, f64::max);
    Ok(ReachReport {
        reachable: network.len() - unreachable.len(),
        min_reachable_infected: min_reachable,
        unreachable: unreachable.len(),
        max_unreachable_infection: max_unreachable,
    })
}

/// Settings of the `verify` suite.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifySettings {
    pub run: RunSettings,
    /// Infection rates used for the extinction check.
    pub subcritical: (f64, f64),
    pub random_seed: u64,
}

/// Runs the whole suite; each check reports its measured value.
pub fn run_checks(
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    vs: &VerifySettings,
) -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let r = dfe_residual(network, matrices, params)?;
    checks.push(Check::new("dfe_stationarity", r < 1e-10, format!("max |rhs| = {r:e}")));

    let b = resident_balance_residual(network, matrices, params, vs.random_seed)?;
    checks.push(Check::new(
        "resident_balance",
        b < 1e-12,
        format!("max relative per-origin derivative sum = {b:e}"),
    ));

    let s = single_node_reduction_error(params)?;
    checks.push(Check::new("single_node_reduction", s < 1e-12, format!("max relative gap = {s:e}")));

    let c = conservation_report(network, matrices, params, &vs.run)?;
    checks.push(Check::new(
        "conservation",
        c.max_relative_drift < 1e-9,
        format!("max relative resident drift = {:e}", c.max_relative_drift),
    ));
    checks.push(Check::new(
        "positivity",
        c.max_undershoot < 1e-12 && c.min_value >= 0.0,
        format!("max pre-clamp undershoot = {:e}", c.max_undershoot),
    ));

    let sub = params.with_infection_rates(vs.subcritical.0, vs.subcritical.1);
    let connected = travel_strongly_connected(matrices);
    let residual = residual_infection(network, matrices, &sub, &vs.run)?;
    checks.push(Check::new(
        "subcritical_extinction",
        residual < 1e-8,
        format!(
            "max infection at horizon = {residual:e} (travel graph strongly connected: {connected})"
        ),
    ));

    let reach = endemic_reach(network, matrices, params, &vs.run)?;
    checks.push(Check::new(
        "endemic_reach",
        reach.min_reachable_infected > 1e-6 && reach.max_unreachable_infection == 0.0,
        format!(
            "{} reachable nodes, min I_H present {:e}; {} unreachable, max infection {:e}",
            reach.reachable, reach.min_reachable_infected, reach.unreachable, reach.max_unreachable_infection
        ),
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strong_connectivity() {
        let ring = TravelMatrices::from_lists(&[vec![(1, 0.1, 1.0)], vec![(2, 0.1, 1.0)], vec![(0, 0.1, 1.0)]])
            .unwrap();
        assert!(travel_strongly_connected(&ring));
        let chain = TravelMatrices::from_lists(&[vec![(1, 0.1, 1.0)], vec![(2, 0.1, 1.0)], vec![]]).unwrap();
        assert!(!travel_strongly_connected(&chain));
    }

    #[test]
    fn reachability_follows_departures_and_kernel() {
        let nodes = (0..4)
            .map(|i| PatchNode {
                id: i,
                x: [0.0, 5000.0, 5100.0, 9000.0][i],
                y: 0.0,
                population: 10.0,
                area: 1.0,
                k_e: 1.0,
                k_l: 1.0,
            })
            .collect();
        let net = PatchNetwork::new(nodes, 200.0).unwrap();
        // 0 -> 1 by travel, 1 - 2 by kernel, 3 -> 0 only.
        let travel =
            TravelMatrices::from_lists(&[vec![(1, 0.1, 1.0)], vec![], vec![], vec![(0, 0.1, 1.0)]]).unwrap();
        assert_eq!(infection_reachable(&net, &travel, 0), vec![true, true, true, false]);
        assert_eq!(infection_reachable(&net, &travel, 2), vec![false, true, true, false]);
    }
}
