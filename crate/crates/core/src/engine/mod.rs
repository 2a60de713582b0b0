//! Network dynamics over the sparse origin/destination state: vector field,
//! fixed-step integration, quarantine and mutation events, observables.

mod rhs;
mod rk4;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use rhs::PRESENT_EPSILON;

use crate::error::{Error, Result};
use crate::mobility::TravelMatrices;
use crate::model::{vector_equilibrium_or_extinct, ModelParams};
use crate::network::PatchNetwork;
use crate::state::{self, NetworkState, HUMAN_FIELDS};
use rhs::{Field, Workspace};
use rk4::Rk4;

pub const TIMESERIES_HEADER: &str = "t_days,S_H,I_H,R_H,S_m,I_m,E,L,seroprevalence";
pub const SNAPSHOT_HEADER: &str = "node_id,I_H_present,infection_fraction,S_m,I_m,E,L";

/// Treatment of eggs and larvae.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AquaticMode {
    /// Eggs and larvae evolve with the logistic aquatic equations.
    #[default]
    Dynamic,
    /// Eggs and larvae are held at their node equilibrium; adults emerge
    /// at `s_L L*`.
    Frozen,
}

fn one_day() -> f64 {
    1.0
}

/// Blocks human travel across nodes whose infected share reaches
/// `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quarantine {
    pub threshold: f64,
    /// Days between re-evaluations.
    #[serde(default = "one_day")]
    pub check_interval: f64,
}

/// One-time switch of the infection rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mutation {
    pub time: f64,
    pub new_beta_h: f64,
    pub new_beta_m: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    #[serde(default)]
    pub quarantine: Option<Quarantine>,
    #[serde(default)]
    pub mutation: Option<Mutation>,
}

impl EventSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(q) = &self.quarantine {
            if !(q.threshold > 0.0 && q.threshold <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "threshold",
                    reason: format!("must lie in (0, 1], got {}", q.threshold),
                });
            }
            if !(q.check_interval > 0.0 && q.check_interval.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "check_interval",
                    reason: format!("must be positive, got {}", q.check_interval),
                });
            }
        }
        if let Some(m) = &self.mutation {
            if !(m.time >= 0.0 && m.time.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "time",
                    reason: format!("mutation time must be non-negative, got {}", m.time),
                });
            }
            for (name, v) in [("new_beta_h", m.new_beta_h), ("new_beta_m", m.new_beta_m)] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name,
                        reason: format!("must be non-negative, got {v}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Parameters in force at time `t`: the mutated rates from `event.time` on.
pub fn apply_mutation(params: &ModelParams, event: Option<&Mutation>, t: f64) -> ModelParams {
    match event {
        Some(m) if t >= m.time => params.with_infection_rates(m.new_beta_h, m.new_beta_m),
        _ => *params,
    }
}

/// Nodes whose infected share is at least `threshold`.
pub fn quarantined_nodes(infection_fraction: &[f64], threshold: f64) -> Vec<bool> {
    infection_fraction.iter().map(|&f| f >= threshold).collect()
}

/// Copy of `matrices` with every departure and return rate crossing a
/// quarantined node's boundary set to zero. The mosquito kernel is not
/// involved.
pub fn apply_quarantine(matrices: &TravelMatrices, infection_fraction: &[f64], threshold: f64) -> Result<TravelMatrices> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "threshold",
            reason: format!("must lie in (0, 1], got {threshold}"),
        });
    }
    if infection_fraction.len() != matrices.node_count() {
        return Err(Error::InvalidInput(format!(
            "{} infection fractions for {} nodes",
            infection_fraction.len(),
            matrices.node_count()
        )));
    }
    Ok(mask_travel(matrices, &quarantined_nodes(infection_fraction, threshold)))
}

fn mask_travel(matrices: &TravelMatrices, closed: &[bool]) -> TravelMatrices {
    let layout = matrices.layout();
    let mut depart = matrices.depart_rates().to_vec();
    let mut ret = matrices.return_rates().to_vec();
    for p in 0..layout.pair_count() {
        if closed[layout.origin(p)] || closed[layout.dest(p)] {
            depart[p] = 0.0;
            ret[p] = 0.0;
        }
    }
    matrices
        .with_rates(depart, ret)
        .expect("masking keeps rates valid")
}

/// Derivative of the full network state under dynamic aquatic stages. The
/// system is autonomous; `t` is accepted for interface symmetry.
pub fn network_rhs(
    state: &NetworkState,
    network: &PatchNetwork,
    matrices: &TravelMatrices,
    params: &ModelParams,
    _t: f64,
) -> Result<Vec<f64>> {
    Simulation::new(network, matrices, *params)?.rhs(state)
}

/// Network-wide compartment sums.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Totals {
    pub s_h: f64,
    pub i_h: f64,
    pub r_h: f64,
    pub s_m: f64,
    pub i_m: f64,
    pub eggs: f64,
    pub larvae: f64,
}

/// Per-node observables. Human values count those present on the node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NodeObservation {
    pub node: usize,
    pub s_h_present: f64,
    pub i_h_present: f64,
    pub r_h_present: f64,
    /// `I_H` present over humans present, 0 on an empty node.
    pub infection_fraction: f64,
    pub s_m: f64,
    pub i_m: f64,
    pub eggs: f64,
    pub larvae: f64,
}

impl NodeObservation {
    pub fn present(&self) -> f64 {
        self.s_h_present + self.i_h_present + self.r_h_present
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observables {
    pub totals: Totals,
    /// Ever-infected humans, `I_H + R_H`.
    pub seroprevalence: f64,
    pub nodes: Vec<NodeObservation>,
}

pub fn aggregate_observables(state: &NetworkState) -> Observables {
    let present = state.present_totals();
    let mut totals = Totals::default();
    let nodes: Vec<NodeObservation> = present
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let n = h[0] + h[1] + h[2];
            let obs = NodeObservation {
                node: i,
                s_h_present: h[0],
                i_h_present: h[1],
                r_h_present: h[2],
                infection_fraction: if n > 0.0 { h[1] / n } else { 0.0 },
                s_m: state.mosquito(i, state::S_M),
                i_m: state.mosquito(i, state::I_M),
                eggs: state.mosquito(i, state::EGGS),
                larvae: state.mosquito(i, state::LARVAE),
            };
            totals.s_h += obs.s_h_present;
            totals.i_h += obs.i_h_present;
            totals.r_h += obs.r_h_present;
            totals.s_m += obs.s_m;
            totals.i_m += obs.i_m;
            totals.eggs += obs.eggs;
            totals.larvae += obs.larvae;
            obs
        })
        .collect();
    Observables {
        totals,
        seroprevalence: totals.i_h + totals.r_h,
        nodes,
    }
}

/// Integration window and output control.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrateOptions {
    pub t0: f64,
    pub t1: f64,
    pub h: f64,
    /// Days between recorded outputs, rounded to a whole number of steps.
    pub output_interval: f64,
    /// Nodes whose observables are recorded at every output.
    pub tracked_nodes: Vec<usize>,
    /// Times at which every node is recorded; each is taken at the first
    /// step boundary at or after it.
    pub snapshot_times: Vec<f64>,
}

impl IntegrateOptions {
    pub fn new(t0: f64, t1: f64) -> Self {
        IntegrateOptions {
            t0,
            t1,
            h: 0.05,
            output_interval: 1.0,
            tracked_nodes: Vec::new(),
            snapshot_times: Vec::new(),
        }
    }

    pub fn validate(&self, node_count: usize) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("must be positive, got {}", self.h),
            });
        }
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 >= self.t0) {
            return Err(Error::InvalidParameter {
                name: "t1",
                reason: format!("window [{}, {}] is not a finite forward interval", self.t0, self.t1),
            });
        }
        if !(self.output_interval > 0.0 && self.output_interval.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "output_interval",
                reason: format!("must be positive, got {}", self.output_interval),
            });
        }
        if let Some(&bad) = self.tracked_nodes.iter().find(|&&k| k >= node_count) {
            return Err(Error::NodeOutOfRange {
                index: bad,
                count: node_count,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub nodes: Vec<NodeObservation>,
}

/// Recorded outputs of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub totals: Vec<Totals>,
    pub seroprevalence: Vec<f64>,
    pub tracked_nodes: Vec<usize>,
    /// `node_series[k][m]` observes `tracked_nodes[m]` at `times[k]`.
    pub node_series: Vec<Vec<NodeObservation>>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: NetworkState,
    /// Largest negative excursion removed by clamping.
    pub max_undershoot: f64,
    pub steps: usize,
}

/// Index of the first maximum.
pub fn first_argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

impl Trajectory {
    pub fn infected(&self) -> Vec<f64> {
        self.totals.iter().map(|t| t.i_h).collect()
    }

    /// Time and value of the first maximum of total `I_H`.
    pub fn peak_infected(&self) -> (f64, f64) {
        let k = first_argmax(self.totals.iter().map(|t| t.i_h)).expect("at least one output");
        (self.times[k], self.totals[k].i_h)
    }

    /// Series of one tracked node.
    pub fn node(&self, node: usize) -> Option<Vec<NodeObservation>> {
        let m = self.tracked_nodes.iter().position(|&k| k == node)?;
        Some(self.node_series.iter().map(|row| row[m]).collect())
    }

    pub fn timeseries_csv(&self) -> String {
        let mut out = String::from(TIMESERIES_HEADER);
        out.push('\n');
        for ((t, x), sero) in self.times.iter().zip(&self.totals).zip(&self.seroprevalence) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                t, x.s_h, x.i_h, x.r_h, x.s_m, x.i_m, x.eggs, x.larvae, sero
            );
        }
        out
    }

    pub fn write_timeseries(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::network::io::write_text(path.as_ref(), &self.timeseries_csv())
    }
}

pub fn snapshot_csv(nodes: &[NodeObservation]) -> String {
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    for o in nodes {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            o.node, o.i_h_present, o.infection_fraction, o.s_m, o.i_m, o.eggs, o.larvae
        );
    }
    out
}

/// A configured run: network, travel tables, parameters, events and
/// aquatic treatment. Shared inputs are borrowed and never modified.
#[derive(Clone, Debug)]
pub struct Simulation<'a> {
    network: &'a PatchNetwork,
    matrices: &'a TravelMatrices,
    params: ModelParams,
    events: EventSpec,
    aquatic: AquaticMode,
    frozen_larvae: Vec<f64>,
}

impl<'a> Simulation<'a> {
    pub fn new(network: &'a PatchNetwork, matrices: &'a TravelMatrices, params: ModelParams) -> Result<Self> {
        params.validate()?;
        if network.len() != matrices.node_count() {
            return Err(Error::InvalidInput(format!(
                "network has {} nodes, travel tables {}",
                network.len(),
                matrices.node_count()
            )));
        }
        let frozen_larvae = network
            .nodes()
            .iter()
            .map(|n| vector_equilibrium_or_extinct(&params, n.k_e, n.k_l).larvae)
            .collect();
        Ok(Simulation {
            network,
            matrices,
            params,
            events: EventSpec::default(),
            aquatic: AquaticMode::Dynamic,
            frozen_larvae,
        })
    }

    pub fn with_events(mut self, events: EventSpec) -> Result<Self> {
        events.validate()?;
        self.events = events;
        Ok(self)
    }

    pub fn with_aquatic(mut self, aquatic: AquaticMode) -> Self {
        self.aquatic = aquatic;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn events(&self) -> &EventSpec {
        &self.events
    }

    fn field<'s>(&'s self, matrices: &'s TravelMatrices, params: &'s ModelParams) -> Field<'s> {
        Field {
            network: self.network,
            matrices,
            params,
            aquatic: self.aquatic,
            frozen_larvae: &self.frozen_larvae,
        }
    }

    fn check_state(&self, state: &NetworkState) -> Result<()> {
        if state.layout() != self.matrices.layout() {
            return Err(Error::InvalidInput(
                "state layout does not match the travel tables".into(),
            ));
        }
        Ok(())
    }

    /// Derivative at `state` with the base parameters and unmasked travel.
    pub fn rhs(&self, state: &NetworkState) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let mut dy = vec![0.0; state.values().len()];
        self.field(self.matrices, &self.params)
            .eval(state.values(), &mut dy, &mut Workspace::default());
        Ok(dy)
    }

    /// Fixed-step fourth-order integration from `state0`. Events act at
    /// step boundaries; negative values are clamped to zero after each step.
    pub fn integrate(&self, state0: &NetworkState, opts: &IntegrateOptions) -> Result<Trajectory> {
        self.check_state(state0)?;
        opts.validate(self.network.len())?;
        let h = opts.h;
        let span = opts.t1 - opts.t0;
        let n_steps = if span > 0.0 { (span / h - 1e-9).ceil().max(1.0) as usize } else { 0 };
        let stride = ((opts.output_interval / h).round() as usize).max(1);
        let mut snapshot_times: Vec<f64> = opts.snapshot_times.clone();
        snapshot_times.sort_by(f64::total_cmp);
        let mut next_snapshot = 0;

        let mut traj = Trajectory {
            times: Vec::new(),
            totals: Vec::new(),
            seroprevalence: Vec::new(),
            tracked_nodes: opts.tracked_nodes.clone(),
            node_series: Vec::new(),
            snapshots: Vec::new(),
            final_state: state0.clone(),
            max_undershoot: 0.0,
            steps: n_steps,
        };
        let mut y = state0.values().to_vec();
        let layout = state0.layout().clone();
        let record = |traj: &mut Trajectory, y: &[f64], t: f64, next_snapshot: &mut usize, force: bool| {
            let snap_due = *next_snapshot < snapshot_times.len()
                && t >= snapshot_times[*next_snapshot] - 1e-9 * h;
            if !(force || snap_due) {
                return;
            }
            let st = NetworkState::from_values(layout.clone(), y.to_vec()).expect("dimension fixed");
            let obs = aggregate_observables(&st);
            if force {
                traj.times.push(t);
                traj.totals.push(obs.totals);
                traj.seroprevalence.push(obs.seroprevalence);
                traj.node_series
                    .push(traj.tracked_nodes.iter().map(|&k| obs.nodes[k]).collect());
            }
            while *next_snapshot < snapshot_times.len() && t >= snapshot_times[*next_snapshot] - 1e-9 * h {
                traj.snapshots.push(Snapshot {
                    t,
                    nodes: obs.nodes.clone(),
                });
                *next_snapshot += 1;
            }
        };
        record(&mut traj, &y, opts.t0, &mut next_snapshot, true);

        let mut ws = Workspace::default();
        let mut rk = Rk4::default();
        let mut masked: Option<TravelMatrices> = None;
        let mut closed: Vec<bool> = vec![false; self.network.len()];
        let mut next_check = opts.t0;

        for k in 0..n_steps {
            let t = opts.t0 + k as f64 * h;
            let step = if k + 1 == n_steps { opts.t1 - t } else { h };
            let params = apply_mutation(&self.params, self.events.mutation.as_ref(), t);
            if let Some(q) = &self.events.quarantine {
                if t >= next_check - 1e-9 * h {
                    let now = quarantined_nodes(&infection_fractions(&y, &layout), q.threshold);
                    if now != closed {
                        let count = now.iter().filter(|&&c| c).count();
                        log::debug!("t = {t}: {count} nodes quarantined");
                        masked = (count > 0).then(|| mask_travel(self.matrices, &now));
                        closed = now;
                    }
                    while next_check <= t + 1e-9 * h {
                        next_check += q.check_interval;
                    }
                }
            }
            let matrices = masked.as_ref().unwrap_or(self.matrices);
            let field = self.field(matrices, &params);
            rk.step(&mut y, step, |y, dy| field.eval(y, dy, &mut ws));

            let t_next = if k + 1 == n_steps { opts.t1 } else { t + h };
            let mut under: f64 = 0.0;
            for (idx, v) in y.iter_mut().enumerate() {
                if !v.is_finite() {
                    let (node, compartment) = layout.describe(idx);
                    return Err(Error::NonFinite {
                        t: t_next,
                        node,
                        compartment,
                    });
                }
                if *v < 0.0 {
                    under = under.max(-*v);
                    *v = 0.0;
                }
            }
            traj.max_undershoot = traj.max_undershoot.max(under);
            let output = (k + 1) % stride == 0 || k + 1 == n_steps;
            record(&mut traj, &y, t_next, &mut next_snapshot, output);
        }
        traj.final_state = NetworkState::from_values(layout, y)?;
        Ok(traj)
    }
}

/// Infected share of the humans present on each node, straight from a flat
/// state vector.
fn infection_fractions(y: &[f64], layout: &state::Layout) -> Vec<f64> {
    let n = layout.node_count();
    let mut present = vec![0.0; n];
    let mut infected = vec![0.0; n];
    for (pair, h) in y[layout.human_offset()..].chunks_exact(HUMAN_FIELDS).enumerate() {
        let j = layout.dest(pair);
        present[j] += h[0] + h[1] + h[2];
        infected[j] += h[1];
    }
    present
        .iter()
        .zip(&infected)
        .map(|(&n, &i)| if n > 0.0 { i / n } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::network_dfe;
    use crate::model::{single_patch_rhs, vector_endemic_equilibrium, PatchState};
    use crate::network::PatchNode;

    fn node(id: usize, x: f64, pop: f64, k: (f64, f64)) -> PatchNode {
        PatchNode {
            id,
            x,
            y: 0.0,
            population: pop,
            area: 1.0,
            k_e: k.0,
            k_l: k.1,
        }
    }

    fn line(n: usize, spacing: f64) -> PatchNetwork {
        let nodes = (0..n)
            .map(|i| node(i, i as f64 * spacing, 500.0 + 100.0 * i as f64, (1000.0, 500.0)))
            .collect();
        PatchNetwork::new(nodes, 200.0).unwrap()
    }

    fn ring_travel(n: usize) -> TravelMatrices {
        let lists: Vec<_> = (0..n)
            .map(|i| {
                let mut l = vec![((i + 1) % n, 0.3, 1.0)];
                if n > 2 {
                    l.push(((i + n - 1) % n, 0.1, 1.0));
                }
                l
            })
            .collect();
        TravelMatrices::from_lists(&lists).unwrap()
    }

    #[test]
    fn single_node_matches_patch_model() {
        let net = line(1, 0.0);
        let travel = TravelMatrices::sedentary(1);
        let params = ModelParams::reference(0.2, 0.15);
        let mut st = NetworkState::zeros(travel.layout().clone());
        let patch = PatchState {
            eggs: 700.0,
            larvae: 250.0,
            adults: 320.0,
            s_m: 300.0,
            i_m: 20.0,
            s_h: 450.0,
            i_h: 30.0,
            r_h: 20.0,
        };
        st.set_mosquito(0, state::EGGS, patch.eggs);
        st.set_mosquito(0, state::LARVAE, patch.larvae);
        st.set_mosquito(0, state::S_M, patch.s_m);
        st.set_mosquito(0, state::I_M, patch.i_m);
        st.set_human(0, state::S_H, patch.s_h);
        st.set_human(0, state::I_H, patch.i_h);
        st.set_human(0, state::R_H, patch.r_h);
        let dy = network_rhs(&st, &net, &travel, &params, 0.0).unwrap();
        let want = single_patch_rhs(&patch, &params, 0.0).unwrap();
        let got = [dy[0], dy[1], dy[2], dy[3], dy[4], dy[5], dy[6]];
        let expected = [want.eggs, want.larvae, want.s_m, want.i_m, want.s_h, want.i_h, want.r_h];
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() <= 1e-12 * e.abs().max(1.0), "{g} vs {e}");
        }
    }

    #[test]
    fn dfe_is_stationary() {
        let net = line(6, 120.0);
        let travel = ring_travel(6);
        let params = ModelParams::reference(0.2, 0.15);
        let dfe = network_dfe(&net, &travel, &params).unwrap();
        let dy = network_rhs(&dfe, &net, &travel, &params, 0.0).unwrap();
        assert!(dy.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn human_derivatives_conserve_residents() {
        let net = line(5, 150.0);
        let travel = ring_travel(5);
        let params = ModelParams::reference(0.3, 0.2);
        let mut st = network_dfe(&net, &travel, &params).unwrap();
        st.seed_infection(2, 5.0).unwrap();
        st.set_mosquito(1, state::I_M, 40.0);
        let dy = network_rhs(&st, &net, &travel, &params, 0.0).unwrap();
        let layout = travel.layout();
        for i in 0..5 {
            let sum: f64 = layout
                .pairs_of(i)
                .flat_map(|p| (0..3).map(move |f| layout.human_index(p, f)))
                .map(|k| dy[k])
                .sum();
            assert!(sum.abs() < 1e-12, "origin {i}: {sum}");
        }
    }

    #[test]
    fn quarantine_masks_rows_and_columns() {
        let travel = TravelMatrices::from_lists(&[vec![(1, 0.2, 1.0)], vec![(0, 0.3, 1.0)], vec![(1, 0.4, 1.0)]])
            .unwrap();
        let masked = apply_quarantine(&travel, &[0.15, 0.02, 0.0], 0.10).unwrap();
        assert_eq!(masked.depart_rates(), &[0.0, 0.0, 0.0, 0.0, 0.0, 0.4]);
        assert_eq!(masked.return_rates(), &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(travel.depart(1), 0.2);
        let same = apply_quarantine(&travel, &[0.9, 0.5, 0.0], 1.0).unwrap();
        assert_eq!(same, travel);
        assert!(apply_quarantine(&travel, &[0.0; 3], 0.0).is_err());
    }

    #[test]
    fn mutation_switches_at_closed_boundary() {
        let base = ModelParams::reference(0.0118, 0.0101);
        let m = Mutation {
            time: 100.0,
            new_beta_h: 0.0245,
            new_beta_m: 0.0161,
        };
        let pre = apply_mutation(&base, Some(&m), 99.9);
        assert_eq!((pre.beta_h, pre.beta_m), (0.0118, 0.0101));
        let at = apply_mutation(&base, Some(&m), 100.0);
        assert_eq!((at.beta_h, at.beta_m), (0.0245, 0.0161));
        assert_eq!(at.with_infection_rates(0.0118, 0.0101), base);
        assert_eq!(apply_mutation(&base, None, 1e9), base);
    }

    #[test]
    fn observables_on_dfe_and_recovered() {
        let net = line(3, 150.0);
        let travel = ring_travel(3);
        let params = ModelParams::reference(0.2, 0.15);
        let mut st = network_dfe(&net, &travel, &params).unwrap();
        assert_eq!(aggregate_observables(&st).seroprevalence, 0.0);
        for p in 0..travel.layout().pair_count() {
            let s = st.human(p, state::S_H);
            st.set_human(p, state::S_H, 0.0);
            st.set_human(p, state::R_H, s);
        }
        let obs = aggregate_observables(&st);
        assert!((obs.seroprevalence - net.total_population()).abs() < 1e-9);
    }

    #[test]
    fn zero_length_window_gives_initial_observation() {
        let net = line(2, 150.0);
        let travel = ring_travel(2);
        let params = ModelParams::reference(0.2, 0.15);
        let st = network_dfe(&net, &travel, &params).unwrap();
        let sim = Simulation::new(&net, &travel, params).unwrap();
        let traj = sim.integrate(&st, &IntegrateOptions::new(5.0, 5.0)).unwrap();
        assert_eq!(traj.times, vec![5.0]);
        assert_eq!(traj.final_state, st);
        assert!(sim.integrate(&st, &IntegrateOptions::new(5.0, 4.0)).is_err());
    }

    #[test]
    fn outputs_follow_interval_and_end_exactly() {
        let net = line(2, 150.0);
        let travel = ring_travel(2);
        let params = ModelParams::reference(0.2, 0.15);
        let st = network_dfe(&net, &travel, &params).unwrap();
        let sim = Simulation::new(&net, &travel, params).unwrap();
        let mut opts = IntegrateOptions::new(0.0, 2.5);
        opts.snapshot_times = vec![1.0];
        opts.tracked_nodes = vec![1];
        let traj = sim.integrate(&st, &opts).unwrap();
        assert_eq!(traj.times.len(), 4);
        assert!((traj.times[1] - 1.0).abs() < 1e-12);
        assert_eq!(*traj.times.last().unwrap(), 2.5);
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.node(1).unwrap().len(), 4);
        assert!(traj.node(0).is_none());
    }

    #[test]
    fn vectors_relax_to_node_equilibrium_without_infection() {
        let net = line(3, 150.0);
        let travel = ring_travel(3);
        let params = ModelParams::reference(0.0, 0.0);
        let mut st = network_dfe(&net, &travel, &params).unwrap();
        let humans: Vec<f64> = st.values()[travel.layout().human_offset()..].to_vec();
        for i in 0..3 {
            let a = st.mosquito(i, state::S_M);
            st.set_mosquito(i, state::S_M, 0.5 * a);
            st.set_mosquito(i, state::EGGS, 10.0);
        }
        let sim = Simulation::new(&net, &travel, params).unwrap();
        let traj = sim.integrate(&st, &IntegrateOptions::new(0.0, 1500.0)).unwrap();
        let eq = vector_endemic_equilibrium(&params, 1000.0, 500.0).unwrap();
        let end = &traj.final_state;
        for i in 0..3 {
            assert!((end.mosquito(i, state::S_M) / eq.adults - 1.0).abs() < 1e-6);
            assert!((end.mosquito(i, state::LARVAE) / eq.larvae - 1.0).abs() < 1e-6);
        }
        let after = &end.values()[travel.layout().human_offset()..];
        for (a, b) in after.iter().zip(&humans) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn frozen_mode_holds_aquatic_stages() {
        let net = line(2, 150.0);
        let travel = ring_travel(2);
        let params = ModelParams::reference(0.2, 0.15);
        let mut st = network_dfe(&net, &travel, &params).unwrap();
        st.seed_infection(0, 3.0).unwrap();
        let sim = Simulation::new(&net, &travel, params).unwrap().with_aquatic(AquaticMode::Frozen);
        let traj = sim.integrate(&st, &IntegrateOptions::new(0.0, 20.0)).unwrap();
        assert_eq!(
            traj.final_state.mosquito(1, state::LARVAE),
            st.mosquito(1, state::LARVAE)
        );
        assert!(traj.final_state.mosquito(1, state::I_M) > 0.0);
    }

    #[test]
    fn first_argmax_breaks_ties_early() {
        assert_eq!(first_argmax([1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(first_argmax(Vec::<f64>::new()), None);
    }
}
