//! Vector field of the network model.
//!
//! Humans resident at `i` and present at `j` are infected by the mosquito
//! pressure around their origin, `Λ_i = Σ_k ψ(d_ik) I_m,k`, divided by the
//! humans present at `j`. Mosquitoes at `i` are infected by
//! `Σ_k ψ(d_ik) I_H,k^p / N_H,k^p`. The aquatic stages follow the logistic
//! egg and larva equations with node-specific capacities.

use rayon::prelude::*;

use super::AquaticMode;
use crate::mobility::TravelMatrices;
use crate::model::ModelParams;
use crate::network::PatchNetwork;
use crate::state::{self, Layout, HUMAN_FIELDS, MOSQUITO_FIELDS};

/// Lower bound on present populations used as divisors.
pub const PRESENT_EPSILON: f64 = 1e-9;

const MIN_PAR_LEN: usize = 512;

/// Scratch buffers reused across evaluations.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    present_total: Vec<f64>,
    present_infected: Vec<f64>,
    /// Per origin: return inflow (S, I, R) and resident total.
    origin_sums: Vec<[f64; 4]>,
    mosquito_pressure: Vec<f64>,
    human_pressure: Vec<f64>,
}

pub(crate) struct Field<'a> {
    pub network: &'a PatchNetwork,
    pub matrices: &'a TravelMatrices,
    pub params: &'a ModelParams,
    pub aquatic: AquaticMode,
    /// Equilibrium larvae per node, fed to adults in frozen mode.
    pub frozen_larvae: &'a [f64],
}

#[inline]
fn brake(value: f64, capacity: f64) -> f64 {
    if capacity > 0.0 {
        1.0 - value / capacity
    } else {
        0.0
    }
}

impl Field<'_> {
    pub fn eval(&self, y: &[f64], dy: &mut [f64], ws: &mut Workspace) {
        let layout: &Layout = self.matrices.layout();
        let n = layout.node_count();
        let p = self.params;
        let d_h = p.d_h();
        let hum = layout.human_offset();
        debug_assert_eq!(y.len(), layout.dimension());

        // Present populations, accumulated in pair order.
        ws.present_total.clear();
        ws.present_total.resize(n, 0.0);
        ws.present_infected.clear();
        ws.present_infected.resize(n, 0.0);
        let humans = &y[hum..];
        for (pair, h) in humans.chunks_exact(HUMAN_FIELDS).enumerate() {
            let j = layout.dest(pair);
            ws.present_total[j] += h[0] + h[1] + h[2];
            ws.present_infected[j] += h[1];
        }

        let matrices = self.matrices;
        ws.origin_sums.clear();
        ws.origin_sums.resize(n, [0.0; 4]);
        ws.origin_sums
            .par_iter_mut()
            .with_min_len(MIN_PAR_LEN)
            .enumerate()
            .for_each(|(i, sums)| {
                let mut acc = [0.0; 4];
                for pair in layout.pairs_of(i) {
                    let h = &humans[HUMAN_FIELDS * pair..HUMAN_FIELDS * pair + HUMAN_FIELDS];
                    let r = matrices.ret(pair);
                    acc[0] += r * h[0];
                    acc[1] += r * h[1];
                    acc[2] += r * h[2];
                    acc[3] += h[0] + h[1] + h[2];
                }
                *sums = acc;
            });

        let network = self.network;
        let present_total = &ws.present_total;
        let present_infected = &ws.present_infected;
        let infected_share = |k: usize| present_infected[k] / present_total[k].max(PRESENT_EPSILON);
        ws.mosquito_pressure.clear();
        ws.mosquito_pressure.resize(n, 0.0);
        ws.human_pressure.clear();
        ws.human_pressure.resize(n, 0.0);
        ws.mosquito_pressure
            .par_iter_mut()
            .zip(ws.human_pressure.par_iter_mut())
            .with_min_len(MIN_PAR_LEN)
            .enumerate()
            .for_each(|(i, (lambda, phi))| {
                let sw = network.self_weight(i);
                let mut l = sw * y[MOSQUITO_FIELDS * i + state::I_M];
                let mut f = sw * infected_share(i);
                let (nbrs, weights) = network.kernel_row(i);
                for (&k, &w) in nbrs.iter().zip(weights) {
                    l += w * y[MOSQUITO_FIELDS * k + state::I_M];
                    f += w * infected_share(k);
                }
                *lambda = l;
                *phi = f;
            });

        let origin_sums = &ws.origin_sums;
        let lambda = &ws.mosquito_pressure;
        let (dy_mosq, dy_hum) = dy.split_at_mut(hum);
        dy_hum
            .par_chunks_mut(HUMAN_FIELDS)
            .with_min_len(MIN_PAR_LEN)
            .enumerate()
            .for_each(|(pair, out)| {
                let o = layout.origin(pair);
                let h = &humans[HUMAN_FIELDS * pair..HUMAN_FIELDS * pair + HUMAN_FIELDS];
                let (s, i, r) = (h[0], h[1], h[2]);
                let home = layout.home_pair(o);
                if pair == home {
                    let sums = origin_sums[o];
                    let g = matrices.leave_rate(o);
                    let foi = p.beta_h * lambda[o] / present_total[o].max(PRESENT_EPSILON) * s;
                    out[0] = d_h * (sums[3] - s) - g * s + sums[0] - foi;
                    out[1] = -d_h * i - g * i + sums[1] + foi - p.gamma_h * i;
                    out[2] = p.gamma_h * i - d_h * r - g * r + sums[2];
                } else {
                    let j = layout.dest(pair);
                    let dep = matrices.depart(pair);
                    let ret = matrices.ret(pair);
                    let hh = &humans[HUMAN_FIELDS * home..HUMAN_FIELDS * home + HUMAN_FIELDS];
                    let foi = p.beta_h * lambda[o] / present_total[j].max(PRESENT_EPSILON) * s;
                    out[0] = dep * hh[0] - d_h * s - ret * s - foi;
                    out[1] = dep * hh[1] - d_h * i - ret * i + foi - p.gamma_h * i;
                    out[2] = dep * hh[2] + p.gamma_h * i - d_h * r - ret * r;
                }
            });

        let phi = &ws.human_pressure;
        let frozen = self.aquatic == AquaticMode::Frozen;
        let frozen_larvae = self.frozen_larvae;
        dy_mosq
            .par_chunks_mut(MOSQUITO_FIELDS)
            .with_min_len(MIN_PAR_LEN)
            .enumerate()
            .for_each(|(node, out)| {
                let m = &y[MOSQUITO_FIELDS * node..MOSQUITO_FIELDS * node + MOSQUITO_FIELDS];
                let (eggs, larvae, s_m, i_m) = (m[0], m[1], m[2], m[3]);
                let info = &network.nodes()[node];
                let feed = if frozen { frozen_larvae[node] } else { larvae };
                let infection = p.beta_m * s_m * phi[node];
                out[state::S_M] = p.s_l * feed - p.d_m * s_m - infection;
                out[state::I_M] = infection - p.d_m * i_m;
                if frozen {
                    out[state::EGGS] = 0.0;
                    out[state::LARVAE] = 0.0;
                } else {
                    out[state::EGGS] = p.b * (s_m + i_m) * brake(eggs, info.k_e) - (p.s + p.d) * eggs;
                    out[state::LARVAE] =
                        p.s * eggs * brake(larvae, info.k_l) - (p.s_l + p.d_l) * larvae;
                }
            });
    }
}
