//! Shared fixtures and an independent dense transcription of the network
//! vector field.

#![allow(dead_code)]

use metapop::geo::IslandConfig;
use metapop::model::ModelParams;
use metapop::network::PatchNode;
use metapop::state::{self, NetworkState};
use metapop::{PatchNetwork, TravelMatrices};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-9;

/// Small random network with random travel links and rates.
pub struct Fixture {
    pub network: PatchNetwork,
    pub matrices: TravelMatrices,
    pub params: ModelParams,
}

pub fn random_fixture(seed: u64, n: usize) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_max = 200.0;
    // Nodes on a coarse lattice with jitter keep coordinates distinct while
    // leaving some pairs inside the kernel range and some outside.
    let nodes: Vec<PatchNode> = (0..n)
        .map(|id| {
            let (gx, gy) = ((id % 4) as f64, (id / 4) as f64);
            PatchNode {
                id,
                x: gx * 120.0 + rng.gen_range(-30.0..30.0),
                y: gy * 120.0 + rng.gen_range(-30.0..30.0),
                population: rng.gen_range(1.0..100.0),
                area: rng.gen_range(1e3..2e5),
                k_e: rng.gen_range(0.0..1000.0),
                k_l: rng.gen_range(0.0..500.0),
            }
        })
        .collect();
    let network = PatchNetwork::new(nodes, d_max).unwrap();
    let lists: Vec<Vec<(usize, f64, f64)>> = (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let keep = rng.gen_range(0..=others.len());
            for k in 0..keep {
                let pick = rng.gen_range(k..others.len());
                others.swap(k, pick);
            }
            others.truncate(keep);
            others
                .into_iter()
                .map(|j| (j, rng.gen_range(0.0..0.5), rng.gen_range(0.0..2.0)))
                .collect()
        })
        .collect();
    let matrices = TravelMatrices::from_lists(&lists).unwrap();
    let params = ModelParams::reference(rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5));
    Fixture {
        network,
        matrices,
        params,
    }
}

/// Random non-negative state, with empty pairs now and then so that guarded
/// divisors are exercised.
pub fn random_state(f: &Fixture, seed: u64) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = f.matrices.layout().clone();
    let mut st = NetworkState::zeros(layout.clone());
    for i in 0..layout.node_count() {
        for field in 0..state::MOSQUITO_FIELDS {
            st.set_mosquito(i, field, rng.gen_range(0.0..800.0));
        }
    }
    for p in 0..layout.pair_count() {
        if rng.gen_bool(0.1) {
            continue;
        }
        for field in 0..state::HUMAN_FIELDS {
            st.set_human(p, field, rng.gen_range(0.0..60.0));
        }
    }
    st
}

fn psi(a: &PatchNode, b: &PatchNode, d_max: f64) -> f64 {
    let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    if d == 0.0 {
        1.0
    } else if d < d_max {
        (d_max - d) / d_max
    } else {
        0.0
    }
}

/// Dense vector field written directly from the model equations, with full
/// `n x n` human tables. Returns the derivative in the sparse layout order.
pub fn dense_rhs(f: &Fixture, st: &NetworkState) -> Vec<f64> {
    let layout = f.matrices.layout();
    let n = layout.node_count();
    let p = &f.params;
    let nodes = f.network.nodes();
    let d_max = f.network.d_max();

    let mut a = vec![vec![0.0; n]; n];
    let mut r = vec![vec![0.0; n]; n];
    let mut s = vec![vec![0.0; n]; n];
    let mut inf = vec![vec![0.0; n]; n];
    let mut rec = vec![vec![0.0; n]; n];
    for i in 0..n {
        for pair in layout.pairs_of(i) {
            let j = layout.dest(pair);
            a[i][j] = f.matrices.depart(pair);
            r[i][j] = f.matrices.ret(pair);
            s[i][j] = st.human(pair, state::S_H);
            inf[i][j] = st.human(pair, state::I_H);
            rec[i][j] = st.human(pair, state::R_H);
        }
    }
    let e: Vec<f64> = (0..n).map(|i| st.mosquito(i, state::EGGS)).collect();
    let l: Vec<f64> = (0..n).map(|i| st.mosquito(i, state::LARVAE)).collect();
    let sm: Vec<f64> = (0..n).map(|i| st.mosquito(i, state::S_M)).collect();
    let im: Vec<f64> = (0..n).map(|i| st.mosquito(i, state::I_M)).collect();

    let present: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|i| s[i][j] + inf[i][j] + rec[i][j]).sum())
        .collect();
    let present_i: Vec<f64> = (0..n).map(|j| (0..n).map(|i| inf[i][j]).sum()).collect();
    let resident: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| s[i][j] + inf[i][j] + rec[i][j]).sum())
        .collect();
    let g: Vec<f64> = (0..n).map(|i| a[i].iter().sum()).collect();
    let pressure: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| psi(&nodes[i], &nodes[k], d_max) * im[k]).sum())
        .collect();
    let dh = p.b_h;

    let mut ds = vec![vec![0.0; n]; n];
    let mut di = vec![vec![0.0; n]; n];
    let mut dr = vec![vec![0.0; n]; n];
    for i in 0..n {
        let back_s: f64 = (0..n).filter(|&k| k != i).map(|k| r[i][k] * s[i][k]).sum();
        let back_i: f64 = (0..n).filter(|&k| k != i).map(|k| r[i][k] * inf[i][k]).sum();
        let back_r: f64 = (0..n).filter(|&k| k != i).map(|k| r[i][k] * rec[i][k]).sum();
        let foi = p.beta_h * pressure[i] / present[i].max(EPS) * s[i][i];
        ds[i][i] = dh * (resident[i] - s[i][i]) - g[i] * s[i][i] + back_s - foi;
        di[i][i] = -dh * inf[i][i] - g[i] * inf[i][i] + back_i + foi - p.gamma_h * inf[i][i];
        dr[i][i] = p.gamma_h * inf[i][i] - dh * rec[i][i] - g[i] * rec[i][i] + back_r;
        for j in (0..n).filter(|&j| j != i) {
            let foi = p.beta_h * pressure[i] / present[j].max(EPS) * s[i][j];
            ds[i][j] = a[i][j] * s[i][i] - dh * s[i][j] - r[i][j] * s[i][j] - foi;
            di[i][j] = a[i][j] * inf[i][i] - dh * inf[i][j] - r[i][j] * inf[i][j] + foi
                - p.gamma_h * inf[i][j];
            dr[i][j] = a[i][j] * rec[i][i] + p.gamma_h * inf[i][j] - dh * rec[i][j] - r[i][j] * rec[i][j];
        }
    }

    let mut out = vec![0.0; layout.dimension()];
    for i in 0..n {
        let node = &nodes[i];
        let infection: f64 = p.beta_m
            * sm[i]
            * (0..n)
                .map(|k| psi(node, &nodes[k], d_max) * present_i[k] / present[k].max(EPS))
                .sum::<f64>();
        let egg_brake = if node.k_e > 0.0 { 1.0 - e[i] / node.k_e } else { 0.0 };
        let larva_brake = if node.k_l > 0.0 { 1.0 - l[i] / node.k_l } else { 0.0 };
        out[layout.mosquito_index(i, state::EGGS)] = p.b * (sm[i] + im[i]) * egg_brake - (p.s + p.d) * e[i];
        out[layout.mosquito_index(i, state::LARVAE)] = p.s * e[i] * larva_brake - (p.s_l + p.d_l) * l[i];
        out[layout.mosquito_index(i, state::S_M)] = p.s_l * l[i] - p.d_m * sm[i] - infection;
        out[layout.mosquito_index(i, state::I_M)] = infection - p.d_m * im[i];
        for pair in layout.pairs_of(i) {
            let j = layout.dest(pair);
            out[layout.human_index(pair, state::S_H)] = ds[i][j];
            out[layout.human_index(pair, state::I_H)] = di[i][j];
            out[layout.human_index(pair, state::R_H)] = dr[i][j];
        }
    }
    out
}

/// Largest entrywise gap relative to the larger magnitude, floored at one.
pub fn max_relative_gap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Desk-scale island: six dense towns over an 8 x 6 km rectangle.
pub fn desk_island(node_count: usize, population_total: u64) -> IslandConfig {
    IslandConfig {
        node_count,
        width_m: 8000.0,
        height_m: 6000.0,
        population_total,
        cluster_count: 6,
        cluster_spread_m: 200.0,
        background_fraction: 0.0,
        seed: 1,
        ..IslandConfig::default()
    }
}

fn full_node(id: usize, x: f64, y: f64, population: f64) -> PatchNode {
    let p = ModelParams::reference(0.0, 0.0);
    PatchNode {
        id,
        x,
        y,
        population,
        area: 1.0,
        k_e: p.k_e,
        k_l: p.k_l,
    }
}

/// Twenty nodes 1 km apart on a ring, out of mosquito range of each other,
/// with travel to the next two nodes around the ring.
pub fn travel_ring(population: f64) -> (PatchNetwork, TravelMatrices) {
    let n = 20;
    let radius = 1000.0 * n as f64 / std::f64::consts::TAU;
    let nodes = (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            full_node(k, radius * a.cos(), radius * a.sin(), population)
        })
        .collect();
    let lists: Vec<Vec<(usize, f64, f64)>> = (0..n)
        .map(|i| vec![((i + 1) % n, 0.2, 1.0), ((i + 2) % n, 0.1, 1.0)])
        .collect();
    (
        PatchNetwork::new(nodes, 200.0).unwrap(),
        TravelMatrices::from_lists(&lists).unwrap(),
    )
}

/// A town of 15 nodes 100 m apart with travel among them, and 5 outlying
/// nodes whose residents commute into the town but receive no visitors.
pub fn town_with_outliers() -> (PatchNetwork, TravelMatrices) {
    let mut nodes: Vec<PatchNode> = (0..15)
        .map(|k| full_node(k, (k % 5) as f64 * 100.0, (k / 5) as f64 * 100.0, 500.0))
        .collect();
    nodes.extend((0..5).map(|k| full_node(15 + k, 2000.0 + k as f64 * 1000.0, 3000.0, 500.0)));
    let lists: Vec<Vec<(usize, f64, f64)>> = (0..20)
        .map(|i| {
            if i < 15 {
                vec![((i + 7) % 15, 0.3, 1.0)]
            } else {
                vec![(i - 15, 0.3, 1.0), (i - 10, 0.2, 1.0)]
            }
        })
        .collect();
    (
        PatchNetwork::new(nodes, 200.0).unwrap(),
        TravelMatrices::from_lists(&lists).unwrap(),
    )
}

/// Infection rates below threshold on [`travel_ring`].
pub const SUBCRITICAL: (f64, f64) = (0.01, 0.01);
/// Infection rates mildly above threshold on [`town_with_outliers`]: the
/// infection settles near its endemic level instead of collapsing into a deep
/// trough after the first wave.
pub const SUPERCRITICAL: (f64, f64) = (0.04, 0.04);
