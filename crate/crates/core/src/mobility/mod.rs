//! Synthetic human mobility: ranked destinations from the trip-length law,
//! Zipf presence weights, and the sparse departure/return rate tables.

pub mod destinations;
pub mod trip_length;

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use destinations::generate_destinations;
pub use trip_length::{sample_trip_length, TripLengthLaw};

use crate::error::{Error, Result};
use crate::model::{vector_equilibrium_or_extinct, ModelParams};
use crate::network::PatchNetwork;
use crate::state::{self, Layout, NetworkState};

pub const MOBILITY_HEADER: &str = "origin,dest,depart_rate,return_rate";

/// Parameters of synthetic mobility generation.
///
/// `power_beta` is the trip-length exponent. Only the cutoff and the
/// exponential scale are pinned by the mobility data this model builds on;
/// the default 1.75 is the exponent reported for mobile-phone trajectories
/// and should be treated as a calibration knob, like `g_default`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityGenConfig {
    /// Trip-length cutoff Δr₀, km.
    pub delta_r0: f64,
    /// Exponential decay scale κ, km.
    pub kappa: f64,
    pub power_beta: f64,
    /// Ranked destinations per origin.
    pub destinations_per_node: usize,
    /// Per-capita leave rate g, 1/day.
    pub g_default: f64,
    /// Per-capita return rate r, 1/day.
    pub return_rate: f64,
    pub seed: u64,
}

impl Default for MobilityGenConfig {
    fn default() -> Self {
        MobilityGenConfig {
            delta_r0: 1.5,
            kappa: 80.0,
            power_beta: 1.75,
            destinations_per_node: 40,
            g_default: 0.5,
            return_rate: 1.0,
            seed: 0,
        }
    }
}

impl MobilityGenConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("delta_r0", self.delta_r0),
            ("kappa", self.kappa),
            ("power_beta", self.power_beta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive, got {v}"),
                });
            }
        }
        for (name, v) in [("g_default", self.g_default), ("return_rate", self.return_rate)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be non-negative, got {v}"),
                });
            }
        }
        if self.destinations_per_node == 0 {
            return Err(Error::InvalidParameter {
                name: "destinations_per_node",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// Zipf presence probabilities for ranks `1..=n`.
pub fn zipf_presence(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("zipf presence needs at least one destination".into()));
    }
    let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    Ok((1..=n).map(|k| 1.0 / k as f64 / harmonic).collect())
}

/// Sparse human travel rates. Departures `g_i m_ji` and returns `r_ij` are
/// stored on one shared pattern, indexed by the pairs of a [`Layout`]; home
/// pairs carry zero rates.
#[derive(Clone, Debug, PartialEq)]
pub struct TravelMatrices {
    layout: Arc<Layout>,
    depart: Vec<f64>,
    ret: Vec<f64>,
    leave_rate: Vec<f64>,
}

impl TravelMatrices {
    /// Node-local population: no stored travel.
    pub fn sedentary(n: usize) -> Self {
        let layout = Arc::new(Layout::new(&vec![Vec::new(); n]).expect("empty lists are valid"));
        Self::from_pair_rates(layout.clone(), vec![0.0; n], vec![0.0; n]).expect("consistent sizes")
    }

    /// Tables from per-origin lists of `(dest, depart_rate, return_rate)`.
    pub fn from_lists(lists: &[Vec<(usize, f64, f64)>]) -> Result<Self> {
        let dests: Vec<Vec<usize>> = lists
            .iter()
            .map(|l| l.iter().map(|&(j, _, _)| j).collect())
            .collect();
        let layout = Arc::new(Layout::new(&dests)?);
        let mut depart = vec![0.0; layout.pair_count()];
        let mut ret = vec![0.0; layout.pair_count()];
        for (i, list) in lists.iter().enumerate() {
            for (k, &(_, g_m, r)) in list.iter().enumerate() {
                let p = layout.home_pair(i) + 1 + k;
                depart[p] = g_m;
                ret[p] = r;
            }
        }
        Self::from_pair_rates(layout, depart, ret)
    }

    pub(crate) fn from_pair_rates(layout: Arc<Layout>, depart: Vec<f64>, ret: Vec<f64>) -> Result<Self> {
        if depart.len() != layout.pair_count() || ret.len() != layout.pair_count() {
            return Err(Error::InvalidInput("rate vectors do not match the pattern".into()));
        }
        for p in 0..layout.pair_count() {
            if !(depart[p] >= 0.0 && depart[p].is_finite() && ret[p] >= 0.0 && ret[p].is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "pair {p}: rates must be finite and non-negative"
                )));
            }
        }
        let n = layout.node_count();
        let mut leave_rate = vec![0.0; n];
        for (i, g) in leave_rate.iter_mut().enumerate() {
            let home = layout.home_pair(i);
            if depart[home] != 0.0 || ret[home] != 0.0 {
                return Err(Error::InvalidInput(format!("node {i}: home rates must be zero")));
            }
            *g = layout.pairs_of(i).map(|p| depart[p]).sum();
        }
        Ok(TravelMatrices {
            layout,
            depart,
            ret,
            leave_rate,
        })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn node_count(&self) -> usize {
        self.layout.node_count()
    }

    /// Departure rate `g_i m_ji` of pair `p = (i, j)`.
    #[inline]
    pub fn depart(&self, pair: usize) -> f64 {
        self.depart[pair]
    }

    /// Return rate `r_ij` of pair `p = (i, j)`.
    #[inline]
    pub fn ret(&self, pair: usize) -> f64 {
        self.ret[pair]
    }

    pub fn depart_rates(&self) -> &[f64] {
        &self.depart
    }

    pub fn return_rates(&self) -> &[f64] {
        &self.ret
    }

    /// Total leave rate `g_i = Σ_j g_i m_ji`.
    #[inline]
    pub fn leave_rate(&self, origin: usize) -> f64 {
        self.leave_rate[origin]
    }

    /// Split fractions `m_ji` of origin `i`, in stored order.
    pub fn split_fractions(&self, origin: usize) -> Vec<(usize, f64)> {
        let g = self.leave_rate[origin];
        self.layout
            .pairs_of(origin)
            .skip(1)
            .map(|p| (self.layout.dest(p), if g > 0.0 { self.depart[p] / g } else { 0.0 }))
            .collect()
    }

    /// Same pattern with new rates (used by quarantine masking).
    pub fn with_rates(&self, depart: Vec<f64>, ret: Vec<f64>) -> Result<Self> {
        Self::from_pair_rates(self.layout.clone(), depart, ret)
    }

    /// Undirected human mobility links `{i, j}`.
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.layout.link_count());
        for i in 0..self.node_count() {
            for p in self.layout.pairs_of(i).skip(1) {
                out.push((i, self.layout.dest(p)));
            }
        }
        out
    }

    /// Directed successors of each node in the travel graph.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        (0..self.node_count())
            .map(|i| {
                self.layout
                    .pairs_of(i)
                    .skip(1)
                    .filter(|&p| self.depart[p] > 0.0)
                    .map(|p| self.layout.dest(p))
                    .collect()
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(MOBILITY_HEADER);
        out.push('\n');
        for i in 0..self.node_count() {
            for p in self.layout.pairs_of(i).skip(1) {
                let _ = writeln!(out, "{},{},{},{}", i, self.layout.dest(p), self.depart[p], self.ret[p]);
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::network::io::write_text(path.as_ref(), &self.to_csv())
    }

    /// Reads `mobility.csv` for a network of `n` nodes. Rows of one origin
    /// keep their file order as rank order.
    pub fn read_csv(path: impl AsRef<Path>, n: usize) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            origin: usize,
            dest: usize,
            depart_rate: f64,
            return_rate: f64,
        }
        let path = path.as_ref();
        let rows: Vec<Row> = crate::network::io::read_records(
            path,
            &["origin", "dest", "depart_rate", "return_rate"],
        )?;
        let mut lists = vec![Vec::new(); n];
        for (k, row) in rows.into_iter().enumerate() {
            if row.origin >= n || row.dest >= n {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: k as u64 + 2,
                    message: format!("node index out of range for {n} nodes"),
                });
            }
            lists[row.origin].push((row.dest, row.depart_rate, row.return_rate));
        }
        Self::from_lists(&lists).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: 0,
            message: e.to_string(),
        })
    }
}

/// Travel tables from ranked destinations: Zipf presence weights become the
/// split fractions, every node leaves at `g_default` and returns at
/// `return_rate` on exactly the same pattern.
pub fn build_travel_matrices(destinations: &[Vec<usize>], cfg: &MobilityGenConfig) -> Result<TravelMatrices> {
    cfg.validate()?;
    if cfg.g_default == 0.0 {
        return Ok(TravelMatrices::sedentary(destinations.len()));
    }
    let lists: Vec<Vec<(usize, f64, f64)>> = destinations
        .iter()
        .map(|dests| {
            if dests.is_empty() {
                return Ok(Vec::new());
            }
            let weights = zipf_presence(dests.len())?;
            Ok(dests
                .iter()
                .zip(weights)
                .map(|(&j, m)| (j, cfg.g_default * m, cfg.return_rate))
                .collect())
        })
        .collect::<Result<_>>()?;
    TravelMatrices::from_lists(&lists)
}

/// Destinations and travel tables for a network in one call.
pub fn generate_travel_matrices(network: &PatchNetwork, cfg: &MobilityGenConfig) -> Result<TravelMatrices> {
    let dests = generate_destinations(&network.coords(), cfg)?;
    build_travel_matrices(&dests, cfg)
}

/// Disease-free human distribution: for every origin, the home share
/// `N_i / (1 + Σ_k g_i m_ki / (d_H + r_ik))` and traveller shares
/// `g_i m_ji / (d_H + r_ij)` of it. Returns `S_H` per pair.
pub fn human_dfe(matrices: &TravelMatrices, populations: &[f64], d_h: f64) -> Result<Vec<f64>> {
    let layout = matrices.layout();
    if populations.len() != layout.node_count() {
        return Err(Error::InvalidInput(format!(
            "{} populations for {} nodes",
            populations.len(),
            layout.node_count()
        )));
    }
    if !(d_h >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "d_h",
            reason: format!("must be non-negative, got {d_h}"),
        });
    }
    let mut s = vec![0.0; layout.pair_count()];
    for (i, &n_i) in populations.iter().enumerate() {
        let mut ratios = 0.0;
        for p in layout.pairs_of(i).skip(1) {
            let denom = d_h + matrices.ret(p);
            let g_m = matrices.depart(p);
            if g_m > 0.0 {
                if denom == 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "pair ({i}, {}): d_H + r is zero",
                        layout.dest(p)
                    )));
                }
                ratios += g_m / denom;
            }
        }
        let home = layout.home_pair(i);
        let s_home = n_i / (1.0 + ratios);
        s[home] = s_home;
        for p in layout.pairs_of(i).skip(1) {
            let g_m = matrices.depart(p);
            if g_m > 0.0 {
                s[p] = g_m / (d_h + matrices.ret(p)) * s_home;
            }
        }
    }
    Ok(s)
}

/// Disease-free equilibrium of the full network: humans per [`human_dfe`],
/// mosquitoes at each node's vector equilibrium with no infection.
pub fn network_dfe(network: &PatchNetwork, matrices: &TravelMatrices, params: &ModelParams) -> Result<NetworkState> {
    if network.len() != matrices.node_count() {
        return Err(Error::InvalidInput(format!(
            "network has {} nodes, travel tables {}",
            network.len(),
            matrices.node_count()
        )));
    }
    let susceptible = human_dfe(matrices, &network.populations(), params.d_h())?;
    let mut state = NetworkState::zeros(matrices.layout().clone());
    for (p, &s) in susceptible.iter().enumerate() {
        state.set_human(p, state::S_H, s);
    }
    for node in network.nodes() {
        let eq = vector_equilibrium_or_extinct(params, node.k_e, node.k_l);
        state.set_mosquito(node.id, state::EGGS, eq.eggs);
        state.set_mosquito(node.id, state::LARVAE, eq.larvae);
        state.set_mosquito(node.id, state::S_M, eq.adults);
        state.set_mosquito(node.id, state::I_M, 0.0);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zipf_values() {
        assert_eq!(zipf_presence(1).unwrap(), vec![1.0]);
        let z = zipf_presence(3).unwrap();
        let expected = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];
        for (a, b) in z.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(zipf_presence(0).is_err());
    }

    proptest! {
        #[test]
        fn zipf_sums_to_one_and_decreases(n in 1usize..2000) {
            let z = zipf_presence(n).unwrap();
            prop_assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(z.windows(2).all(|w| w[0] > w[1]));
        }
    }

    fn cfg(g: f64) -> MobilityGenConfig {
        MobilityGenConfig {
            g_default: g,
            return_rate: 1.0,
            ..MobilityGenConfig::default()
        }
    }

    #[test]
    fn matrices_from_ranked_lists() {
        let m = build_travel_matrices(&[vec![1, 2, 3], vec![0], vec![], vec![]], &cfg(0.3)).unwrap();
        let split = m.split_fractions(0);
        let expected = [(1, 6.0 / 11.0), (2, 3.0 / 11.0), (3, 2.0 / 11.0)];
        for (got, want) in split.iter().zip(expected) {
            assert_eq!(got.0, want.0);
            assert!((got.1 - want.1).abs() < 1e-15);
        }
        assert!((m.leave_rate(0) - 0.3).abs() < 1e-15);
        assert_eq!(m.leave_rate(2), 0.0);
        for p in 0..m.layout().pair_count() {
            assert_eq!(m.depart(p) > 0.0, m.ret(p) > 0.0);
        }
    }

    #[test]
    fn sedentary_when_nobody_leaves() {
        let m = build_travel_matrices(&[vec![1], vec![0]], &cfg(0.0)).unwrap();
        assert_eq!(m.layout().link_count(), 0);
        let s = human_dfe(&m, &[10.0, 20.0], 1e-4).unwrap();
        assert_eq!(s, vec![10.0, 20.0]);
    }

    #[test]
    fn two_node_dfe() {
        let m = TravelMatrices::from_lists(&[vec![(1, 0.5, 1.0)], vec![(0, 0.5, 1.0)]]).unwrap();
        let d_h = 1.0 / (78.0 * 365.0);
        let s = human_dfe(&m, &[900.0, 900.0], d_h).unwrap();
        let home = 900.0 / (1.0 + 0.5 / (d_h + 1.0));
        assert!((s[0] - home).abs() < 1e-12);
        assert!((s[0] - 600.01).abs() < 0.01);
        assert!((s[1] - 300.0).abs() < 0.01);
        assert!((s[0] + s[1] - 900.0).abs() < 1e-10);
    }

    #[test]
    fn zero_denominator_rejected() {
        let m = TravelMatrices::from_lists(&[vec![(1, 0.5, 0.0)], vec![]]).unwrap();
        assert!(human_dfe(&m, &[1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn home_rates_must_be_zero() {
        let layout = Arc::new(Layout::new(&[vec![]]).unwrap());
        assert!(TravelMatrices::from_pair_rates(layout, vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = TravelMatrices::from_lists(&[vec![(2, 0.25, 1.0), (1, 0.125, 1.0)], vec![], vec![(0, 0.1, 0.5)]])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mobility.csv");
        m.write_csv(&path).unwrap();
        let back = TravelMatrices::read_csv(&path, 3).unwrap();
        assert_eq!(back, m);
        assert!(TravelMatrices::read_csv(&path, 2).is_err());
    }
}
