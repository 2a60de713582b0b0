//! Sparse network state.
//!
//! Humans are tracked per (origin, destination) pair over the stored travel
//! pattern only. Pairs are ordered by origin; within an origin the home pair
//! `(i, i)` comes first, followed by the destinations in rank order. The flat
//! vector holds `[E, L, S_m, I_m]` for every node, then `[S_H, I_H, R_H]` for
//! every pair.

use std::sync::Arc;

use crate::error::{Error, Result};

pub const MOSQUITO_FIELDS: usize = 4;
pub const HUMAN_FIELDS: usize = 3;

pub const EGGS: usize = 0;
pub const LARVAE: usize = 1;
pub const S_M: usize = 2;
pub const I_M: usize = 3;

pub const S_H: usize = 0;
pub const I_H: usize = 1;
pub const R_H: usize = 2;

/// Index layout of the sparse origin/destination state.
#[derive(Debug, PartialEq, Eq)]
pub struct Layout {
    nodes: usize,
    /// Pairs of origin `i` are `pair_starts[i]..pair_starts[i + 1]`; the first
    /// one is the home pair.
    pair_starts: Vec<usize>,
    pair_dest: Vec<usize>,
    pair_origin: Vec<usize>,
}

impl Layout {
    /// `destinations[i]` lists the distinct non-home destinations of origin
    /// `i` in rank order.
    pub fn new(destinations: &[Vec<usize>]) -> Result<Self> {
        let n = destinations.len();
        let mut pair_starts = Vec::with_capacity(n + 1);
        let mut pair_dest = Vec::with_capacity(n + destinations.iter().map(Vec::len).sum::<usize>());
        let mut seen = vec![usize::MAX; n];
        for (i, dests) in destinations.iter().enumerate() {
            pair_starts.push(pair_dest.len());
            pair_dest.push(i);
            seen[i] = i;
            for &j in dests {
                if j >= n {
                    return Err(Error::NodeOutOfRange { index: j, count: n });
                }
                if seen[j] == i {
                    return Err(Error::InvalidInput(format!(
                        "origin {i}: destination {j} repeated or equal to the origin"
                    )));
                }
                seen[j] = i;
                pair_dest.push(j);
            }
        }
        pair_starts.push(pair_dest.len());
        let mut pair_origin = vec![0; pair_dest.len()];
        for i in 0..n {
            pair_origin[pair_starts[i]..pair_starts[i + 1]].fill(i);
        }
        Ok(Layout {
            nodes: n,
            pair_starts,
            pair_dest,
            pair_origin,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn pair_count(&self) -> usize {
        self.pair_dest.len()
    }

    /// Stored non-home pairs.
    pub fn link_count(&self) -> usize {
        self.pair_dest.len() - self.nodes
    }

    pub fn dimension(&self) -> usize {
        MOSQUITO_FIELDS * self.nodes + HUMAN_FIELDS * self.pair_count()
    }

    #[inline]
    pub fn pairs_of(&self, origin: usize) -> std::ops::Range<usize> {
        self.pair_starts[origin]..self.pair_starts[origin + 1]
    }

    #[inline]
    pub fn home_pair(&self, origin: usize) -> usize {
        self.pair_starts[origin]
    }

    #[inline]
    pub fn dest(&self, pair: usize) -> usize {
        self.pair_dest[pair]
    }

    pub fn pair_starts(&self) -> &[usize] {
        &self.pair_starts
    }

    pub fn pair_dests(&self) -> &[usize] {
        &self.pair_dest
    }

    #[inline]
    pub fn origin(&self, pair: usize) -> usize {
        self.pair_origin[pair]
    }

    pub fn pair_origins(&self) -> &[usize] {
        &self.pair_origin
    }

    #[inline]
    pub fn mosquito_index(&self, node: usize, field: usize) -> usize {
        MOSQUITO_FIELDS * node + field
    }

    #[inline]
    pub fn human_offset(&self) -> usize {
        MOSQUITO_FIELDS * self.nodes
    }

    #[inline]
    pub fn human_index(&self, pair: usize, field: usize) -> usize {
        self.human_offset() + HUMAN_FIELDS * pair + field
    }

    /// Node and compartment name of a flat index, for diagnostics.
    pub fn describe(&self, index: usize) -> (usize, String) {
        if index < self.human_offset() {
            let name = ["E", "L", "S_m", "I_m"][index % MOSQUITO_FIELDS];
            (index / MOSQUITO_FIELDS, name.to_string())
        } else {
            let k = index - self.human_offset();
            let pair = k / HUMAN_FIELDS;
            let name = ["S_H", "I_H", "R_H"][k % HUMAN_FIELDS];
            let origin = self.pair_origin[pair];
            (origin, format!("{name}[{origin}->{}]", self.pair_dest[pair]))
        }
    }
}

/// Full dynamical state over a [`Layout`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    layout: Arc<Layout>,
    values: Vec<f64>,
}

impl NetworkState {
    pub fn zeros(layout: Arc<Layout>) -> Self {
        let values = vec![0.0; layout.dimension()];
        NetworkState { layout, values }
    }

    pub fn from_values(layout: Arc<Layout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dimension() {
            return Err(Error::InvalidInput(format!(
                "state has {} values, layout needs {}",
                values.len(),
                layout.dimension()
            )));
        }
        Ok(NetworkState { layout, values })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn node_count(&self) -> usize {
        self.layout.node_count()
    }

    #[inline]
    pub fn mosquito(&self, node: usize, field: usize) -> f64 {
        self.values[self.layout.mosquito_index(node, field)]
    }

    #[inline]
    pub fn set_mosquito(&mut self, node: usize, field: usize, value: f64) {
        let k = self.layout.mosquito_index(node, field);
        self.values[k] = value;
    }

    #[inline]
    pub fn human(&self, pair: usize, field: usize) -> f64 {
        self.values[self.layout.human_index(pair, field)]
    }

    #[inline]
    pub fn set_human(&mut self, pair: usize, field: usize, value: f64) {
        let k = self.layout.human_index(pair, field);
        self.values[k] = value;
    }

    /// Residents of `origin` wherever they are.
    pub fn resident_total(&self, origin: usize) -> f64 {
        self.layout
            .pairs_of(origin)
            .map(|p| self.human(p, S_H) + self.human(p, I_H) + self.human(p, R_H))
            .sum()
    }

    pub fn resident_totals(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.resident_total(i)).collect()
    }

    /// Humans present on each node, per compartment.
    pub fn present_totals(&self) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.node_count()];
        for p in 0..self.layout.pair_count() {
            let j = self.layout.dest(p);
            for (f, slot) in out[j].iter_mut().enumerate() {
                *slot += self.human(p, f);
            }
        }
        out
    }

    /// Moves `count` susceptible residents of `node` at home into the
    /// infected compartment.
    pub fn seed_infection(&mut self, node: usize, count: f64) -> Result<()> {
        if node >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                index: node,
                count: self.node_count(),
            });
        }
        if !(count >= 0.0) {
            return Err(Error::InvalidInput(format!("seed count must be non-negative, got {count}")));
        }
        let home = self.layout.home_pair(node);
        let available = self.human(home, S_H);
        if available < count {
            return Err(Error::InsufficientSusceptibles {
                node,
                available,
                requested: count,
            });
        }
        self.set_human(home, S_H, available - count);
        let infected = self.human(home, I_H);
        self.set_human(home, I_H, infected + count);
        Ok(())
    }
}
