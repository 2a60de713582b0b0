//! The patch network: node geometry, Voronoi surfaces, carrying capacities
//! and the mosquito interaction kernel.

mod grid;
pub mod io;
pub mod metrics;
pub mod voronoi;

use serde::{Deserialize, Serialize};

pub(crate) use grid::PointGrid;
pub use metrics::{graph_metrics, GraphMetrics, MetricsOptions};
pub use voronoi::{voronoi_areas, Bounds};

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Default maximum mosquito interaction radius, in meters.
pub const DEFAULT_D_MAX: f64 = 200.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PatchNode {
    pub id: usize,
    /// Planar coordinates in meters.
    pub x: f64,
    pub y: f64,
    /// Resident humans.
    pub population: f64,
    /// Voronoi surface in square meters.
    pub area: f64,
    pub k_e: f64,
    pub k_l: f64,
}

/// Undirected mosquito interaction edge, stored once with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelEdge {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
    pub weight: f64,
}

/// How kernel weights enter the forces of infection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelNormalization {
    /// Raw weights; a node's total weight may exceed one.
    #[default]
    Raw,
    /// Each node's weights, including its own, are divided by their sum.
    RowSum,
}

/// Linearly decreasing interaction weight, zero at and beyond `d_max`.
#[inline]
pub fn kernel(distance: f64, d_max: f64) -> f64 {
    if distance < d_max {
        (d_max - distance) / d_max
    } else {
        0.0
    }
}

/// Egg and larva capacities proportional to the node surface, capped at the
/// disk of radius `d_max`.
pub fn carrying_capacities(areas: &[f64], params: &ModelParams, d_max: f64) -> Vec<(f64, f64)> {
    let s_max = std::f64::consts::PI * d_max * d_max;
    areas
        .iter()
        .map(|&area| {
            let phi = (area / s_max).min(1.0);
            (params.k_e * phi, params.k_l * phi)
        })
        .collect()
}

/// All pairs closer than `d_max` (and not coincident), with their kernel
/// weights, sorted by `(i, j)`.
pub fn mosquito_edges(coords: &[(f64, f64)], d_max: f64) -> Vec<KernelEdge> {
    assert!(d_max > 0.0, "d_max must be positive");
    if coords.is_empty() {
        return Vec::new();
    }
    let grid = PointGrid::new(coords, d_max);
    let mut edges = Vec::new();
    let mut row = Vec::new();
    for (i, &(x, y)) in coords.iter().enumerate() {
        row.clear();
        grid.for_each_candidate(x, y, d_max, |j| {
            if j > i {
                let dist = (coords[j].0 - x).hypot(coords[j].1 - y);
                if dist > 0.0 && dist < d_max {
                    row.push(KernelEdge {
                        i,
                        j,
                        distance: dist,
                        weight: kernel(dist, d_max),
                    });
                }
            }
        });
        row.sort_by_key(|e| e.j);
        edges.extend_from_slice(&row);
    }
    edges
}

/// Immutable patch network shared by simulation runs.
#[derive(Clone, Debug)]
pub struct PatchNetwork {
    nodes: Vec<PatchNode>,
    d_max: f64,
    edges: Vec<KernelEdge>,
    normalization: KernelNormalization,
    // Row-wise kernel weights in CSR form, self weight kept apart.
    starts: Vec<usize>,
    neighbours: Vec<usize>,
    weights: Vec<f64>,
    self_weights: Vec<f64>,
}

impl PatchNetwork {
    /// Network over fully specified nodes; kernel edges are computed.
    pub fn new(nodes: Vec<PatchNode>, d_max: f64) -> Result<Self> {
        let coords: Vec<(f64, f64)> = nodes.iter().map(|n| (n.x, n.y)).collect();
        validate_nodes(&nodes, d_max)?;
        voronoi::check_distinct(&coords)?;
        let edges = mosquito_edges(&coords, d_max);
        Ok(Self::assemble(nodes, d_max, edges, KernelNormalization::Raw))
    }

    /// Network with a precomputed edge list (for example a cached
    /// `mosq_edges.csv`). Edges are checked against the kernel.
    pub fn with_edges(nodes: Vec<PatchNode>, d_max: f64, mut edges: Vec<KernelEdge>) -> Result<Self> {
        validate_nodes(&nodes, d_max)?;
        let n = nodes.len();
        for e in &mut edges {
            if e.i >= n || e.j >= n {
                return Err(Error::NodeOutOfRange {
                    index: e.i.max(e.j),
                    count: n,
                });
            }
            if e.i == e.j || !(e.distance > 0.0 && e.distance < d_max) {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) with distance {} is outside (0, {d_max})",
                    e.i, e.j, e.distance
                )));
            }
            if e.i > e.j {
                std::mem::swap(&mut e.i, &mut e.j);
            }
            e.weight = kernel(e.distance, d_max);
        }
        edges.sort_by_key(|a| (a.i, a.j));
        edges.dedup_by(|a, b| (a.i, a.j) == (b.i, b.j));
        Ok(Self::assemble(nodes, d_max, edges, KernelNormalization::Raw))
    }

    /// Builds nodes from coordinates and populations: Voronoi areas inside
    /// `bounds`, capacities from the areas, then kernel edges.
    pub fn build(
        coords: &[(f64, f64)],
        populations: &[f64],
        bounds: &Bounds,
        params: &ModelParams,
        d_max: f64,
    ) -> Result<Self> {
        if coords.len() != populations.len() {
            return Err(Error::InvalidInput(format!(
                "{} coordinates but {} populations",
                coords.len(),
                populations.len()
            )));
        }
        let areas = voronoi_areas(coords, bounds)?;
        Self::from_areas(coords, populations, &areas, params, d_max)
    }

    pub fn from_areas(
        coords: &[(f64, f64)],
        populations: &[f64],
        areas: &[f64],
        params: &ModelParams,
        d_max: f64,
    ) -> Result<Self> {
        let capacities = carrying_capacities(areas, params, d_max);
        let nodes = coords
            .iter()
            .zip(populations)
            .zip(areas.iter().zip(capacities))
            .enumerate()
            .map(|(id, ((&(x, y), &population), (&area, (k_e, k_l))))| PatchNode {
                id,
                x,
                y,
                population,
                area,
                k_e,
                k_l,
            })
            .collect();
        Self::new(nodes, d_max)
    }

    fn assemble(
        nodes: Vec<PatchNode>,
        d_max: f64,
        edges: Vec<KernelEdge>,
        normalization: KernelNormalization,
    ) -> Self {
        let n = nodes.len();
        let mut starts = vec![0usize; n + 1];
        for e in &edges {
            starts[e.i + 1] += 1;
            starts[e.j + 1] += 1;
        }
        for k in 1..=n {
            starts[k] += starts[k - 1];
        }
        let mut fill = starts.clone();
        let mut neighbours = vec![0usize; starts[n]];
        let mut weights = vec![0.0; starts[n]];
        for e in &edges {
            neighbours[fill[e.i]] = e.j;
            weights[fill[e.i]] = e.weight;
            fill[e.i] += 1;
            neighbours[fill[e.j]] = e.i;
            weights[fill[e.j]] = e.weight;
            fill[e.j] += 1;
        }
        let mut self_weights = vec![1.0; n];
        if normalization == KernelNormalization::RowSum {
            for i in 0..n {
                let row = &mut weights[starts[i]..starts[i + 1]];
                let total = 1.0 + row.iter().sum::<f64>();
                row.iter_mut().for_each(|w| *w /= total);
                self_weights[i] = 1.0 / total;
            }
        }
        PatchNetwork {
            nodes,
            d_max,
            edges,
            normalization,
            starts,
            neighbours,
            weights,
            self_weights,
        }
    }

    pub fn nodes(&self) -> &[PatchNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn edges(&self) -> &[KernelEdge] {
        &self.edges
    }

    pub fn normalization(&self) -> KernelNormalization {
        self.normalization
    }

    pub fn coords(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().map(|n| (n.x, n.y)).collect()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.population).collect()
    }

    pub fn total_population(&self) -> f64 {
        self.nodes.iter().map(|n| n.population).sum()
    }

    /// Kernel neighbours of `i` (excluding `i`) and the weights used in the
    /// forces of infection at `i`.
    #[inline]
    pub fn kernel_row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.starts[i]..self.starts[i + 1];
        (&self.neighbours[r.clone()], &self.weights[r])
    }

    /// Weight of a node on itself: 1 for raw weights.
    #[inline]
    pub fn self_weight(&self, i: usize) -> f64 {
        self.self_weights[i]
    }

    pub fn with_normalization(&self, normalization: KernelNormalization) -> Self {
        Self::assemble(self.nodes.clone(), self.d_max, self.edges.clone(), normalization)
    }

    /// Same nodes with every mosquito interaction edge removed: mosquitoes
    /// only interact with their own node.
    pub fn without_mosquito_mobility(&self) -> Self {
        Self::assemble(self.nodes.clone(), self.d_max, Vec::new(), self.normalization)
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.i, e.j)).collect()
    }

    pub fn metrics(&self, options: MetricsOptions) -> Result<GraphMetrics> {
        graph_metrics(&self.edge_pairs(), self.len(), options)
    }
}

fn validate_nodes(nodes: &[PatchNode], d_max: f64) -> Result<()> {
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "d_max",
            reason: format!("must be positive, got {d_max}"),
        });
    }
    for (k, n) in nodes.iter().enumerate() {
        if n.id != k {
            return Err(Error::InvalidInput(format!(
                "node ids must be 0..{} in order; position {k} has id {}",
                nodes.len(),
                n.id
            )));
        }
        let finite = [n.x, n.y, n.population, n.area, n.k_e, n.k_l]
            .iter()
            .all(|v| v.is_finite());
        if !finite || n.population < 0.0 || n.area < 0.0 || n.k_e < 0.0 || n.k_l < 0.0 {
            return Err(Error::InvalidInput(format!(
                "node {k} has invalid values: {n:?}"
            )));
        }
    }
    Ok(())
}
