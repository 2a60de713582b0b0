//! Size, degree, connectivity and diameter of an undirected graph.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphMetrics {
    pub node_count: usize,
    pub link_count: usize,
    pub average_degree: f64,
    pub connected_component_count: usize,
    pub largest_component_size: usize,
    /// Exact diameter of the largest component, when computed.
    pub diameter: Option<usize>,
    /// Double-sweep lower bound on the diameter of the largest component.
    pub diameter_lower_bound: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct MetricsOptions {
    /// Largest component size for which the exact diameter is computed
    /// without `force_exact_diameter`.
    pub exact_diameter_limit: usize,
    pub force_exact_diameter: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            exact_diameter_limit: 5000,
            force_exact_diameter: false,
        }
    }
}

/// Metrics of the undirected graph on `node_count` nodes spanned by `edges`.
/// Self loops are ignored and parallel or reversed duplicates count once.
pub fn graph_metrics(
    edges: &[(usize, usize)],
    node_count: usize,
    options: MetricsOptions,
) -> Result<GraphMetrics> {
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        for v in [a, b] {
            if v >= node_count {
                return Err(Error::NodeOutOfRange {
                    index: v,
                    count: node_count,
                });
            }
        }
        if a != b {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();

    if node_count == 0 {
        return Ok(GraphMetrics {
            node_count: 0,
            link_count: 0,
            average_degree: 0.0,
            connected_component_count: 0,
            largest_component_size: 0,
            diameter: None,
            diameter_lower_bound: None,
        });
    }

    let adjacency = Adjacency::new(node_count, &pairs);
    let mut uf = UnionFind::new(node_count);
    for &(a, b) in &pairs {
        uf.union(a, b);
    }
    let mut sizes = vec![0usize; node_count];
    for v in 0..node_count {
        sizes[uf.find(v)] += 1;
    }
    let components = sizes.iter().filter(|&&s| s > 0).count();
    // First root in index order among the largest components.
    let (largest_root, largest) = sizes
        .iter()
        .enumerate()
        .fold((0, 0), |best, (root, &s)| if s > best.1 { (root, s) } else { best });
    let members: Vec<usize> = (0..node_count)
        .filter(|&v| uf.find(v) == largest_root)
        .collect();

    let mut dist = vec![usize::MAX; node_count];
    let (far, _) = adjacency.bfs(members[0], &mut dist);
    let (_, lower) = adjacency.bfs(far, &mut dist);

    let diameter = if options.force_exact_diameter || largest <= options.exact_diameter_limit {
        let exact = members
            .par_iter()
            .map_init(
                || vec![usize::MAX; node_count],
                |dist, &v| adjacency.bfs(v, dist).1,
            )
            .max()
            .unwrap_or(0);
        debug_assert!(exact >= lower);
        Some(exact)
    } else {
        None
    };

    Ok(GraphMetrics {
        node_count,
        link_count: pairs.len(),
        average_degree: 2.0 * pairs.len() as f64 / node_count as f64,
        connected_component_count: components,
        largest_component_size: largest,
        diameter,
        diameter_lower_bound: Some(lower),
    })
}

struct Adjacency {
    starts: Vec<usize>,
    targets: Vec<usize>,
}

impl Adjacency {
    fn new(n: usize, pairs: &[(usize, usize)]) -> Self {
        let mut starts = vec![0usize; n + 1];
        for &(a, b) in pairs {
            starts[a + 1] += 1;
            starts[b + 1] += 1;
        }
        for k in 1..=n {
            starts[k] += starts[k - 1];
        }
        let mut fill = starts.clone();
        let mut targets = vec![0usize; starts[n]];
        for &(a, b) in pairs {
            targets[fill[a]] = b;
            fill[a] += 1;
            targets[fill[b]] = a;
            fill[b] += 1;
        }
        Adjacency { starts, targets }
    }

    /// Returns the farthest node (lowest index on ties) and its distance.
    fn bfs(&self, source: usize, dist: &mut [usize]) -> (usize, usize) {
        dist.fill(usize::MAX);
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        let mut far = (source, 0);
        while let Some(v) = queue.pop_front() {
            let dv = dist[v];
            if dv > far.1 || (dv == far.1 && v < far.0) {
                far = (v, dv);
            }
            for &w in &self.targets[self.starts[v]..self.starts[v + 1]] {
                if dist[w] == usize::MAX {
                    dist[w] = dv + 1;
                    queue.push_back(w);
                }
            }
        }
        far
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_of_three() {
        let m = graph_metrics(&[(0, 1), (1, 2)], 3, MetricsOptions::default()).unwrap();
        assert_eq!(m.diameter, Some(2));
        assert_eq!(m.connected_component_count, 1);
        assert!((m.average_degree - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_disjoint_edges() {
        let m = graph_metrics(&[(0, 1), (2, 3)], 4, MetricsOptions::default()).unwrap();
        assert_eq!(m.connected_component_count, 2);
        assert_eq!(m.link_count, 2);
        assert_eq!(m.diameter, Some(1));
    }

    #[test]
    fn empty_graph_has_no_diameter() {
        let m = graph_metrics(&[], 0, MetricsOptions::default()).unwrap();
        assert_eq!(m.node_count, 0);
        assert_eq!(m.diameter, None);
    }

    #[test]
    fn duplicates_and_loops_ignored() {
        let m = graph_metrics(&[(0, 1), (1, 0), (1, 1), (0, 1)], 2, MetricsOptions::default())
            .unwrap();
        assert_eq!(m.link_count, 1);
    }

    #[test]
    fn diameter_skipped_above_limit_unless_forced() {
        let edges: Vec<(usize, usize)> = (0..99).map(|k| (k, k + 1)).collect();
        let opts = MetricsOptions {
            exact_diameter_limit: 10,
            force_exact_diameter: false,
        };
        let m = graph_metrics(&edges, 100, opts).unwrap();
        assert_eq!(m.diameter, None);
        assert_eq!(m.diameter_lower_bound, Some(99));
        let forced = MetricsOptions {
            force_exact_diameter: true,
            ..opts
        };
        assert_eq!(graph_metrics(&edges, 100, forced).unwrap().diameter, Some(99));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(graph_metrics(&[(0, 5)], 3, MetricsOptions::default()).is_err());
    }

    #[test]
    fn cycle_diameter() {
        // Double sweep is exact on cycles; the full search must agree.
        let edges: Vec<(usize, usize)> = (0..10).map(|k| (k, (k + 1) % 10)).collect();
        let m = graph_metrics(&edges, 10, MetricsOptions::default()).unwrap();
        assert_eq!(m.diameter, Some(5));
        assert_eq!(m.diameter_lower_bound, Some(5));
    }
}
