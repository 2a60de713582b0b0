//! Ranked destination lists drawn from the trip-length law.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::trip_length::TripLengthLaw;
use super::MobilityGenConfig;
use crate::error::{Error, Result};

/// Draws before falling back to the nearest unused node.
pub const MAX_RETRIES: usize = 50;

/// Other nodes sorted by distance from `origin`, in km.
pub fn distances_from(origin: usize, coords: &[(f64, f64)]) -> Vec<(f64, usize)> {
    let (ox, oy) = coords[origin];
    let mut out: Vec<(f64, usize)> = coords
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != origin)
        .map(|(j, &(x, y))| ((x - ox).hypot(y - oy) / 1000.0, j))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out
}

/// Position in `sorted` whose distance is nearest to `target`, preferring the
/// shorter distance on ties, restricted to entries accepted by `free`.
fn nearest_matching(sorted: &[(f64, usize)], target: f64, free: impl Fn(usize) -> bool) -> Option<usize> {
    let split = sorted.partition_point(|&(d, _)| d < target);
    let (mut lo, mut hi) = (split, split);
    loop {
        let left = (lo > 0).then(|| lo - 1);
        let right = (hi < sorted.len()).then_some(hi);
        let pick = match (left, right) {
            (None, None) => return None,
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (Some(l), Some(r)) => {
                if target - sorted[l].0 <= sorted[r].0 - target {
                    l
                } else {
                    r
                }
            }
        };
        if free(pick) {
            return Some(pick);
        }
        if Some(pick) == left {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
}

/// Up to `count` distinct destinations for one origin. Each draw samples a
/// trip length and takes the node whose distance is nearest to it; a node
/// already chosen triggers a redraw, and after [`MAX_RETRIES`] redraws the
/// nearest unused node is taken instead.
pub fn destinations_for_origin<R: rand::Rng + ?Sized>(
    sorted: &[(f64, usize)],
    law: &TripLengthLaw,
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let count = count.min(sorted.len());
    let mut used = vec![false; sorted.len()];
    let mut chosen = Vec::with_capacity(count);
    while chosen.len() < count {
        let mut pick = None;
        let mut target = 0.0;
        for _ in 0..=MAX_RETRIES {
            target = law.sample(rng);
            let pos = nearest_matching(sorted, target, |_| true).expect("non-empty");
            if !used[pos] {
                pick = Some(pos);
                break;
            }
        }
        let pos = pick.unwrap_or_else(|| {
            nearest_matching(sorted, target, |p| !used[p]).expect("an unused node remains")
        });
        used[pos] = true;
        chosen.push(sorted[pos].1);
    }
    chosen
}

/// Per-origin RNG stream, fixed by node id so results do not depend on
/// scheduling.
pub fn origin_rng(seed: u64, origin: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(origin as u64);
    rng
}

/// Ranked destination lists (rank 1 first, in draw order) for every node.
pub fn generate_destinations(coords: &[(f64, f64)], cfg: &MobilityGenConfig) -> Result<Vec<Vec<usize>>> {
    cfg.validate()?;
    if coords.len() < 2 {
        return Err(Error::InvalidInput(
            "destination generation needs at least 2 nodes".into(),
        ));
    }
    let wanted = cfg.destinations_per_node;
    if wanted > coords.len() - 1 {
        warn!(
            "only {} other nodes available; truncating {} destinations per node",
            coords.len() - 1,
            wanted
        );
    }
    let law = TripLengthLaw::new(cfg);
    let lists = (0..coords.len())
        .into_par_iter()
        .map(|origin| {
            let sorted = distances_from(origin, coords);
            let mut rng = origin_rng(cfg.seed, origin);
            destinations_for_origin(&sorted, &law, wanted, &mut rng)
        })
        .collect();
    Ok(lists)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, seed: u64) -> MobilityGenConfig {
        MobilityGenConfig {
            destinations_per_node: n,
            seed,
            ..MobilityGenConfig::default()
        }
    }

    #[test]
    fn two_nodes_pick_each_other() {
        let d = generate_destinations(&[(0.0, 0.0), (5000.0, 0.0)], &cfg(1, 1)).unwrap();
        assert_eq!(d, vec![vec![1], vec![0]]);
    }

    #[test]
    fn truncates_to_available_nodes() {
        let coords = [(0.0, 0.0), (100.0, 0.0), (0.0, 100.0)];
        let d = generate_destinations(&coords, &cfg(10, 1)).unwrap();
        for (i, list) in d.iter().enumerate() {
            assert_eq!(list.len(), 2);
            assert!(!list.contains(&i));
        }
    }

    #[test]
    fn same_seed_same_lists() {
        let coords: Vec<(f64, f64)> = (0..200)
            .map(|k| ((k % 20) as f64 * 700.0, (k / 20) as f64 * 900.0))
            .collect();
        let a = generate_destinations(&coords, &cfg(8, 42)).unwrap();
        let b = generate_destinations(&coords, &cfg(8, 42)).unwrap();
        let c = generate_destinations(&coords, &cfg(8, 43)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (i, list) in a.iter().enumerate() {
            let mut s = list.clone();
            s.sort();
            s.dedup();
            assert_eq!(s.len(), 8);
            assert!(!s.contains(&i));
        }
    }

    #[test]
    fn nearest_prefers_shorter_on_tie() {
        let sorted = vec![(1.0, 7), (3.0, 8)];
        assert_eq!(nearest_matching(&sorted, 2.0, |_| true), Some(0));
        assert_eq!(nearest_matching(&sorted, 2.0, |p| p != 0), Some(1));
        assert_eq!(nearest_matching(&sorted, 10.0, |_| true), Some(1));
        assert_eq!(nearest_matching(&sorted, 2.0, |_| false), None);
    }

    #[test]
    fn single_origin_with_too_few_nodes() {
        assert!(generate_destinations(&[(0.0, 0.0)], &cfg(1, 1)).is_err());
    }
}
