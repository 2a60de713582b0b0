//! Uniform bucket grid for fixed-radius point queries.

pub(crate) struct PointGrid {
    min_x: f64,
    min_y: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    /// CSR layout: points of bucket `b` are `items[starts[b]..starts[b + 1]]`.
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl PointGrid {
    /// `cell` is the bucket side. Queries with radius up to `cell` touch at
    /// most 9 buckets.
    pub fn new(points: &[(f64, f64)], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite());
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        if points.is_empty() {
            (min_x, min_y, max_x, max_y) = (0.0, 0.0, 0.0, 0.0);
        }
        // Cap the bucket count; extremely sparse data falls back to coarser
        // buckets, which only costs query time.
        let mut cell = cell;
        loop {
            let nx = ((max_x - min_x) / cell).floor() as usize + 1;
            let ny = ((max_y - min_y) / cell).floor() as usize + 1;
            if nx.saturating_mul(ny) <= 4 * points.len().max(1) + 1024 {
                break;
            }
            cell *= 2.0;
        }
        let nx = ((max_x - min_x) / cell).floor() as usize + 1;
        let ny = ((max_y - min_y) / cell).floor() as usize + 1;

        let mut counts = vec![0usize; nx * ny + 1];
        let bucket_of = |x: f64, y: f64| -> usize {
            let cx = (((x - min_x) / cell).floor() as usize).min(nx - 1);
            let cy = (((y - min_y) / cell).floor() as usize).min(ny - 1);
            cy * nx + cx
        };
        for &(x, y) in points {
            counts[bucket_of(x, y) + 1] += 1;
        }
        for b in 1..counts.len() {
            counts[b] += counts[b - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut items = vec![0usize; points.len()];
        for (idx, &(x, y)) in points.iter().enumerate() {
            let b = bucket_of(x, y);
            items[fill[b]] = idx;
            fill[b] += 1;
        }
        PointGrid {
            min_x,
            min_y,
            cell,
            nx,
            ny,
            starts,
            items,
        }
    }

    /// Calls `visit` with the index of every stored point whose bucket
    /// intersects the square of half-side `radius` around `(x, y)`. Callers
    /// filter by exact distance.
    pub fn for_each_candidate(&self, x: f64, y: f64, radius: f64, mut visit: impl FnMut(usize)) {
        let lo_x = ((x - radius - self.min_x) / self.cell).floor();
        let hi_x = ((x + radius - self.min_x) / self.cell).floor();
        let lo_y = ((y - radius - self.min_y) / self.cell).floor();
        let hi_y = ((y + radius - self.min_y) / self.cell).floor();
        if hi_x < 0.0 || hi_y < 0.0 {
            return;
        }
        let cx0 = lo_x.max(0.0) as usize;
        let cy0 = lo_y.max(0.0) as usize;
        let cx1 = (hi_x as usize).min(self.nx - 1);
        let cy1 = (hi_y as usize).min(self.ny - 1);
        if cx0 > cx1 || cy0 > cy1 {
            return;
        }
        for cy in cy0..=cy1 {
            for cx in cx0..=cx1 {
                let b = cy * self.nx + cx;
                for &idx in &self.items[self.starts[b]..self.starts[b + 1]] {
                    visit(idx);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn candidates_cover_radius() {
        let pts: Vec<(f64, f64)> = (0..400)
            .map(|k| ((k % 20) as f64 * 7.3, (k / 20) as f64 * 5.1))
            .collect();
        let grid = PointGrid::new(&pts, 10.0);
        for &(qx, qy) in &[(0.0, 0.0), (50.0, 40.0), (138.0, 96.0), (-30.0, 200.0)] {
            let mut found = vec![];
            grid.for_each_candidate(qx, qy, 10.0, |i| {
                let (x, y) = pts[i];
                if (x - qx).hypot(y - qy) < 10.0 {
                    found.push(i)
                }
            });
            found.sort();
            let brute: Vec<usize> = (0..pts.len())
                .filter(|&i| (pts[i].0 - qx).hypot(pts[i].1 - qy) < 10.0)
                .collect();
            assert_eq!(found, brute);
        }
    }
}
