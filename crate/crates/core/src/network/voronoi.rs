//! Bounded Voronoi cell areas by half-plane clipping.
//!
//! The cell of a site is the bounding box of the domain cut by the bisector
//! half-planes of its nearest neighbours, processed in order of distance.
//! Once the next neighbour is farther than twice the cell's radius it can no
//! longer cut the cell, so each cell touches only its local neighbourhood.
//! The convex cell is finally intersected with the (possibly non-convex)
//! domain polygon.

use std::collections::HashMap;

use rayon::prelude::*;

use super::grid::PointGrid;
use crate::error::{Error, Result};

type Point = (f64, f64);

/// Simple polygon bounding the tessellation.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    vertices: Vec<Point>,
    is_box: bool,
}

impl Bounds {
    pub fn rectangle(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        if !(max_x > min_x && max_y > min_y) {
            return Err(Error::Geometry(format!(
                "degenerate rectangle [{min_x}, {max_x}] x [{min_y}, {max_y}]"
            )));
        }
        Ok(Bounds {
            vertices: vec![(min_x, min_y), (max_x, min_y), (max_x, max_y), (min_x, max_y)],
            is_box: true,
        })
    }

    /// Simple polygon with at least three vertices, in either orientation.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry("bounding polygon needs 3 vertices".into()));
        }
        if vertices.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Geometry("non-finite polygon vertex".into()));
        }
        let a = signed_area(&vertices);
        if a == 0.0 {
            return Err(Error::Geometry("bounding polygon has zero area".into()));
        }
        if a < 0.0 {
            vertices.reverse();
        }
        Ok(Bounds {
            vertices,
            is_box: false,
        })
    }

    /// Axis-aligned box around `points`, grown by `margin` on every side.
    pub fn around(points: &[Point], margin: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Geometry("no points".into()));
        }
        let (mut x0, mut y0, mut x1, mut y1) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        Self::rectangle(x0 - margin, y0 - margin, x1 + margin, y1 + margin)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let mut b = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in &self.vertices {
            b.0 = b.0.min(x);
            b.1 = b.1.min(y);
            b.2 = b.2.max(x);
            b.3 = b.3.max(y);
        }
        b
    }
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut twice = 0.0;
    for k in 0..n {
        let (x0, y0) = poly[k];
        let (x1, y1) = poly[(k + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    0.5 * twice
}

/// Keeps the part of `poly` where `nx * x + ny * y <= c`.
fn clip_half_plane(poly: &[Point], nx: f64, ny: f64, c: f64, out: &mut Vec<Point>) {
    out.clear();
    let n = poly.len();
    if n == 0 {
        return;
    }
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let fa = nx * a.0 + ny * a.1 - c;
        let fb = nx * b.0 + ny * b.1 - c;
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
}

/// Rejects exactly coincident sites, naming the first offending pair.
pub(crate) fn check_distinct(points: &[Point]) -> Result<()> {
    let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(points.len());
    for (idx, &(x, y)) in points.iter().enumerate() {
        // +0.0 normalizes -0.0 so both zeros collide.
        let key = ((x + 0.0).to_bits(), (y + 0.0).to_bits());
        if let Some(&first) = seen.get(&key) {
            return Err(Error::DuplicateCoordinates {
                first,
                second: idx,
                x,
                y,
            });
        }
        seen.insert(key, idx);
    }
    Ok(())
}

/// Areas of the Voronoi cells of `sites` clipped to `bounds`.
///
/// The areas partition the domain: their sum equals `bounds.area()` up to
/// rounding, provided every site lies inside the domain.
pub fn voronoi_areas(sites: &[Point], bounds: &Bounds) -> Result<Vec<f64>> {
    if sites.is_empty() {
        return Err(Error::Geometry("voronoi tessellation needs at least one site".into()));
    }
    if sites.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::Geometry("non-finite site coordinate".into()));
    }
    check_distinct(sites)?;

    let (bx0, by0, bx1, by1) = bounds.bounding_box();
    let spacing = ((bx1 - bx0) * (by1 - by0) / sites.len() as f64).sqrt();
    let grid = PointGrid::new(sites, spacing.max(f64::MIN_POSITIVE));
    let frame = [(bx0, by0), (bx1, by0), (bx1, by1), (bx0, by1)];
    let diagonal = (bx1 - bx0).hypot(by1 - by0);

    let areas = (0..sites.len())
        .into_par_iter()
        .map(|i| {
            let cell = voronoi_cell(i, sites, &grid, &frame, spacing, diagonal);
            if bounds.is_box {
                signed_area(&cell).max(0.0)
            } else {
                intersect_with_cell(bounds.vertices(), &cell)
            }
        })
        .collect();
    Ok(areas)
}

fn voronoi_cell(
    i: usize,
    sites: &[Point],
    grid: &PointGrid,
    frame: &[Point; 4],
    spacing: f64,
    diagonal: f64,
) -> Vec<Point> {
    let (sx, sy) = sites[i];
    let mut radius = 3.0 * spacing;
    let mut neighbours: Vec<(f64, usize)> = Vec::new();
    let mut cell = Vec::with_capacity(16);
    let mut scratch = Vec::with_capacity(16);
    loop {
        neighbours.clear();
        grid.for_each_candidate(sx, sy, radius, |j| {
            if j != i {
                let d2 = (sites[j].0 - sx).powi(2) + (sites[j].1 - sy).powi(2);
                if d2 <= radius * radius {
                    neighbours.push((d2, j));
                }
            }
        });
        neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        cell.clear();
        cell.extend_from_slice(frame);
        let mut complete = false;
        let mut reach2 = cell_reach2(&cell, sx, sy);
        for &(d2, j) in &neighbours {
            if d2 > 4.0 * reach2 {
                complete = true;
                break;
            }
            let (qx, qy) = sites[j];
            let (nx, ny) = (qx - sx, qy - sy);
            let c = 0.5 * (nx * (qx + sx) + ny * (qy + sy));
            clip_half_plane(&cell, nx, ny, c, &mut scratch);
            std::mem::swap(&mut cell, &mut scratch);
            reach2 = cell_reach2(&cell, sx, sy);
        }
        // Every site beyond `radius` is too far to cut the cell.
        if complete || 4.0 * reach2 <= radius * radius || radius > 2.0 * diagonal {
            return cell;
        }
        radius *= 2.0;
    }
}

fn cell_reach2(cell: &[Point], sx: f64, sy: f64) -> f64 {
    cell.iter()
        .map(|&(x, y)| (x - sx).powi(2) + (y - sy).powi(2))
        .fold(0.0, f64::max)
}

/// Area of `subject ∩ cell` for a convex counter-clockwise `cell`.
fn intersect_with_cell(subject: &[Point], cell: &[Point]) -> f64 {
    if cell.len() < 3 {
        return 0.0;
    }
    let mut poly = subject.to_vec();
    let mut scratch = Vec::with_capacity(poly.len() + 8);
    let n = cell.len();
    for k in 0..n {
        let a = cell[k];
        let b = cell[(k + 1) % n];
        // Inside of a CCW edge is to its left: outward normal (dy, -dx).
        let (nx, ny) = (b.1 - a.1, -(b.0 - a.0));
        if nx == 0.0 && ny == 0.0 {
            continue;
        }
        let c = nx * a.0 + ny * a.1;
        clip_half_plane(&poly, nx, ny, c, &mut scratch);
        std::mem::swap(&mut poly, &mut scratch);
        if poly.is_empty() {
            return 0.0;
        }
    }
    signed_area(&poly).max(0.0)
}
