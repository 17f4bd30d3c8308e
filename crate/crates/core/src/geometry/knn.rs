use std::cmp::Ordering;

use super::{NodeSet, Point};
use crate::error::{Error, Result};

/// A center node and its nearest neighbours; `members[0]` is the center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stencil {
    pub center: usize,
    pub members: Vec<usize>,
}

impl Stencil {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Uniform bucket grid over the bounding box of a point cloud.
///
/// Queries are exact: candidates are ordered by squared Euclidean distance and
/// then by index, so equidistant neighbours are resolved deterministically.
#[derive(Debug, Clone)]
pub struct PointIndex<'a> {
    points: &'a [Point],
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<usize>,
    entries: Vec<usize>,
}

impl<'a> PointIndex<'a> {
    pub fn new(points: &'a [Point]) -> Self {
        let (mut lo, mut hi) = (
            Point::new(f64::INFINITY, f64::INFINITY),
            Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if points.is_empty() {
            lo = Point::default();
            hi = Point::new(1.0, 1.0);
        }
        let w = (hi.x - lo.x).max(f64::MIN_POSITIVE);
        let hgt = (hi.y - lo.y).max(f64::MIN_POSITIVE);
        // About two points per cell on average.
        let target = (points.len() as f64 / 2.0).max(1.0);
        let mut cell = (w * hgt / target).sqrt();
        if !(cell.is_finite() && cell > 0.0) {
            cell = w.max(hgt).max(1e-300);
        }
        let nx = ((w / cell).floor() as usize + 1).min(1 << 15);
        let ny = ((hgt / cell).floor() as usize + 1).min(1 << 15);
        let cell = (w / nx as f64).max(hgt / ny as f64).max(cell);

        let mut counts = vec![0usize; nx * ny + 1];
        let key = |p: &Point| -> usize {
            let cx = (((p.x - lo.x) / cell) as usize).min(nx - 1);
            let cy = (((p.y - lo.y) / cell) as usize).min(ny - 1);
            cy * nx + cx
        };
        for p in points {
            counts[key(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut entries = vec![0usize; points.len()];
        for (i, p) in points.iter().enumerate() {
            let k = key(p);
            entries[fill[k]] = i;
            fill[k] += 1;
        }
        Self {
            points,
            origin: lo,
            cell,
            nx,
            ny,
            starts,
            entries,
        }
    }

    fn cell_of(&self, p: Point) -> (isize, isize) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as isize,
            ((p.y - self.origin.y) / self.cell).floor() as isize,
        )
    }

    fn bucket(&self, cx: isize, cy: isize) -> &[usize] {
        if cx < 0 || cy < 0 || cx as usize >= self.nx || cy as usize >= self.ny {
            return &[];
        }
        let k = cy as usize * self.nx + cx as usize;
        &self.entries[self.starts[k]..self.starts[k + 1]]
    }

    /// Indices of the `n` points nearest to `q`, closest first.
    pub fn nearest(&self, q: Point, n: usize) -> Vec<usize> {
        let n = n.min(self.points.len());
        if n == 0 {
            return Vec::new();
        }
        let (cx, cy) = self.cell_of(q);
        let mut cand: Vec<(f64, usize)> = Vec::with_capacity(4 * n);
        let max_ring = self.nx.max(self.ny) as isize + cx.abs().max(cy.abs()) + 1;
        let mut ring: isize = 0;
        loop {
            if ring == 0 {
                self.push_bucket(&mut cand, q, cx, cy);
            } else {
                for dx in -ring..=ring {
                    self.push_bucket(&mut cand, q, cx + dx, cy - ring);
                    self.push_bucket(&mut cand, q, cx + dx, cy + ring);
                }
                for dy in (-ring + 1)..ring {
                    self.push_bucket(&mut cand, q, cx - ring, cy + dy);
                    self.push_bucket(&mut cand, q, cx + ring, cy + dy);
                }
            }
            if cand.len() >= n {
                cand.select_nth_unstable_by(n - 1, cmp_candidate);
                cand.truncate(n);
                // Everything outside the searched block is at least `ring * cell` away.
                let reach = ring as f64 * self.cell;
                let worst = cand.iter().map(|c| c.0).fold(0.0, f64::max);
                if worst <= reach * reach {
                    break;
                }
            }
            ring += 1;
            if ring > max_ring {
                break;
            }
        }
        cand.sort_by(cmp_candidate);
        cand.truncate(n);
        cand.into_iter().map(|(_, i)| i).collect()
    }

    fn push_bucket(&self, cand: &mut Vec<(f64, usize)>, q: Point, cx: isize, cy: isize) {
        for &i in self.bucket(cx, cy) {
            cand.push((self.points[i].dist2(q), i));
        }
    }

    /// Indices of all points within `radius` of `q` (unordered).
    pub fn within(&self, q: Point, radius: f64) -> Vec<usize> {
        let (cx, cy) = self.cell_of(q);
        let r = (radius / self.cell).ceil() as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                for &i in self.bucket(cx + dx, cy + dy) {
                    if self.points[i].dist2(q) <= radius * radius {
                        out.push(i);
                    }
                }
            }
        }
        out
    }
}

fn cmp_candidate(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
}

/// One stencil per node: `n_interior` members around interior nodes and
/// `n_boundary` around boundary nodes.
pub fn build_stencils(nodes: &NodeSet, n_interior: usize, n_boundary: usize) -> Result<Vec<Stencil>> {
    let total = nodes.len();
    for (name, n) in [("n_interior", n_interior), ("n_boundary", n_boundary)] {
        if n == 0 || n > total {
            return Err(Error::param(
                if name == "n_interior" { "n_interior" } else { "n_boundary" },
                format!("stencil size {n} must be in 1..={total}"),
            ));
        }
    }
    let index = PointIndex::new(&nodes.points);
    use rayon::prelude::*;
    let stencils = (0..total)
        .into_par_iter()
        .map(|i| {
            let n = if nodes.boundary[i] { n_boundary } else { n_interior };
            let mut members = index.nearest(nodes.points[i], n);
            // The center is at distance zero; move it to the front even if an
            // exact duplicate with a smaller index exists.
            if let Some(pos) = members.iter().position(|&m| m == i) {
                members.remove(pos);
            } else {
                members.pop();
            }
            members.insert(0, i);
            Stencil { center: i, members }
        })
        .collect();
    Ok(stencils)
}

/// Closest pair of points, by brute force on small sets and via the bucket
/// grid otherwise.
pub(crate) fn closest_pair(points: &[Point]) -> Option<(usize, usize, f64)> {
    if points.len() < 2 {
        return None;
    }
    let index = PointIndex::new(points);
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, &p) in points.iter().enumerate() {
        let nn = index.nearest(p, 2);
        let j = if nn[0] == i { nn[1] } else { nn[0] };
        let d = p.dist(points[j]);
        if best.map_or(true, |b| d < b.2) {
            best = Some((i.min(j), i.max(j), d));
        }
    }
    best
}
