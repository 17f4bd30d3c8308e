use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use super::{NodeSet, Point, Rect};
use crate::error::{Error, Result};
use crate::medium::SpeedModel;

/// Exclusion radius as a fraction of the local target spacing. A maximal
/// disk sampling with radius `r` has a mean nearest-neighbour distance close
/// to `1.1 r`, so this keeps the measured spacing near `h(x)`.
const RADIUS_FACTOR: f64 = 0.9;
const CANDIDATES: usize = 30;

/// Wavelength-adaptive scattered nodes with local spacing
/// `h(x) = 2 pi c(x) / (omega * ng)`.
///
/// A ring of boundary nodes is laid along the edges first, then the interior
/// is filled by variable-radius dart throwing (Bridson's active-list scheme).
/// Two nodes `p`, `q` are kept only if `|p - q| >= 0.9 (h(p) + h(q)) / 2`.
/// The reported `h` of the node set is the smallest target spacing.
pub fn generate_adaptive(domain: Rect, speed: &SpeedModel, omega: f64, ng: f64, seed: u64) -> Result<NodeSet> {
    domain.validate()?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::param("omega", format!("must be positive, got {omega}")));
    }
    if !(ng.is_finite() && ng >= 4.0) {
        return Err(Error::param("ng", format!("must be >= 4, got {ng}")));
    }
    speed.validate(&domain)?;
    let (c_min, c_max) = speed.range(&domain);
    let spacing = |p: Point| TAU * speed.speed(p) / (omega * ng);
    let h_min = TAU * c_min / (omega * ng);
    let h_max = TAU * c_max / (omega * ng);
    if domain.width().min(domain.height()) < 2.0 * h_min {
        return Err(Error::Geometry("domain is smaller than two local spacings".into()));
    }
    if (domain.width() * domain.height()) / (h_min * h_min) > 5e7 {
        return Err(Error::param("ng", "node count would exceed 5e7"));
    }

    let mut grid = DiskGrid::new(domain, RADIUS_FACTOR * h_min, RADIUS_FACTOR * h_max);
    let mut points: Vec<Point> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    let mut normals: Vec<Point> = Vec::new();

    for p in boundary_ring(&domain, &spacing) {
        let r = RADIUS_FACTOR * spacing(p);
        grid.insert(p, points.len());
        points.push(p);
        radii.push(r);
        normals.push(domain.boundary_normal(p));
    }
    let n_boundary = points.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut active: Vec<usize> = (0..n_boundary).collect();
    // seed the interior with the domain center when it is admissible
    let c = domain.center();
    let rc = RADIUS_FACTOR * spacing(c);
    if grid.admissible(c, rc, &points, &radii) {
        grid.insert(c, points.len());
        active.push(points.len());
        points.push(c);
        radii.push(rc);
        normals.push(Point::default());
    }
    while !active.is_empty() {
        let slot = rng.gen_range(0..active.len());
        let base = points[active[slot]];
        let rb = radii[active[slot]];
        let mut placed = false;
        for _ in 0..CANDIDATES {
            // area-uniform radius in the annulus [rb, 2 rb]
            let rho = rb * (1.0 + 3.0 * rng.gen::<f64>()).sqrt();
            let theta = TAU * rng.gen::<f64>();
            let q = Point::new(base.x + rho * theta.cos(), base.y + rho * theta.sin());
            if !(q.x > domain.x_min && q.x < domain.x_max && q.y > domain.y_min && q.y < domain.y_max) {
                continue;
            }
            let rq = RADIUS_FACTOR * spacing(q);
            if grid.admissible(q, rq, &points, &radii) {
                grid.insert(q, points.len());
                active.push(points.len());
                points.push(q);
                radii.push(rq);
                normals.push(Point::default());
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(slot);
        }
    }

    let mut boundary = vec![false; points.len()];
    boundary[..n_boundary].fill(true);
    let nodes = NodeSet {
        points,
        boundary,
        normals,
        h: h_min,
        domain,
    };
    nodes.validate()?;
    Ok(nodes)
}

/// Nodes along the four edges, counter-clockwise from the lower-left corner,
/// spaced so that each gap is close to the local `h` on the edge.
fn boundary_ring(domain: &Rect, spacing: &dyn Fn(Point) -> f64) -> Vec<Point> {
    let corners = [
        Point::new(domain.x_min, domain.y_min),
        Point::new(domain.x_max, domain.y_min),
        Point::new(domain.x_max, domain.y_max),
        Point::new(domain.x_min, domain.y_max),
    ];
    let mut out = Vec::new();
    for e in 0..4 {
        let a = corners[e];
        let b = corners[(e + 1) % 4];
        let len = a.dist(b);
        // cumulative integral of 1/h along the edge, trapezoidal rule
        let m = 2048;
        let at = |t: f64| a + (b - a) * t;
        let mut cum = vec![0.0; m + 1];
        for i in 1..=m {
            let t0 = (i - 1) as f64 / m as f64;
            let t1 = i as f64 / m as f64;
            cum[i] = cum[i - 1] + 0.5 * len / m as f64 * (1.0 / spacing(at(t0)) + 1.0 / spacing(at(t1)));
        }
        let segments = cum[m].round().max(1.0) as usize;
        out.push(a);
        let mut j = 0;
        for s in 1..segments {
            let target = cum[m] * s as f64 / segments as f64;
            while cum[j + 1] < target {
                j += 1;
            }
            let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
            let t = (j as f64 + frac) / m as f64;
            let mut p = at(t);
            // keep the point exactly on its edge
            if e % 2 == 0 {
                p.y = a.y;
            } else {
                p.x = a.x;
            }
            out.push(p);
        }
    }
    out
}

/// Background bucket grid for the exclusion test.
struct DiskGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    r_max: f64,
    buckets: Vec<Vec<usize>>,
}

impl DiskGrid {
    fn new(domain: Rect, r_min: f64, r_max: f64) -> Self {
        let cell = r_min.max(r_max / 8.0);
        let nx = (domain.width() / cell).ceil() as usize + 1;
        let ny = (domain.height() / cell).ceil() as usize + 1;
        Self {
            origin: Point::new(domain.x_min, domain.y_min),
            cell,
            nx,
            ny,
            r_max,
            buckets: vec![Vec::new(); nx * ny],
        }
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let cx = ((p.x - self.origin.x) / self.cell).floor().max(0.0) as usize;
        let cy = ((p.y - self.origin.y) / self.cell).floor().max(0.0) as usize;
        (cx.min(self.nx - 1), cy.min(self.ny - 1))
    }

    fn insert(&mut self, p: Point, id: usize) {
        let (cx, cy) = self.cell_of(p);
        self.buckets[cy * self.nx + cx].push(id);
    }

    fn admissible(&self, q: Point, rq: f64, points: &[Point], radii: &[f64]) -> bool {
        let reach = 0.5 * (rq + self.r_max);
        let span = (reach / self.cell).ceil() as usize;
        let (cx, cy) = self.cell_of(q);
        for gy in cy.saturating_sub(span)..=(cy + span).min(self.ny - 1) {
            for gx in cx.saturating_sub(span)..=(cx + span).min(self.nx - 1) {
                for &j in &self.buckets[gy * self.nx + gx] {
                    let need = 0.5 * (rq + radii[j]);
                    if q.dist2(points[j]) < need * need {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointIndex;
    use crate::medium::Raster;

    fn mean_nn(nodes: &NodeSet, keep: impl Fn(Point) -> bool) -> f64 {
        let idx = PointIndex::new(&nodes.points);
        let mut acc = 0.0;
        let mut cnt = 0usize;
        for (i, &p) in nodes.points.iter().enumerate() {
            if nodes.boundary[i] || !keep(p) {
                continue;
            }
            let nb = idx.nearest(p, 2);
            acc += p.dist(nodes.points[nb[1]]);
            cnt += 1;
        }
        acc / cnt as f64
    }

    #[test]
    fn constant_speed_spacing_matches_target() {
        let dom = Rect::square(0.0, 1.0).unwrap();
        let omega = TAU * 4.0;
        let nodes = generate_adaptive(dom, &SpeedModel::constant(1.0), omega, 10.0, 11).unwrap();
        let target = TAU / (omega * 10.0);
        let m = mean_nn(&nodes, |_| true);
        assert!((m / target - 1.0).abs() < 0.15, "mean nn {m} vs {target}");
    }

    #[test]
    fn minimum_distance_respected() {
        let dom = Rect::square(-0.5, 0.5).unwrap();
        let speed = SpeedModel::lens();
        let omega = TAU * 2.5;
        let nodes = generate_adaptive(dom, &speed, omega, 8.0, 5).unwrap();
        let h = |p: Point| TAU * speed.speed(p) / (omega * 8.0);
        for i in 0..nodes.len() {
            for j in 0..i {
                let (p, q) = (nodes.points[i], nodes.points[j]);
                assert!(p.dist(q) >= 0.7 * h(p).min(h(q)));
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let dom = Rect::square(0.0, 1.0).unwrap();
        let a = generate_adaptive(dom, &SpeedModel::sinusoid(), 30.0, 6.0, 9).unwrap();
        let b = generate_adaptive(dom, &SpeedModel::sinusoid(), 30.0, 6.0, 9).unwrap();
        let c = generate_adaptive(dom, &SpeedModel::sinusoid(), 30.0, 6.0, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn density_follows_speed() {
        // speed 1 on the left half, 2 on the right half
        let dom = Rect::square(0.0, 1.0).unwrap();
        let nx = 101;
        let values: Vec<f64> = (0..nx * 2).map(|i| if i / 2 <= 50 { 1.0 } else { 2.0 }).collect();
        let r = Raster::new(nx, 2, Point::new(0.0, 0.0), 0.01, 1.0, values).unwrap();
        let nodes = generate_adaptive(dom, &SpeedModel::Raster(r), TAU * 8.0, 8.0, 1).unwrap();
        let count = |lo: f64, hi: f64| {
            nodes
                .points
                .iter()
                .filter(|p| p.x > lo && p.x < hi && p.y > 0.1 && p.y < 0.9)
                .count() as f64
        };
        let ratio = count(0.1, 0.4) / count(0.6, 0.9);
        assert!((ratio / 4.0 - 1.0).abs() < 0.25, "density ratio {ratio}");
    }

    #[test]
    fn invalid_parameters() {
        let dom = Rect::square(0.0, 1.0).unwrap();
        assert!(generate_adaptive(dom, &SpeedModel::constant(0.0), 1.0, 6.0, 0).is_err());
        assert!(generate_adaptive(dom, &SpeedModel::constant(1.0), 0.0, 6.0, 0).is_err());
        assert!(generate_adaptive(dom, &SpeedModel::constant(1.0), 10.0, 3.0, 0).is_err());
    }
}
