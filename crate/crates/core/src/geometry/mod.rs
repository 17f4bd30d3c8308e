//! Node sets over rectangles and nearest-neighbour stencils.

mod io;
mod knn;
mod sampling;

pub use io::{read_nodes, write_nodes};
pub use knn::{build_stencils, PointIndex, Stencil};
pub use sampling::generate_adaptive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist2(self, other: Point) -> f64 {
        let d = self - other;
        d.x * d.x + d.y * d.y
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let r = Self {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        r.validate()?;
        Ok(r)
    }

    /// The square `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, lo, hi)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_max > self.x_min
            && self.y_max > self.y_min;
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!("degenerate rectangle {self:?}")))
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    /// Distance from an inside point to the nearest edge.
    pub fn edge_distance(&self, p: Point) -> f64 {
        (p.x - self.x_min)
            .min(self.x_max - p.x)
            .min(p.y - self.y_min)
            .min(self.y_max - p.y)
    }

    /// Outward normal at a point on the boundary; corners get the normalized
    /// sum of the two adjacent edge normals.
    pub fn boundary_normal(&self, p: Point) -> Point {
        let tol = 1e-12 * self.width().max(self.height());
        let mut n = Point::default();
        if (p.x - self.x_min).abs() <= tol {
            n.x -= 1.0;
        }
        if (p.x - self.x_max).abs() <= tol {
            n.x += 1.0;
        }
        if (p.y - self.y_min).abs() <= tol {
            n.y -= 1.0;
        }
        if (p.y - self.y_max).abs() <= tol {
            n.y += 1.0;
        }
        if n.x != 0.0 && n.y != 0.0 {
            n.normalized()
        } else {
            n
        }
    }
}

/// Discretization nodes with boundary metadata.
///
/// `normals[i]` is the outward unit normal for boundary nodes and zero for
/// interior ones; the tangent is the normal rotated by +90 degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub points: Vec<Point>,
    pub boundary: Vec<bool>,
    pub normals: Vec<Point>,
    pub h: f64,
    pub domain: Rect,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn tangent(&self, i: usize) -> Point {
        self.normals[i].perp()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }

    /// Builds a node set from raw points, flagging and orienting every point
    /// that lies on the rectangle's edges.
    pub fn from_points(points: Vec<Point>, h: f64, domain: Rect) -> Result<Self> {
        domain.validate()?;
        let tol = 1e-12 * domain.width().max(domain.height());
        let mut boundary = Vec::with_capacity(points.len());
        let mut normals = Vec::with_capacity(points.len());
        for &p in &points {
            let on_edge = domain.edge_distance(p).abs() <= tol;
            boundary.push(on_edge);
            normals.push(if on_edge {
                domain.boundary_normal(p)
            } else {
                Point::default()
            });
        }
        Ok(Self {
            points,
            boundary,
            normals,
            h,
            domain,
        })
    }

    /// Checks the structural invariants: points inside the closed domain,
    /// boundary points on an edge with orthonormal frames, no duplicates.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.boundary.len() != n || self.normals.len() != n {
            return Err(Error::Geometry("per-node arrays differ in length".into()));
        }
        let tol = 1e-12 * self.domain.width().max(self.domain.height());
        for i in 0..n {
            let p = self.points[i];
            if !(p.x >= self.domain.x_min - tol
                && p.x <= self.domain.x_max + tol
                && p.y >= self.domain.y_min - tol
                && p.y <= self.domain.y_max + tol)
            {
                return Err(Error::Geometry(format!("node {i} lies outside the domain")));
            }
            if self.boundary[i] {
                if self.domain.edge_distance(p).abs() > tol {
                    return Err(Error::Geometry(format!("boundary node {i} is off the edges")));
                }
                let nrm = self.normals[i];
                if (nrm.norm() - 1.0).abs() > 1e-14 || nrm.dot(nrm.perp()).abs() > 1e-14 {
                    return Err(Error::Geometry(format!("node {i} has a bad normal")));
                }
            }
        }
        if let Some((a, b, d)) = knn::closest_pair(&self.points) {
            if d <= 1e-9 * self.h {
                return Err(Error::Geometry(format!("nodes {a} and {b} coincide")));
            }
        }
        Ok(())
    }
}

fn axis_count(len: f64, inv_h: f64) -> Result<usize> {
    if !(inv_h.is_finite() && inv_h >= 2.0) {
        return Err(Error::param("inv_h", format!("must be >= 2, got {inv_h}")));
    }
    let m = (len * inv_h).round();
    if m < 1.0 {
        return Err(Error::Geometry(format!(
            "side {len} is too short for 1/h = {inv_h}"
        )));
    }
    Ok(m as usize)
}

/// Uniform Cartesian lattice with spacing `side / round(side * inv_h)`,
/// boundary nodes included. Nodes are numbered row by row from `y_min`.
pub fn generate_square_grid(domain: Rect, inv_h: f64) -> Result<NodeSet> {
    domain.validate()?;
    let mx = axis_count(domain.width(), inv_h)?;
    let my = axis_count(domain.height(), inv_h)?;
    let hx = domain.width() / mx as f64;
    let hy = domain.height() / my as f64;
    let coord = |lo: f64, hi: f64, step: f64, i: usize, m: usize| {
        if i == m {
            hi
        } else {
            lo + i as f64 * step
        }
    };
    let mut points = Vec::with_capacity((mx + 1) * (my + 1));
    for j in 0..=my {
        let y = coord(domain.y_min, domain.y_max, hy, j, my);
        for i in 0..=mx {
            let x = coord(domain.x_min, domain.x_max, hx, i, mx);
            points.push(Point::new(x, y));
        }
    }
    NodeSet::from_points(points, hx, domain)
}

/// Triangular lattice (horizontal spacing `h`, rows `h*sqrt(3)/2` apart, odd
/// rows shifted by `h/2`) surrounded by a ring of boundary nodes with spacing
/// `h`. Lattice nodes closer than `h/2` to an edge are dropped in favour of
/// the ring.
pub fn generate_hex_grid(domain: Rect, inv_h: f64) -> Result<NodeSet> {
    domain.validate()?;
    let mx = axis_count(domain.width(), inv_h)?;
    let my = axis_count(domain.height(), inv_h)?;
    let h = domain.width() / mx as f64;
    let mut points = boundary_ring(&domain, mx, my);

    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (domain.height() / dy).floor() as usize;
    // Center the rows vertically so the pattern is symmetric about the midline.
    let y0 = domain.y_min + 0.5 * (domain.height() - rows as f64 * dy);
    let margin = 0.5 * h * (1.0 - 1e-9);
    for j in 0..=rows {
        let y = y0 + j as f64 * dy;
        let shift = if j % 2 == 1 { 0.5 * h } else { 0.0 };
        for i in 0..=mx {
            let p = Point::new(domain.x_min + shift + i as f64 * h, y);
            if domain.contains(p) && domain.edge_distance(p) >= margin {
                points.push(p);
            }
        }
    }
    NodeSet::from_points(points, h, domain)
}

/// Boundary nodes with `mx` segments along the horizontal edges and `my`
/// along the vertical ones, counter-clockwise from the lower-left corner.
fn boundary_ring(domain: &Rect, mx: usize, my: usize) -> Vec<Point> {
    let hx = domain.width() / mx as f64;
    let hy = domain.height() / my as f64;
    let mut ring = Vec::with_capacity(2 * (mx + my));
    for i in 0..mx {
        ring.push(Point::new(domain.x_min + i as f64 * hx, domain.y_min));
    }
    for j in 0..my {
        ring.push(Point::new(domain.x_max, domain.y_min + j as f64 * hy));
    }
    for i in 0..mx {
        ring.push(Point::new(domain.x_max - i as f64 * hx, domain.y_max));
    }
    for j in 0..my {
        ring.push(Point::new(domain.x_min, domain.y_max - j as f64 * hy));
    }
    ring
}

/// Displaces every interior node by a uniform random vector of length at most
/// `amplitude * h`; boundary nodes stay put.
pub fn perturb_nodes(nodes: &NodeSet, amplitude: f64, seed: u64) -> Result<NodeSet> {
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::param("amplitude", format!("must be >= 0, got {amplitude}")));
    }
    let mut out = nodes.clone();
    if amplitude == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = amplitude * nodes.h;
    for (i, p) in out.points.iter_mut().enumerate() {
        if nodes.boundary[i] {
            continue;
        }
        let orig = *p;
        // Redraw the (rare) displacements that would leave the open domain.
        for _ in 0..64 {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = std::f64::consts::TAU * rng.gen::<f64>();
            let cand = orig + Point::new(r * t.cos(), r * t.sin());
            if nodes.domain.contains(cand) && nodes.domain.edge_distance(cand) > 0.0 {
                *p = cand;
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::square(-0.5, 0.5).unwrap()
    }

    #[test]
    fn square_grid_counts() {
        let g = generate_square_grid(unit(), 60.0).unwrap();
        assert_eq!(g.len(), 3721);
        assert_eq!(g.boundary_count(), 240);
        g.validate().unwrap();

        let g = generate_square_grid(Rect::square(0.0, 1.0).unwrap(), 2.0).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.boundary_count(), 8);
    }

    #[test]
    fn square_grid_node_count_formula() {
        for inv_h in [2.0, 7.0, 13.4, 60.0, 171.4] {
            let g = generate_square_grid(unit(), inv_h).unwrap();
            let m = (inv_h as f64).round() as usize + 1;
            assert_eq!(g.len(), m * m);
        }
    }

    #[test]
    fn edge_midpoint_normals_are_axis_vectors() {
        let g = generate_square_grid(unit(), 10.0).unwrap();
        let find = |x: f64, y: f64| {
            g.points
                .iter()
                .position(|p| (p.x - x).abs() < 1e-12 && (p.y - y).abs() < 1e-12)
                .unwrap()
        };
        assert_eq!(g.normals[find(0.0, -0.5)], Point::new(0.0, -1.0));
        assert_eq!(g.normals[find(0.5, 0.0)], Point::new(1.0, 0.0));
        assert_eq!(g.normals[find(0.0, 0.5)], Point::new(0.0, 1.0));
        assert_eq!(g.normals[find(-0.5, 0.0)], Point::new(-1.0, 0.0));
        let c = g.normals[find(0.5, 0.5)];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.x - s).abs() < 1e-15 && (c.y - s).abs() < 1e-15);
        assert_eq!(g.tangent(find(0.5, 0.0)), Point::new(0.0, 1.0));
    }

    #[test]
    fn degenerate_rectangle_is_rejected() {
        assert!(Rect::new(0.0, 0.0, 0.0, 1.0).is_err());
        let bad = Rect {
            x_min: 1.0,
            x_max: 0.0,
            y_min: 0.0,
            y_max: 1.0,
        };
        assert!(generate_square_grid(bad, 10.0).is_err());
        assert!(generate_hex_grid(bad, 10.0).is_err());
        assert!(generate_square_grid(unit(), 1.0).is_err());
    }

    #[test]
    fn hex_grid_matches_reference_size() {
        let g = generate_hex_grid(unit(), 60.0).unwrap();
        g.validate().unwrap();
        let rel = (g.len() as f64 - 4237.0).abs() / 4237.0;
        assert!(rel < 0.02, "N = {}", g.len());
    }

    #[test]
    fn hex_grid_interior_neighbours_at_distance_h() {
        let g = generate_hex_grid(unit(), 20.0).unwrap();
        let c = g
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| !g.boundary[*i])
            .min_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        let mut d: Vec<f64> = g
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != c)
            .map(|(_, p)| p.dist(g.points[c]))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for v in &d[..6] {
            assert!((v - g.h).abs() < 1e-12);
        }
        assert!(d[6] > 1.5 * g.h);
    }

    #[test]
    fn hex_grid_scales_with_area() {
        let a = generate_hex_grid(unit(), 30.0).unwrap().len() as f64;
        let b = generate_hex_grid(unit(), 60.0).unwrap().len() as f64;
        assert!((b / a - 4.0).abs() < 0.2, "ratio {}", b / a);
    }

    #[test]
    fn perturbation_is_bounded_and_deterministic() {
        let g = generate_square_grid(unit(), 20.0).unwrap();
        assert_eq!(perturb_nodes(&g, 0.0, 3).unwrap(), g);
        let p = perturb_nodes(&g, 0.1, 3).unwrap();
        assert_eq!(p, perturb_nodes(&g, 0.1, 3).unwrap());
        for i in 0..g.len() {
            let d = p.points[i].dist(g.points[i]);
            assert!(d <= 0.1 * g.h * (1.0 + 1e-12));
            if g.boundary[i] {
                assert_eq!(d, 0.0);
            }
        }
        p.validate().unwrap();
    }
}
