//! Differential operators applied to the Bessel kernel and the resulting
//! RBF-FD weight rows.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NodeSet, Point, Stencil};
use crate::localreg::{FactorMethod, LocalSystem};
use crate::specfun::{j0, jn_scaled};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Identity,
    PartialX,
    PartialY,
    Laplacian,
    /// `d/dn`
    NormalDeriv,
    /// `d^2/dtau^2`
    Tangential2,
    /// `d^3/(dn dtau^2)`
    MixedNT2,
    /// `-Laplacian - k^2`
    HelmholtzInterior,
    /// `d/dn + i k`
    ImpedanceBc,
    /// `d/dn + i k + (i / 2k) d^2/dtau^2`
    Abc2,
    /// `d/dn + i k + (3i / 4k) d^2/dtau^2 + (1 / 4k^2) d^3/(dn dtau^2)`
    Abc3,
}

impl OperatorKind {
    pub fn needs_direction(self) -> bool {
        matches!(
            self,
            OperatorKind::NormalDeriv
                | OperatorKind::Tangential2
                | OperatorKind::MixedNT2
                | OperatorKind::ImpedanceBc
                | OperatorKind::Abc2
                | OperatorKind::Abc3
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Identity => "identity",
            OperatorKind::PartialX => "partial_x",
            OperatorKind::PartialY => "partial_y",
            OperatorKind::Laplacian => "laplacian",
            OperatorKind::NormalDeriv => "normal_deriv",
            OperatorKind::Tangential2 => "tangential2",
            OperatorKind::MixedNT2 => "mixed_nt2",
            OperatorKind::HelmholtzInterior => "helmholtz_interior",
            OperatorKind::ImpedanceBc => "impedance",
            OperatorKind::Abc2 => "abc2",
            OperatorKind::Abc3 => "abc3",
        }
    }
}

/// Boundary condition families for the outer edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Impedance,
    Abc2,
    Abc3,
}

impl BoundaryKind {
    pub fn operator(self) -> OperatorKind {
        match self {
            BoundaryKind::Impedance => OperatorKind::ImpedanceBc,
            BoundaryKind::Abc2 => OperatorKind::Abc2,
            BoundaryKind::Abc3 => OperatorKind::Abc3,
        }
    }
}

/// An operator together with the frequency, local wave speed and, for
/// directional operators, the outward unit normal (the tangent is the normal
/// rotated by +90 degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub omega: f64,
    pub wave_speed: f64,
    pub normal: Option<Point>,
}

impl OperatorSpec {
    pub fn new(kind: OperatorKind, omega: f64, wave_speed: f64, normal: Option<Point>) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::param("omega", format!("must be positive, got {omega}")));
        }
        if !(wave_speed > 0.0 && wave_speed.is_finite()) {
            return Err(Error::param("wave_speed", format!("must be positive, got {wave_speed}")));
        }
        if let Some(n) = normal {
            if (n.norm() - 1.0).abs() > 1e-14 {
                return Err(Error::param("normal", "must be a unit vector"));
            }
        } else if kind.needs_direction() {
            return Err(Error::MissingDirection(kind.name()));
        }
        Ok(Self {
            kind,
            omega,
            wave_speed,
            normal,
        })
    }

    /// Shorthand for a spec with wavenumber `k` (`omega = k`, `c = 1`).
    pub fn with_wavenumber(kind: OperatorKind, k: f64, normal: Option<Point>) -> Result<Self> {
        Self::new(kind, k, 1.0, normal)
    }

    pub fn wavenumber(&self) -> f64 {
        self.omega / self.wave_speed
    }

    fn frame(&self) -> Result<(Point, Point)> {
        let n = self.normal.ok_or(Error::MissingDirection(self.kind.name()))?;
        Ok((n, n.perp()))
    }
}

/// Radial factors of the kernel derivatives at `d = x_eval - x_center`:
/// `A = -k^2 J1(s)/s`, `B = k^4 J2(s)/s^2`, `C = -k^6 J3(s)/s^3`, `s = k|d|`,
/// so that `d_a phi = A d_a`, `d_ab phi = B d_a d_b + A delta_ab`, and
/// `d_abc phi = C d_a d_b d_c + B (delta_ab d_c + delta_ac d_b + delta_bc d_a)`.
fn radial_factors(d: Point, k: f64) -> (f64, f64, f64, f64) {
    let s = k * d.norm();
    let k2 = k * k;
    (
        j0(s),
        -k2 * jn_scaled(1, s),
        k2 * k2 * jn_scaled(2, s),
        -k2 * k2 * k2 * jn_scaled(3, s),
    )
}

/// The operator applied to `x -> J0(k |x - x_center|)` and evaluated at
/// `x_eval`. The composite interior operator evaluates to zero identically
/// because the kernel solves the homogeneous equation; weight rows for it are
/// built differently (see [`interior_row`]).
pub fn kernel_apply(op: &OperatorSpec, x_eval: Point, x_center: Point, k: f64) -> Result<Complex64> {
    let d = x_eval - x_center;
    let (phi, a, b, c) = radial_factors(d, k);
    let ko = op.wavenumber();
    let re = |v: f64| Complex64::new(v, 0.0);
    let dn = |n: Point| a * d.dot(n);
    let dtt = |t: Point| b * d.dot(t) * d.dot(t) + a;
    let dntt = |n: Point, t: Point| c * d.dot(n) * d.dot(t) * d.dot(t) + b * d.dot(n);
    Ok(match op.kind {
        OperatorKind::Identity => re(phi),
        OperatorKind::PartialX => re(a * d.x),
        OperatorKind::PartialY => re(a * d.y),
        OperatorKind::Laplacian => re(-k * k * phi),
        OperatorKind::HelmholtzInterior => re(k * k * phi - ko * ko * phi),
        OperatorKind::NormalDeriv => re(dn(op.frame()?.0)),
        OperatorKind::Tangential2 => re(dtt(op.frame()?.1)),
        OperatorKind::MixedNT2 => {
            let (n, t) = op.frame()?;
            re(dntt(n, t))
        }
        OperatorKind::ImpedanceBc => re(dn(op.frame()?.0)) + I * ko * phi,
        OperatorKind::Abc2 => {
            let (n, t) = op.frame()?;
            re(dn(n)) + I * ko * phi + I / (2.0 * ko) * dtt(t)
        }
        OperatorKind::Abc3 => {
            let (n, t) = op.frame()?;
            re(dn(n)) + I * ko * phi + I * (3.0 / (4.0 * ko)) * dtt(t) + re(dntt(n, t) / (4.0 * ko * ko))
        }
    })
}

/// Complex weights of one global matrix row.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub node: usize,
    pub neighbors: Vec<usize>,
    pub weights: Vec<Complex64>,
}

impl WeightRow {
    /// `sum_j w_j u[neighbors[j]]` for a field indexed by global node.
    pub fn apply(&self, u: &[Complex64]) -> Complex64 {
        self.neighbors.iter().zip(&self.weights).map(|(&j, &w)| w * u[j]).sum()
    }
}

/// How the local solve behind a weight row is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    pub itmdi_iterations: usize,
    pub method: FactorMethod,
}

/// Weights `w = (L Phi^1) (J + beta I)^{-1}` for explicit stencil points with
/// `points[0]` the center; `sys` must be built from the same points.
pub fn local_weights(points: &[Point], op: &OperatorSpec, sys: &LocalSystem, opts: SolveOptions) -> Result<Vec<Complex64>> {
    if points.len() != sys.n() {
        return Err(Error::param("stencil", "local system does not match the stencil"));
    }
    if op.kind == OperatorKind::HelmholtzInterior {
        let k = op.wavenumber();
        if sys.beta == 0.0 {
            return Err(Error::DegenerateInteriorRow { node: 0 });
        }
        let lap = OperatorSpec { kind: OperatorKind::Laplacian, ..*op };
        let mut w = local_weights(points, &lap, sys, opts)?;
        for v in w.iter_mut() {
            *v = -*v;
        }
        w[0] -= k * k;
        return Ok(w);
    }
    let rhs = points
        .iter()
        .map(|&xj| kernel_apply(op, points[0], xj, sys.k))
        .collect::<Result<Vec<_>>>()?;
    // J + beta I is symmetric, so the row solve is a column solve
    let w = sys.solve_itmdi(&rhs, opts.itmdi_iterations, opts.method)?;
    if let Some(p) = w.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Factorization {
            method: "weights",
            pivot: p,
        });
    }
    Ok(w)
}

fn stencil_points(stencil: &Stencil, nodes: &NodeSet) -> Vec<Point> {
    stencil.members.iter().map(|&i| nodes.points[i]).collect()
}

fn wrap(stencil: &Stencil, e: Error) -> Error {
    match e {
        Error::DegenerateInteriorRow { .. } => Error::DegenerateInteriorRow { node: stencil.center },
        other => Error::Row {
            stencil: stencil.center,
            source: Box::new(other),
        },
    }
}

pub fn compute_weight_row(stencil: &Stencil, nodes: &NodeSet, op: &OperatorSpec, sys: &LocalSystem) -> Result<WeightRow> {
    compute_weight_row_with(stencil, nodes, op, sys, SolveOptions::default())
}

pub fn compute_weight_row_with(
    stencil: &Stencil,
    nodes: &NodeSet,
    op: &OperatorSpec,
    sys: &LocalSystem,
    opts: SolveOptions,
) -> Result<WeightRow> {
    let pts = stencil_points(stencil, nodes);
    let weights = local_weights(&pts, op, sys, opts).map_err(|e| wrap(stencil, e))?;
    Ok(WeightRow {
        node: stencil.center,
        neighbors: stencil.members.clone(),
        weights,
    })
}

/// Interior Helmholtz row `-W_lap - k^2 e_1` with `k = omega / c_center`.
/// Algebraically this equals `-k^2 beta e_1^T (J + beta I)^{-1}`, so `beta`
/// must be positive.
pub fn interior_row(stencil: &Stencil, nodes: &NodeSet, omega: f64, c_center: f64, sys: &LocalSystem) -> Result<WeightRow> {
    let op = OperatorSpec::new(OperatorKind::HelmholtzInterior, omega, c_center, None)?;
    compute_weight_row(stencil, nodes, &op, sys)
}

/// Boundary-condition row `B Phi^1 (J + beta I)^{-1}` at a boundary node.
pub fn boundary_row(
    stencil: &Stencil,
    nodes: &NodeSet,
    kind: BoundaryKind,
    omega: f64,
    c_at_node: f64,
    sys: &LocalSystem,
) -> Result<WeightRow> {
    let node = stencil.center;
    if !nodes.boundary[node] {
        return Err(Error::NotBoundary { node });
    }
    let op = OperatorSpec::new(kind.operator(), omega, c_at_node, Some(nodes.normals[node]))?;
    compute_weight_row(stencil, nodes, &op, sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localreg::RegularizationPolicy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel(x: Point, c: Point, k: f64) -> f64 {
        j0(k * x.dist(c))
    }

    /// Central-difference oracle for the pure derivative kinds.
    fn fd(kind: OperatorKind, x: Point, c: Point, k: f64, n: Point, step: f64) -> f64 {
        let t = n.perp();
        let f = |p: Point| kernel(p, c, k);
        let d1 = |p: Point, v: Point| (f(p + v * step) - f(p - v * step)) / (2.0 * step);
        let d2 = |p: Point, v: Point| (f(p + v * step) - 2.0 * f(p) + f(p - v * step)) / (step * step);
        match kind {
            OperatorKind::PartialX => d1(x, Point::new(1.0, 0.0)),
            OperatorKind::PartialY => d1(x, Point::new(0.0, 1.0)),
            OperatorKind::NormalDeriv => d1(x, n),
            OperatorKind::Tangential2 => d2(x, t),
            OperatorKind::Laplacian => d2(x, Point::new(1.0, 0.0)) + d2(x, Point::new(0.0, 1.0)),
            OperatorKind::MixedNT2 => {
                // d/dn of the analytic second tangential derivative
                let op = OperatorSpec::with_wavenumber(OperatorKind::Tangential2, k, Some(n)).unwrap();
                let g = |p: Point| kernel_apply(&op, p, c, k).unwrap().re;
                (g(x + n * step) - g(x - n * step)) / (2.0 * step)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let k: f64 = 100.0;
        for _ in 0..20 {
            let c = Point::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
            let x = Point::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let n = Point::new(th.cos(), th.sin());
            let r = x.dist(c);
            for kind in [
                OperatorKind::PartialX,
                OperatorKind::PartialY,
                OperatorKind::NormalDeriv,
                OperatorKind::Tangential2,
                OperatorKind::Laplacian,
                OperatorKind::MixedNT2,
            ] {
                // second differences need a larger step to stay above roundoff
                let step = match kind {
                    OperatorKind::Tangential2 | OperatorKind::Laplacian => 1e-3 * (1.0 / k).min(r),
                    _ => 1e-6 * (1.0 / k).min(r),
                };
                let op = OperatorSpec::with_wavenumber(kind, k, Some(n)).unwrap();
                let exact = kernel_apply(&op, x, c, k).unwrap().re;
                let approx = fd(kind, x, c, k, n, step);
                let scale = exact.abs().max(1e-3 * k.powi(match kind {
                    OperatorKind::PartialX | OperatorKind::PartialY | OperatorKind::NormalDeriv => 1,
                    OperatorKind::MixedNT2 => 3,
                    _ => 2,
                }));
                assert!((exact - approx).abs() <= 1e-5 * scale, "{kind:?}: {exact} vs {approx}");
            }
        }
    }

    #[test]
    fn laplacian_and_gradient_at_center() {
        let k = 37.0;
        let p = Point::new(0.3, -0.2);
        let lap = OperatorSpec::with_wavenumber(OperatorKind::Laplacian, k, None).unwrap();
        assert_eq!(kernel_apply(&lap, p, p, k).unwrap().re, -k * k);
        let dx = OperatorSpec::with_wavenumber(OperatorKind::PartialX, k, None).unwrap();
        assert_eq!(kernel_apply(&dx, p, p, k).unwrap(), Complex64::new(0.0, 0.0));
        let q = Point::new(0.31, -0.17);
        let v = kernel_apply(&lap, p, q, k).unwrap().re;
        assert!((v + k * k * j0(k * p.dist(q))).abs() < 1e-12 * k * k);
    }

    #[test]
    fn missing_direction() {
        assert!(matches!(
            OperatorSpec::with_wavenumber(OperatorKind::Abc3, 1.0, None),
            Err(Error::MissingDirection("abc3"))
        ));
    }

    fn square_points(h: f64, m: i32) -> Vec<Point> {
        let mut pts = vec![Point::new(0.0, 0.0)];
        for j in -m..=m {
            for i in -m..=m {
                if i != 0 || j != 0 {
                    pts.push(Point::new(i as f64 * h, j as f64 * h));
                }
            }
        }
        pts
    }

    #[test]
    fn identity_row_is_unit_vector() {
        let k = 10.0;
        let pts = square_points(0.05, 1);
        let sys = LocalSystem::from_points(&pts, k).unwrap();
        let op = OperatorSpec::with_wavenumber(OperatorKind::Identity, k, None).unwrap();
        let w = local_weights(&pts, &op, &sys, SolveOptions::default()).unwrap();
        assert!((w[0] - 1.0).norm() < 1e-10);
        for v in &w[1..] {
            assert!(v.norm() < 1e-10);
        }
    }

    #[test]
    fn two_node_partial_x() {
        let k = 5.0;
        let pts = [Point::new(0.0, 0.0), Point::new(0.1, 0.0)];
        let sys = LocalSystem::from_points(&pts, k).unwrap();
        let op = OperatorSpec::with_wavenumber(OperatorKind::PartialX, k, None).unwrap();
        let w = local_weights(&pts, &op, &sys, SolveOptions::default()).unwrap();
        // closed-form inverse of [[1, a], [a, 1]]
        let a = j0(0.5);
        let b = [0.0, -k * crate::specfun::j1(0.5) * (-1.0)];
        let det = 1.0 - a * a;
        let w0 = (b[0] - a * b[1]) / det;
        let w1 = (b[1] - a * b[0]) / det;
        assert!((w[0].re - w0).abs() < 1e-12 * w0.abs().max(1.0));
        assert!((w[1].re - w1).abs() < 1e-12 * w1.abs().max(1.0));
    }

    #[test]
    fn impedance_is_linear_combination() {
        let k = 30.0;
        let pts = square_points(0.04, 1);
        let mut sys = LocalSystem::from_points(&pts, k).unwrap();
        sys.apply_policy(&RegularizationPolicy::default()).unwrap();
        let n = Point::new(0.0, -1.0);
        let opts = SolveOptions::default();
        let w = |kind| {
            let op = OperatorSpec::with_wavenumber(kind, k, Some(n)).unwrap();
            local_weights(&pts, &op, &sys, opts).unwrap()
        };
        let imp = w(OperatorKind::ImpedanceBc);
        let dn = w(OperatorKind::NormalDeriv);
        let id = w(OperatorKind::Identity);
        let scale = imp.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for j in 0..pts.len() {
            let combo = dn[j] + I * k * id[j];
            // the solves agree up to roundoff amplified by kappa0 = 1e10
            assert!((imp[j] - combo).norm() <= 1e-6 * scale);
        }
    }

    #[test]
    fn translation_invariance() {
        // dyadic spacing and shift keep every coordinate difference exact
        let k = 50.0;
        let pts = square_points(1.0 / 64.0, 1);
        let check = |shift: Point, tol: f64| {
            let moved: Vec<Point> = pts.iter().map(|&p| p + shift).collect();
            let op = OperatorSpec::with_wavenumber(OperatorKind::Laplacian, k, None).unwrap();
            let mut a = LocalSystem::from_points(&pts, k).unwrap();
            let mut b = LocalSystem::from_points(&moved, k).unwrap();
            a.set_kappa_target(1e8).unwrap();
            b.set_kappa_target(1e8).unwrap();
            let wa = local_weights(&pts, &op, &a, SolveOptions::default()).unwrap();
            let wb = local_weights(&moved, &op, &b, SolveOptions::default()).unwrap();
            let scale = wa.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (x, y) in wa.iter().zip(&wb) {
                assert!((x - y).norm() <= tol * scale);
            }
        };
        check(Point::new(3.25, -1.5), 1e-12);
        // arbitrary shifts perturb distances at roundoff level, amplified by kappa0
        check(Point::new(0.3172, -1.113), 1e-6);
    }

    #[test]
    fn laplacian_row_rotation_symmetric() {
        let k = 40.0;
        let pts = square_points(0.02, 1);
        let mut sys = LocalSystem::from_points(&pts, k).unwrap();
        sys.set_kappa_target(1e9).unwrap();
        let op = OperatorSpec::with_wavenumber(OperatorKind::Laplacian, k, None).unwrap();
        let w = local_weights(&pts, &op, &sys, SolveOptions::default()).unwrap();
        let scale = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
        // rotating by 90 degrees maps (x, y) to (-y, x)
        for (i, p) in pts.iter().enumerate() {
            let q = Point::new(-p.y, p.x);
            let j = pts.iter().position(|r| r.dist(q) < 1e-12).unwrap();
            assert!((w[i] - w[j]).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn interior_row_needs_shift() {
        let k = 20.0;
        let pts = square_points(0.03, 1);
        let sys = LocalSystem::from_points(&pts, k).unwrap();
        let op = OperatorSpec::with_wavenumber(OperatorKind::HelmholtzInterior, k, None).unwrap();
        assert!(matches!(
            local_weights(&pts, &op, &sys, SolveOptions::default()),
            Err(Error::DegenerateInteriorRow { .. })
        ));
    }

    #[test]
    fn abc_rows_share_normal_part() {
        let k = 15.0;
        let n = Point::new(1.0, 0.0);
        let x = Point::new(0.5, 0.1);
        let c = Point::new(0.47, 0.05);
        let v = |kind| kernel_apply(&OperatorSpec::with_wavenumber(kind, k, Some(n)).unwrap(), x, c, k).unwrap();
        let dn = v(OperatorKind::NormalDeriv);
        let id = v(OperatorKind::Identity);
        let tt = v(OperatorKind::Tangential2).re;
        let ntt = v(OperatorKind::MixedNT2).re;
        let abc2 = v(OperatorKind::Abc2);
        let abc3 = v(OperatorKind::Abc3);
        let base = dn + I * k * id;
        assert!((abc2 - base - I * tt / (2.0 * k)).norm() < 1e-12 * k);
        assert!((abc3 - base - I * 3.0 * tt / (4.0 * k) - ntt / (4.0 * k * k)).norm() < 1e-12 * k);
    }
}
