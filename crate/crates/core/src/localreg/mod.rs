//! Local Bessel interpolation matrices, their spectra, and regularized solves.

mod eigen;
mod factor;

pub use eigen::{extreme_eigenvalues, symmetric_eigenvalues, Spectrum};
pub use factor::{Cholesky, Factor, FactorMethod, Field, Ldlt};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NodeSet, Point, Stencil};
use crate::specfun;

/// Relative floor applied to the smallest eigenvalue before it enters the
/// regularization formula.
pub const LAMBDA_FLOOR: f64 = 1e-18;

/// Dense symmetric matrix in row-major full storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    /// Wraps row-major data; symmetry is checked by the consumers.
    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data has the wrong length");
        Self { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.n {
            for j in 0..i {
                if self.get(i, j) != self.get(j, i) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += shift;
        }
        out
    }

    pub fn mul_vec<T: Field + std::ops::Add<Output = T>>(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                let mut s = x[0] * row[0];
                for j in 1..self.n {
                    s = s + x[j] * row[j];
                }
                s
            })
            .collect()
    }
}

/// How the target condition number of the regularized matrix is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum KappaMode {
    /// `kappa0 = 10^(7 + sqrt(n))`, clipped to `[1e7, 1e14]`.
    TargetFormula,
    /// `kappa0 = 10^(-exponent) * kappa(J)`.
    Ratio { exponent: u32 },
    /// `kappa0 = 10^(1 + sqrt(n))`, a much stronger shift for rough media.
    Heterogeneous,
    /// No shift; `beta = 0`.
    Unregularized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationPolicy {
    #[serde(flatten)]
    pub mode: KappaMode,
    /// Number of ITMDI refinement sweeps `M`; zero means plain MDI.
    pub itmdi_iterations: usize,
}

impl Default for RegularizationPolicy {
    fn default() -> Self {
        Self {
            mode: KappaMode::TargetFormula,
            itmdi_iterations: 0,
        }
    }
}

impl RegularizationPolicy {
    pub fn ratio(exponent: u32, itmdi_iterations: usize) -> Self {
        Self {
            mode: KappaMode::Ratio { exponent },
            itmdi_iterations,
        }
    }

    pub fn unregularized() -> Self {
        Self {
            mode: KappaMode::Unregularized,
            itmdi_iterations: 0,
        }
    }

    /// Target `kappa0` for an `n`-node stencil whose matrix has condition
    /// number `kappa_j`; `None` when no shift is wanted.
    pub fn kappa_target(&self, n: usize, kappa_j: f64) -> Option<f64> {
        let sn = (n as f64).sqrt();
        match self.mode {
            KappaMode::TargetFormula => Some(10f64.powf(7.0 + sn).clamp(1e7, 1e14)),
            KappaMode::Ratio { exponent } => Some(kappa_j * 10f64.powi(-(exponent as i32))),
            KappaMode::Heterogeneous => Some(10f64.powf(1.0 + sn)),
            KappaMode::Unregularized => None,
        }
    }
}

/// `beta = (lambda_max - kappa0 * lambda_min) / (kappa0 - 1)`, clamped at 0,
/// so that `(lambda_max + beta) / (lambda_min + beta) = kappa0` whenever the
/// unshifted condition number exceeds `kappa0`. A non-positive or negligible
/// `lambda_min` is replaced by `1e-18 * lambda_max`.
pub fn compute_beta(lambda_max: f64, lambda_min: f64, kappa_target: f64) -> Result<f64> {
    if !(kappa_target > 1.0) || !kappa_target.is_finite() {
        return Err(Error::param("kappa_target", format!("must exceed 1, got {kappa_target}")));
    }
    if !(lambda_max > 0.0) || !lambda_max.is_finite() || lambda_min.is_nan() || lambda_min > lambda_max {
        return Err(Error::param(
            "spectrum",
            format!("need lambda_max >= lambda_min, lambda_max > 0; got ({lambda_max}, {lambda_min})"),
        ));
    }
    let ln = effective_lambda_min(lambda_max, lambda_min);
    Ok(((lambda_max - kappa_target * ln) / (kappa_target - 1.0)).max(0.0))
}

fn effective_lambda_min(lambda_max: f64, lambda_min: f64) -> f64 {
    let floor = LAMBDA_FLOOR * lambda_max;
    if lambda_min <= floor {
        floor
    } else {
        lambda_min
    }
}

/// The interpolation matrix `J_k = (J0(k |x_l - x_j|))` of one stencil with
/// its extreme eigenvalues and the current diagonal shift `beta`.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub matrix: SymMatrix,
    pub k: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// The computed smallest eigenvalue was not positive and was clamped.
    pub lambda_min_clamped: bool,
    pub beta: f64,
    pub kappa_target: Option<f64>,
}

impl LocalSystem {
    pub fn build(stencil: &Stencil, nodes: &NodeSet, k: f64) -> Result<Self> {
        let pts: Vec<Point> = stencil.members.iter().map(|&i| nodes.points[i]).collect();
        Self::from_points(&pts, k).map_err(|e| match e {
            Error::CoincidentNodes { a, b, .. } => Error::CoincidentNodes {
                center: stencil.center,
                a: stencil.members[a],
                b: stencil.members[b],
            },
            other => other,
        })
    }

    /// Builds `J_k` for explicit points; coincident-node errors refer to
    /// positions in `points` (center 0).
    pub fn from_points(points: &[Point], k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::param("k", format!("must be positive, got {k}")));
        }
        if points.is_empty() {
            return Err(Error::param("stencil", "no nodes"));
        }
        let n = points.len();
        let scale = points.iter().map(|p| p.dist(points[0])).fold(0.0, f64::max);
        let mut data = vec![0.0; n * n];
        for l in 0..n {
            data[l * n + l] = 1.0;
            for j in 0..l {
                let r = points[l].dist(points[j]);
                if r <= 1e-12 * scale || r == 0.0 {
                    return Err(Error::CoincidentNodes { center: 0, a: j, b: l });
                }
                let v = specfun::j0(k * r);
                data[l * n + j] = v;
                data[j * n + l] = v;
            }
        }
        Self::from_matrix(SymMatrix::from_rows(n, data), k)
    }

    /// Wraps an arbitrary symmetric matrix (used for eigen-constructed tests).
    pub fn from_matrix(matrix: SymMatrix, k: f64) -> Result<Self> {
        let s = extreme_eigenvalues(&matrix)?;
        Ok(Self {
            matrix,
            k,
            lambda_max: s.lambda_max,
            lambda_min: s.lambda_min,
            lambda_min_clamped: s.clamped,
            beta: 0.0,
            kappa_target: None,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.n
    }

    /// `lambda_max / lambda_min` with the eigenvalue floor applied.
    pub fn kappa(&self) -> f64 {
        self.lambda_max / effective_lambda_min(self.lambda_max, self.lambda_min)
    }

    /// Condition number of `J + beta I` predicted from the spectrum.
    pub fn regularized_kappa(&self) -> f64 {
        (self.lambda_max + self.beta) / (effective_lambda_min(self.lambda_max, self.lambda_min) + self.beta)
    }

    pub fn set_kappa_target(&mut self, kappa0: f64) -> Result<()> {
        self.beta = compute_beta(self.lambda_max, self.lambda_min, kappa0)?;
        self.kappa_target = Some(kappa0);
        Ok(())
    }

    pub fn set_beta(&mut self, beta: f64) -> Result<()> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", format!("must be non-negative, got {beta}")));
        }
        self.beta = beta;
        self.kappa_target = None;
        Ok(())
    }

    pub fn apply_policy(&mut self, policy: &RegularizationPolicy) -> Result<()> {
        match policy.kappa_target(self.n(), self.kappa()) {
            // a ratio target at or below 1 cannot be met; fall back to no shift
            Some(k0) if k0 > 1.0 => self.set_kappa_target(k0),
            _ => self.set_beta(0.0),
        }
    }

    /// Factorization of `J + beta I`.
    pub fn factor(&self, method: FactorMethod) -> Result<Factor> {
        Factor::new(&self.matrix.shifted(self.beta), method)
    }

    /// Solves `(J + beta I) y = u`.
    pub fn solve_direct<T: Field>(&self, u: &[T], method: FactorMethod) -> Result<Vec<T>> {
        self.check_len(u.len())?;
        let f = self.factor(method)?;
        let mut y = u.to_vec();
        f.solve_in_place(&mut y);
        Ok(y)
    }

    /// The regularized coefficients `(J + beta I)^{-1} u`.
    pub fn solve_mdi<T: Field>(&self, u: &[T]) -> Result<Vec<T>> {
        self.solve_direct(u, FactorMethod::Auto)
    }

    /// Iterated MDI: `a_0 = (J + beta I)^{-1} u`,
    /// `a_m = a_0 + beta (J + beta I)^{-1} a_{m-1}`; one factorization is
    /// shared by all `m` sweeps.
    pub fn solve_itmdi<T: Field + std::ops::Add<Output = T>>(&self, u: &[T], m: usize, method: FactorMethod) -> Result<Vec<T>> {
        self.check_len(u.len())?;
        let f = self.factor(method)?;
        let mut a0 = u.to_vec();
        f.solve_in_place(&mut a0);
        let mut a = a0.clone();
        if self.beta == 0.0 {
            return Ok(a);
        }
        for _ in 0..m {
            f.solve_in_place(&mut a);
            for (ai, &bi) in a.iter_mut().zip(&a0) {
                *ai = bi + *ai * self.beta;
            }
        }
        Ok(a)
    }

    /// `(1/lambda_min) (beta / (lambda_min + beta))^m ||u||_2`.
    pub fn itmdi_error_bound(&self, u_norm: f64, m: usize) -> f64 {
        let ln = effective_lambda_min(self.lambda_max, self.lambda_min);
        (self.beta / (ln + self.beta)).powi(m as i32) * u_norm / ln
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len == self.n() {
            Ok(())
        } else {
            Err(Error::param(
                "rhs",
                format!("length {len} does not match stencil size {}", self.n()),
            ))
        }
    }
}
