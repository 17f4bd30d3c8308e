use std::f64::consts::TAU;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{seconds, Cell, ExperimentReport, Lattice};
use crate::analytic::u2;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::localreg::{FactorMethod, LocalSystem, RegularizationPolicy};
use crate::operators::{local_weights, OperatorKind, OperatorSpec, SolveOptions};

/// How the local interpolation system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverPath {
    /// Unshifted matrix, symmetric indefinite factorization.
    Ldlt,
    Mdi,
    Itmdi { iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub lattice: Lattice,
    pub sizes: Vec<usize>,
    pub k: f64,
    /// Lattice spacing; defaults to `2 pi / (8k)` (square) or `2 pi / (6k)` (hex).
    pub h: Option<f64>,
    pub solver: SolverPath,
    pub ratio_exponent: u32,
    /// Uniform jitter of the non-center members, as a fraction of `h`.
    pub perturbation: Option<f64>,
    pub seed: u64,
    /// Where the stencil is placed in the reference field.
    #[serde(default)]
    pub center: Point,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::Square,
            sizes: vec![9, 13, 25],
            k: 100.0,
            h: None,
            solver: SolverPath::Itmdi { iterations: 15 },
            ratio_exponent: 6,
            perturbation: None,
            seed: 0,
            center: Point::new(0.0, 0.0),
        }
    }
}

impl TruncationConfig {
    pub fn spacing(&self) -> f64 {
        self.h.unwrap_or(match self.lattice {
            Lattice::Square => TAU / (8.0 * self.k),
            Lattice::Hex => TAU / (6.0 * self.k),
        })
    }
}

/// The `n` lattice points nearest the origin, origin first. Ties are broken
/// by polar angle so the result does not depend on enumeration order.
pub fn lattice_stencil(lattice: Lattice, n: usize, h: f64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::param("sizes", "stencil size must be positive"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param("h", format!("must be positive, got {h}")));
    }
    let r = (n as f64).sqrt() as i64 + 2;
    let mut pts = Vec::new();
    for j in -r..=r {
        for i in -r..=r {
            let p = match lattice {
                Lattice::Square => Point::new(i as f64, j as f64),
                Lattice::Hex => Point::new(i as f64 + 0.5 * j as f64, j as f64 * 3f64.sqrt() / 2.0),
            };
            pts.push(p);
        }
    }
    let key = |p: &Point| (p.dot(*p), p.y.atan2(p.x));
    pts.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    pts.truncate(n);
    Ok(pts.into_iter().map(|p| p * h).collect())
}

/// Relative error of the `d/dx` weights applied to the four-source field at
/// the stencil center, alongside both condition numbers.
pub fn run_truncation(cfg: &TruncationConfig) -> Result<ExperimentReport> {
    let h = cfg.spacing();
    let field = u2(cfg.k)?;
    let mut report = ExperimentReport::new(
        "truncation",
        cfg,
        Some(cfg.seed),
        &["n", "h", "kappa_j", "kappa_reg", "beta", "error"],
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let policy = RegularizationPolicy::ratio(cfg.ratio_exponent, 0);
    let op = OperatorSpec::with_wavenumber(OperatorKind::PartialX, cfg.k, None)?;
    for &n in &cfg.sizes {
        let t = Instant::now();
        let mut pts = lattice_stencil(cfg.lattice, n, h)?;
        if let Some(a) = cfg.perturbation {
            if !(a >= 0.0 && a < 0.5) {
                return Err(Error::param("perturbation", "must lie in [0, 0.5)"));
            }
            for p in pts.iter_mut().skip(1) {
                *p = *p + Point::new(rng.gen_range(-a..=a), rng.gen_range(-a..=a)) * h;
            }
        }
        let mut sys = LocalSystem::from_points(&pts, cfg.k)?;
        sys.apply_policy(&policy)?;
        let (kappa_reg, beta) = (sys.regularized_kappa(), sys.beta);
        let opts = match cfg.solver {
            SolverPath::Ldlt => {
                sys.set_beta(0.0)?;
                SolveOptions {
                    itmdi_iterations: 0,
                    method: FactorMethod::Ldlt,
                }
            }
            SolverPath::Mdi => SolveOptions::default(),
            SolverPath::Itmdi { iterations } => SolveOptions {
                itmdi_iterations: iterations,
                method: FactorMethod::Auto,
            },
        };
        let w = local_weights(&pts, &op, &sys, opts)?;
        let mut approx = num_complex::Complex64::new(0.0, 0.0);
        for (wj, p) in w.iter().zip(&pts) {
            approx += wj * field.value(*p + cfg.center)?;
        }
        let exact = field.gradient(pts[0] + cfg.center)?[0];
        let err = (approx - exact).norm() / exact.norm();
        report.push_row(
            vec![Cell::from(n), h.into(), sys.kappa().into(), kappa_reg.into(), beta.into(), err.into()],
            &[("weights", seconds(t))],
        )?;
    }
    Ok(report)
}
