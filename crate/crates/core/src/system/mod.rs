//! Global assembly of `H U = F` and its sparse direct solution.

mod solve;

pub use solve::{estimate_condition, solve_sparse, SolveReport, RESIDUAL_TOL};

use std::fmt::Write as _;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{impedance_data, ReferenceField};
use crate::error::{Error, Result};
use crate::geometry::{generate_adaptive, generate_hex_grid, generate_square_grid, NodeSet, Point, Rect, Stencil};
use crate::localreg::{LocalSystem, RegularizationPolicy};
use crate::medium::SpeedModel;
use crate::operators::{boundary_row, interior_row, BoundaryKind, WeightRow};

/// A smoothed point source `amplitude * exp(-r^2 / (2 sigma^2)) / (2 pi sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub location: Point,
    pub amplitude: Complex64,
    pub sigma: f64,
}

impl Source {
    pub fn density(&self, p: Point) -> Complex64 {
        let s2 = self.sigma * self.sigma;
        self.amplitude * ((-p.dist2(self.location) / (2.0 * s2)).exp() / (2.0 * PI * s2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    Square { inv_h: f64 },
    Hex { inv_h: f64 },
    /// Wavelength-adaptive nodes with `ng` nodes per local wavelength.
    Adaptive { ng: f64, seed: u64 },
}

/// Everything needed to set up one frequency-domain solve of
/// `-Laplacian u - (omega / c)^2 u = f` with a first- or higher-order
/// absorbing condition on the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub domain: Rect,
    pub omega: f64,
    pub speed: SpeedModel,
    pub sources: Vec<Source>,
    pub bc_kind: BoundaryKind,
    /// Exact solution whose impedance trace supplies `g`; `g = 0` when absent.
    pub boundary_data: Option<ReferenceField>,
    pub grid: GridSpec,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub policy: RegularizationPolicy,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::param("omega", format!("must be positive, got {}", self.omega)));
        }
        self.speed.validate(&self.domain)?;
        for s in &self.sources {
            if !self.domain.contains(s.location) {
                return Err(Error::param("sources", "source location outside the domain"));
            }
            if !(s.sigma > 0.0 && s.sigma.is_finite()) {
                return Err(Error::param("sources", format!("sigma must be positive, got {}", s.sigma)));
            }
        }
        if self.boundary_data.is_some() && self.bc_kind != BoundaryKind::Impedance {
            return Err(Error::param("boundary_data", "analytic data is supported for impedance conditions only"));
        }
        if self.n_interior < 2 || self.n_boundary < 2 {
            return Err(Error::param("stencil", "stencils need at least two nodes"));
        }
        Ok(())
    }

    pub fn generate_nodes(&self) -> Result<NodeSet> {
        match self.grid {
            GridSpec::Square { inv_h } => generate_square_grid(self.domain, inv_h),
            GridSpec::Hex { inv_h } => generate_hex_grid(self.domain, inv_h),
            GridSpec::Adaptive { ng, seed } => generate_adaptive(self.domain, &self.speed, self.omega, ng, seed),
        }
    }

    pub fn wavenumber_at(&self, p: Point) -> f64 {
        self.omega / self.speed.speed(p)
    }
}

/// Summary of the diagonal shifts used across all rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub zero_rows: usize,
}

/// The assembled system in compressed-row form, one row per node.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
    pub solution: Option<Vec<Complex64>>,
    pub residual: Option<f64>,
    /// Diagonal shift used for each row's local system.
    pub row_beta: Vec<f64>,
}

impl SparseSystem {
    /// Builds a system from rows given in node order.
    pub fn from_rows(rows: Vec<WeightRow>, rhs: Vec<Complex64>, row_beta: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        if rhs.len() != n || row_beta.len() != n {
            return Err(Error::param("rows", "row, right-hand side and shift counts differ"));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, r) in rows.into_iter().enumerate() {
            if r.node != i {
                return Err(Error::param("rows", format!("row {i} belongs to node {}", r.node)));
            }
            for (&c, &v) in r.neighbors.iter().zip(&r.weights) {
                if c >= n {
                    return Err(Error::param("rows", format!("column {c} out of range in row {i}")));
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
            rhs,
            solution: None,
            residual: None,
            row_beta,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[Complex64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
            })
            .collect()
    }

    /// `max_i |(H x - F)_i| / max_i |F_i|` (absolute when `F = 0`).
    pub fn relative_residual(&self, x: &[Complex64]) -> f64 {
        let hx = self.mul_vec(x);
        let r = hx.iter().zip(&self.rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let f = self.rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if f > 0.0 {
            r / f
        } else {
            r
        }
    }

    /// `max_j sum_i |H_ij|`.
    pub fn norm1(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (_, j, v) in self.triplets() {
            col[j] += v.norm();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn beta_stats(&self) -> BetaStats {
        let n = self.row_beta.len().max(1) as f64;
        BetaStats {
            min: self.row_beta.iter().copied().fold(f64::INFINITY, f64::min),
            max: self.row_beta.iter().copied().fold(0.0, f64::max),
            mean: self.row_beta.iter().sum::<f64>() / n,
            zero_rows: self.row_beta.iter().filter(|&&b| b == 0.0).count(),
        }
    }

    /// Writes the matrix as `i j re im` lines with 0-based indices.
    pub fn dump_triplets(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut s = String::with_capacity(64 * self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {:.17e} {:.17e}", v.re, v.im);
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Assembles one row per node: interior rows discretize
/// `-Laplacian - k^2` and boundary rows the condition in `problem.bc_kind`,
/// with `k = omega / c` taken at the row's center node.
pub fn assemble(nodes: &NodeSet, stencils: &[Stencil], problem: &ProblemSpec) -> Result<SparseSystem> {
    problem.validate()?;
    if stencils.len() != nodes.len() {
        return Err(Error::param("stencils", "need exactly one stencil per node"));
    }
    let rows: Vec<(WeightRow, Complex64, f64)> = stencils
        .par_iter()
        .enumerate()
        .map(|(i, st)| {
            if st.center != i {
                return Err(Error::param("stencils", format!("stencil {i} is centered at node {}", st.center)));
            }
            let p = nodes.points[i];
            let c = problem.speed.speed(p);
            let k = problem.omega / c;
            let mut sys = LocalSystem::build(st, nodes, k).map_err(|e| Error::Row {
                stencil: i,
                source: Box::new(e),
            })?;
            sys.apply_policy(&problem.policy).map_err(|e| Error::Row {
                stencil: i,
                source: Box::new(e),
            })?;
            if nodes.boundary[i] {
                let row = boundary_row(st, nodes, problem.bc_kind, problem.omega, c, &sys)?;
                let g = match &problem.boundary_data {
                    Some(field) => impedance_data(field, p, nodes.normals[i], k)?,
                    None => Complex64::new(0.0, 0.0),
                };
                Ok((row, g, sys.beta))
            } else {
                let row = interior_row(st, nodes, problem.omega, c, &sys)?;
                let f = problem.sources.iter().map(|s| s.density(p)).sum();
                Ok((row, f, sys.beta))
            }
        })
        .collect::<Result<_>>()?;
    let mut wr = Vec::with_capacity(rows.len());
    let mut rhs = Vec::with_capacity(rows.len());
    let mut betas = Vec::with_capacity(rows.len());
    for (r, f, b) in rows {
        wr.push(r);
        rhs.push(f);
        betas.push(b);
    }
    SparseSystem::from_rows(wr, rhs, betas)
}
