//! Experiment drivers that turn solver runs into tabular reports.
//!
//! Every driver returns an [`ExperimentReport`]. The CSV side holds only
//! deterministic quantities, so two runs with the same configuration produce
//! identical bytes; wall-clock timings live in the JSON sidecar.

mod green;
mod heterogeneous;
mod solve;
mod sweeps;
mod truncation;

pub use green::{green_field, run_green, GreenConfig};
pub use heterogeneous::{run_heterogeneous, HeterogeneousConfig};
pub use solve::{run_solve, ReferenceChoice, SolveConfig, SourceConfig};
pub use sweeps::{run_convergence, run_planewave, run_pollution, ConvergenceConfig, PlaneWaveConfig, PollutionConfig, ReferenceSolution};
pub use truncation::{lattice_stencil, run_truncation, SolverPath, TruncationConfig};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::localreg::{LocalSystem, RegularizationPolicy};
use crate::specfun::j0;
use crate::system::SparseSystem;

/// Node lattice used by the structured-grid experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lattice {
    Square,
    Hex,
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Real(v) => Some(v),
            Cell::Missing => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            // shortest representation that round-trips
            Cell::Real(v) => format!("{v:e}"),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Real)
    }
}

/// Least-squares line `log10(y) = slope * log10(x) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits a line through `(log10 x, log10 y)`; `None` for fewer than two
/// distinct abscissae or non-positive data.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> Option<Regression> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.log10()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some(Regression {
        slope,
        intercept: my - slope * mx,
        points: xs.len(),
    })
}

/// Complex field sampled at points, written as `x y re im` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub name: String,
    pub points: Vec<Point>,
    pub values: Vec<Complex64>,
}

impl FieldDump {
    pub fn format(&self) -> String {
        let mut s = String::with_capacity(self.points.len() * 96);
        for (p, v) in self.points.iter().zip(&self.values) {
            let _ = writeln!(s, "{:.16e} {:.16e} {:.16e} {:.16e}", p.x, p.y, v.re, v.im);
        }
        s
    }
}

/// Tabular outcome of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Wall-clock seconds per row, kept out of the CSV.
    pub timings: Vec<BTreeMap<String, f64>>,
    pub regression: Option<Regression>,
    pub fields: Vec<FieldDump>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &impl Serialize, seed: Option<u64>, columns: &[&str]) -> Result<Self> {
        let config = serde_json::to_value(config).map_err(|e| Error::Report(format!("cannot serialize configuration: {e}")))?;
        Ok(Self {
            experiment: experiment.to_string(),
            config,
            seed,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            timings: Vec::new(),
            regression: None,
            fields: Vec::new(),
        })
    }

    /// Appends a row; columns whose name contains `error` must hold finite
    /// nonnegative values or be missing.
    pub fn push_row(&mut self, cells: Vec<Cell>, timings: &[(&str, f64)]) -> Result<()> {
        if cells.len() != self.columns.len() {
            return Err(Error::Report(format!(
                "row has {} cells for {} columns",
                cells.len(),
                self.columns.len()
            )));
        }
        for (name, cell) in self.columns.iter().zip(&cells) {
            if let (true, Some(v)) = (name.contains("error"), cell.as_f64()) {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Report(format!("column {name} holds invalid error value {v}")));
                }
            }
        }
        self.rows.push(cells);
        self.timings.push(timings.iter().map(|&(k, v)| (k.to_string(), v)).collect());
        Ok(())
    }

    fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn value(&self, row: usize, column: &str) -> Option<f64> {
        self.rows.get(row)?.get(self.column_index(column)?)?.as_f64()
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let c = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[c].as_f64()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Report(format!("csv encoding failed: {e}"));
        w.write_record(&self.columns).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Report(format!("csv encoding failed: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "config": self.config,
            "seed": self.seed,
            "columns": self.columns,
            "regression": self.regression,
            "timings_seconds": self.timings,
            "environment": {
                "version": env!("CARGO_PKG_VERSION"),
                "threads": rayon::current_num_threads(),
                "solve_residual_target": crate::system::RESIDUAL_TOL,
            },
        })
    }

    /// Writes `<experiment>.csv`, `<experiment>.json` and one
    /// `<experiment>_<field>.txt` per field dump into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut out = Vec::new();
        let csv_path = dir.join(format!("{}.csv", self.experiment));
        fs::write(&csv_path, self.to_csv()?).map_err(|e| Error::io(&csv_path, e))?;
        out.push(csv_path);
        let json_path = dir.join(format!("{}.json", self.experiment));
        let json = serde_json::to_string_pretty(&self.sidecar()).map_err(|e| Error::Report(e.to_string()))?;
        fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
        out.push(json_path);
        for f in &self.fields {
            let p = dir.join(format!("{}_{}.txt", self.experiment, f.name));
            fs::write(&p, f.format()).map_err(|e| Error::io(&p, e))?;
            out.push(p);
        }
        Ok(out)
    }
}

pub(crate) fn seconds(t: std::time::Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub(crate) fn max_error<F>(points: &[Point], u: &[Complex64], exact: F) -> Result<f64>
where
    F: Fn(Point) -> Result<Complex64>,
{
    let mut e = 0.0f64;
    for (p, v) in points.iter().zip(u) {
        e = e.max((exact(*p)? - v).norm());
    }
    Ok(e)
}

pub(crate) fn beta_cells(sys: &SparseSystem) -> [Cell; 3] {
    let b = sys.beta_stats();
    [b.min.into(), b.max.into(), b.mean.into()]
}

/// Abscissae where the piecewise-linear interpolant of `samples` changes sign.
pub fn zero_crossings(samples: &[(f64, f64)]) -> Vec<f64> {
    let mut z = Vec::new();
    for w in samples.windows(2) {
        let ((x0, a), (x1, b)) = (w[0], w[1]);
        if a == 0.0 {
            z.push(x0);
        } else if a * b < 0.0 {
            z.push(x0 + (x1 - x0) * a / (a - b));
        }
    }
    z
}

/// Mean gap between consecutive zero crossings, if there are at least two.
pub fn mean_spacing(crossings: &[f64]) -> Option<f64> {
    (crossings.len() >= 2).then(|| (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Evaluates the regularized Bessel interpolant of nodal values at `x`,
/// using the `n` nodes nearest to it.
pub(crate) fn interpolate(
    index: &crate::geometry::PointIndex,
    points: &[Point],
    u: &[Complex64],
    x: Point,
    n: usize,
    k: f64,
    policy: &RegularizationPolicy,
) -> Result<Complex64> {
    let near = index.nearest(x, n);
    let pts: Vec<Point> = near.iter().map(|&i| points[i]).collect();
    let vals: Vec<Complex64> = near.iter().map(|&i| u[i]).collect();
    let mut sys = LocalSystem::from_points(&pts, k)?;
    sys.apply_policy(policy)?;
    let alpha = sys.solve_itmdi(&vals, policy.itmdi_iterations, Default::default())?;
    Ok(pts.iter().zip(alpha).map(|(p, a)| a * j0(k * p.dist(x))).sum())
}

pub(crate) fn unit_square() -> Rect {
    Rect {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    }
}

pub(crate) fn centered_square() -> Rect {
    Rect {
        x_min: -0.5,
        x_max: 0.5,
        y_min: -0.5,
        y_max: 0.5,
    }
}
