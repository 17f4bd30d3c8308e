use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, TAU};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{beta_cells, centered_square, log_log_fit, max_error, seconds, unit_square, Cell, ExperimentReport, FieldDump, Lattice};
use crate::analytic::{plane_wave, u1, u2, ReferenceField};
use crate::error::{Error, Result};
use crate::geometry::{build_stencils, Rect};
use crate::localreg::RegularizationPolicy;
use crate::medium::SpeedModel;
use crate::operators::BoundaryKind;
use crate::system::{assemble, estimate_condition, solve_sparse, GridSpec, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSolution {
    /// Single source at (2, 2).
    U1,
    /// Four far sources.
    U2,
}

impl ReferenceSolution {
    fn field(self, k: f64) -> Result<ReferenceField> {
        match self {
            ReferenceSolution::U1 => u1(k),
            ReferenceSolution::U2 => u2(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollutionConfig {
    pub lattice: Lattice,
    pub k_over_2pi: Vec<f64>,
    pub ng: f64,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub policy: RegularizationPolicy,
    pub solution: ReferenceSolution,
    pub condition: bool,
    pub dump_fields: bool,
}

impl Default for PollutionConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::Square,
            k_over_2pi: vec![10.0, 20.0],
            ng: 6.0,
            n_interior: 13,
            n_boundary: 15,
            policy: RegularizationPolicy::ratio(6, 0),
            solution: ReferenceSolution::U1,
            condition: true,
            dump_fields: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub lattice: Lattice,
    pub k_over_2pi: f64,
    pub ng: Vec<f64>,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub policy: RegularizationPolicy,
    pub solution: ReferenceSolution,
    pub condition: bool,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            lattice: Lattice::Square,
            k_over_2pi: 20.0,
            ng: vec![6.0, 60.0 / 7.0, 60.0 / 4.9],
            n_interior: 9,
            n_boundary: 15,
            policy: RegularizationPolicy::ratio(4, 0),
            solution: ReferenceSolution::U1,
            condition: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveConfig {
    pub k: f64,
    pub h: f64,
    pub thetas: Vec<f64>,
    /// When set, sweeps these wavenumbers at `theta = pi/4` and `kh = 1`
    /// instead of sweeping the angle.
    pub k_sweep: Option<Vec<f64>>,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub policy: RegularizationPolicy,
    pub condition: bool,
    pub dump_fields: bool,
}

impl Default for PlaneWaveConfig {
    fn default() -> Self {
        Self {
            k: 100.0,
            h: 0.01,
            thetas: vec![0.0, FRAC_PI_8, FRAC_PI_4],
            k_sweep: None,
            n_interior: 13,
            n_boundary: 15,
            policy: RegularizationPolicy::ratio(6, 0),
            condition: false,
            dump_fields: false,
        }
    }
}

struct Outcome {
    n_nodes: usize,
    error: f64,
    residual: f64,
    cond: Option<f64>,
    beta: [Cell; 3],
    timings: [(&'static str, f64); 3],
    field: Option<FieldDump>,
}

#[allow(clippy::too_many_arguments)]
fn solve_impedance(
    domain: Rect,
    lattice: Lattice,
    inv_h: f64,
    field: ReferenceField,
    n_interior: usize,
    n_boundary: usize,
    policy: RegularizationPolicy,
    condition: bool,
    dump: Option<String>,
) -> Result<Outcome> {
    let k = field.wavenumber();
    let grid = match lattice {
        Lattice::Square => GridSpec::Square { inv_h },
        Lattice::Hex => GridSpec::Hex { inv_h },
    };
    let problem = ProblemSpec {
        domain,
        omega: k,
        speed: SpeedModel::constant(1.0),
        sources: Vec::new(),
        bc_kind: BoundaryKind::Impedance,
        boundary_data: Some(field.clone()),
        grid,
        n_interior,
        n_boundary,
        policy,
    };
    let t = Instant::now();
    let nodes = problem.generate_nodes()?;
    let stencils = build_stencils(&nodes, n_interior, n_boundary)?;
    let mut sys = assemble(&nodes, &stencils, &problem)?;
    let t_asm = seconds(t);
    let t = Instant::now();
    let rep = solve_sparse(&mut sys)?;
    let t_solve = seconds(t);
    let t = Instant::now();
    let cond = if condition { Some(estimate_condition(&sys)?) } else { None };
    let t_cond = seconds(t);
    let u = sys.solution.take().unwrap_or_default();
    let error = max_error(&nodes.points, &u, |p| field.value(p))?;
    Ok(Outcome {
        n_nodes: nodes.len(),
        error,
        residual: rep.residual,
        cond,
        beta: beta_cells(&sys),
        timings: [("assembly", t_asm), ("solve", t_solve), ("condition", t_cond)],
        field: dump.map(|name| FieldDump {
            name,
            points: nodes.points.clone(),
            values: u,
        }),
    })
}

fn check_common(n_interior: usize, n_boundary: usize) -> Result<()> {
    if n_interior < 5 || n_boundary < 5 {
        return Err(Error::param("stencil", "stencil sizes must be at least 5"));
    }
    Ok(())
}

fn check_positive(name: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::param(name, "sweep is empty"));
    }
    match v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        Some(x) => Err(Error::param(name, format!("values must be positive, got {x}"))),
        None => Ok(()),
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Fixed nodes per wavelength across a wavenumber sweep on the
/// impedance test problem over `(-0.5, 0.5)^2`.
pub fn run_pollution(cfg: &PollutionConfig) -> Result<ExperimentReport> {
    check_common(cfg.n_interior, cfg.n_boundary)?;
    check_positive("k_over_2pi", &cfg.k_over_2pi)?;
    check_positive("ng", &[cfg.ng])?;
    let mut report = ExperimentReport::new(
        "pollution",
        cfg,
        None,
        &["k_over_2pi", "k", "h", "n_nodes", "error", "residual", "cond_estimate", "beta_min", "beta_max", "beta_mean"],
    )?;
    for f in sorted(&cfg.k_over_2pi) {
        let k = TAU * f;
        let inv_h = cfg.ng * f;
        let dump = cfg.dump_fields.then(|| format!("k{f}"));
        let o = solve_impedance(centered_square(), cfg.lattice, inv_h, cfg.solution.field(k)?, cfg.n_interior, cfg.n_boundary, cfg.policy, cfg.condition, dump)?;
        let [b0, b1, b2] = o.beta;
        report.push_row(
            vec![f.into(), k.into(), (1.0 / inv_h).into(), o.n_nodes.into(), o.error.into(), o.residual.into(), o.cond.into(), b0, b1, b2],
            &o.timings,
        )?;
        report.fields.extend(o.field);
    }
    Ok(report)
}

/// Refinement study at fixed wavenumber; fits `log10 error` against
/// `log10 h` when the sweep has at least two points.
pub fn run_convergence(cfg: &ConvergenceConfig) -> Result<ExperimentReport> {
    check_common(cfg.n_interior, cfg.n_boundary)?;
    check_positive("k_over_2pi", &[cfg.k_over_2pi])?;
    check_positive("ng", &cfg.ng)?;
    let mut report = ExperimentReport::new(
        "convergence",
        cfg,
        None,
        &["ng", "h", "n_nodes", "error", "residual", "cond_estimate", "beta_min", "beta_max", "beta_mean"],
    )?;
    let k = TAU * cfg.k_over_2pi;
    let field = cfg.solution.field(k)?;
    let (mut hs, mut es) = (Vec::new(), Vec::new());
    for ng in sorted(&cfg.ng) {
        let inv_h = ng * cfg.k_over_2pi;
        let o = solve_impedance(centered_square(), cfg.lattice, inv_h, field.clone(), cfg.n_interior, cfg.n_boundary, cfg.policy, cfg.condition, None)?;
        // the generator rounds to a whole number of cells
        let h = 1.0 / inv_h.round();
        let [b0, b1, b2] = o.beta;
        report.push_row(
            vec![ng.into(), h.into(), o.n_nodes.into(), o.error.into(), o.residual.into(), o.cond.into(), b0, b1, b2],
            &o.timings,
        )?;
        hs.push(h);
        es.push(o.error);
    }
    report.regression = log_log_fit(&hs, &es);
    Ok(report)
}

/// Plane-wave impedance problem on the unit square, swept over the
/// propagation angle or, in k-sweep mode, over the wavenumber at `kh = 1`.
pub fn run_planewave(cfg: &PlaneWaveConfig) -> Result<ExperimentReport> {
    check_common(cfg.n_interior, cfg.n_boundary)?;
    let runs: Vec<(f64, f64, f64)> = match &cfg.k_sweep {
        Some(ks) => {
            check_positive("k_sweep", ks)?;
            sorted(ks).into_iter().map(|k| (FRAC_PI_4, k, 1.0 / k)).collect()
        }
        None => {
            check_positive("k", &[cfg.k])?;
            check_positive("h", &[cfg.h])?;
            if cfg.thetas.is_empty() || cfg.thetas.iter().any(|t| !t.is_finite()) {
                return Err(Error::param("thetas", "need at least one finite angle"));
            }
            sorted(&cfg.thetas).into_iter().map(|t| (t, cfg.k, cfg.h)).collect()
        }
    };
    let mut report = ExperimentReport::new(
        "planewave",
        cfg,
        None,
        &["theta", "k", "h", "n_nodes", "error", "residual", "cond_estimate", "beta_min", "beta_max", "beta_mean"],
    )?;
    for (i, (theta, k, h)) in runs.into_iter().enumerate() {
        let dump = cfg.dump_fields.then(|| format!("run{i}"));
        let o = solve_impedance(unit_square(), Lattice::Square, 1.0 / h, plane_wave(k, theta)?, cfg.n_interior, cfg.n_boundary, cfg.policy, cfg.condition, dump)?;
        let [b0, b1, b2] = o.beta;
        report.push_row(
            vec![theta.into(), k.into(), h.into(), o.n_nodes.into(), o.error.into(), o.residual.into(), o.cond.into(), b0, b1, b2],
            &o.timings,
        )?;
        report.fields.extend(o.field);
    }
    Ok(report)
}
