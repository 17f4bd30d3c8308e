use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{beta_cells, centered_square, interpolate, seconds, zero_crossings, ExperimentReport, FieldDump};
use crate::error::{Error, Result};
use crate::geometry::{build_stencils, Point, PointIndex, Rect};
use crate::localreg::{KappaMode, RegularizationPolicy};
use crate::medium::SpeedModel;
use crate::operators::BoundaryKind;
use crate::system::{assemble, estimate_condition, solve_sparse, GridSpec, ProblemSpec, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneousConfig {
    pub domain: Rect,
    pub speed: SpeedModel,
    pub omega_over_2pi: Vec<f64>,
    pub ng: f64,
    pub seed: u64,
    pub source: Point,
    pub bc: BoundaryKind,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub policy: RegularizationPolicy,
    /// Gaussian width in units of the local node spacing at the source.
    pub sigma_factor: f64,
    /// Height of the horizontal line along which local wavelengths are
    /// measured; defaults to the source height, where waves run along it.
    pub scanline_y: Option<f64>,
    pub condition: bool,
    pub dump_fields: bool,
}

impl Default for HeterogeneousConfig {
    fn default() -> Self {
        Self {
            domain: centered_square(),
            speed: SpeedModel::lens(),
            omega_over_2pi: vec![2.5],
            ng: 13.5,
            seed: 0,
            source: Point::new(-0.2, -0.3),
            bc: BoundaryKind::Abc2,
            n_interior: 13,
            n_boundary: 15,
            policy: RegularizationPolicy {
                mode: KappaMode::Heterogeneous,
                itmdi_iterations: 0,
            },
            sigma_factor: 2.0,
            scanline_y: None,
            condition: true,
            dump_fields: false,
        }
    }
}

/// Mean local wavelengths `(high c, low c)` along `y = cfg.scanline_y`.
/// Each pair of consecutive zero crossings of the real part gives a
/// wavelength estimate of twice their gap, assigned to the high- or low-speed
/// class by the speed at the midpoint relative to the mid-range of the speed
/// along the line.
fn scanline_wavelengths(cfg: &HeterogeneousConfig, omega: f64, points: &[Point], u: &[Complex64], h: f64) -> Result<(Option<f64>, Option<f64>)> {
    let d = cfg.domain;
    let y = cfg.scanline_y.unwrap_or(cfg.source.y);
    if !(y >= d.y_min && y <= d.y_max) {
        return Err(Error::param("scanline_y", "outside the domain"));
    }
    let index = PointIndex::new(points);
    let m = ((d.width() / (0.25 * h)).ceil() as usize).max(8);
    let mut samples = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let x = d.x_min + d.width() * i as f64 / m as f64;
        let p = Point::new(x, y);
        let v = interpolate(&index, points, u, p, cfg.n_interior, omega / cfg.speed.speed(p), &cfg.policy)?;
        samples.push((x, v.re));
    }
    let cs: Vec<f64> = samples.iter().map(|(x, _)| cfg.speed.speed(Point::new(*x, y))).collect();
    let (cmin, cmax) = cs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &c| (a.min(c), b.max(c)));
    let mid = 0.5 * (cmin + cmax);
    let z = zero_crossings(&samples);
    let (mut hi, mut lo) = (Vec::new(), Vec::new());
    for w in z.windows(2) {
        let lambda = 2.0 * (w[1] - w[0]);
        if cfg.speed.speed(Point::new(0.5 * (w[0] + w[1]), y)) > mid {
            hi.push(lambda);
        } else {
            lo.push(lambda);
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Ok((mean(&hi), mean(&lo)))
}

/// Variable-speed solves on wavelength-adaptive nodes, one row per frequency.
pub fn run_heterogeneous(cfg: &HeterogeneousConfig) -> Result<ExperimentReport> {
    cfg.domain.validate()?;
    cfg.speed.validate(&cfg.domain)?;
    if cfg.omega_over_2pi.is_empty() || cfg.omega_over_2pi.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::param("omega", "frequencies must be positive"));
    }
    if !(cfg.sigma_factor > 0.0 && cfg.sigma_factor.is_finite()) {
        return Err(Error::param("sigma_factor", "must be positive"));
    }
    if cfg.n_interior < 5 || cfg.n_boundary < 5 {
        return Err(Error::param("stencil", "stencil sizes must be at least 5"));
    }
    let mut report = ExperimentReport::new(
        "heterogeneous",
        cfg,
        Some(cfg.seed),
        &[
            "omega_over_2pi",
            "n_nodes",
            "cond_estimate",
            "residual",
            "beta_min",
            "beta_max",
            "beta_mean",
            "wavelength_high_c",
            "wavelength_low_c",
        ],
    )?;
    let mut freqs = cfg.omega_over_2pi.clone();
    freqs.sort_by(f64::total_cmp);
    for f in freqs {
        let omega = TAU * f;
        let h_src = TAU * cfg.speed.speed(cfg.source) / (omega * cfg.ng);
        let problem = ProblemSpec {
            domain: cfg.domain,
            omega,
            speed: cfg.speed.clone(),
            sources: vec![Source {
                location: cfg.source,
                amplitude: Complex64::new(1.0, 0.0),
                sigma: cfg.sigma_factor * h_src,
            }],
            bc_kind: cfg.bc,
            boundary_data: None,
            grid: GridSpec::Adaptive { ng: cfg.ng, seed: cfg.seed },
            n_interior: cfg.n_interior,
            n_boundary: cfg.n_boundary,
            policy: cfg.policy,
        };
        problem.validate()?;
        let t = Instant::now();
        let nodes = problem.generate_nodes()?;
        let t_nodes = seconds(t);
        let t = Instant::now();
        let stencils = build_stencils(&nodes, cfg.n_interior, cfg.n_boundary)?;
        let mut sys = assemble(&nodes, &stencils, &problem)?;
        let t_asm = seconds(t);
        let t = Instant::now();
        let rep = solve_sparse(&mut sys)?;
        let t_solve = seconds(t);
        let cond = if cfg.condition { Some(estimate_condition(&sys)?) } else { None };
        let u = sys.solution.take().unwrap_or_default();
        let (hi, lo) = scanline_wavelengths(cfg, omega, &nodes.points, &u, nodes.h)?;
        let [b0, b1, b2] = beta_cells(&sys);
        report.push_row(
            vec![f.into(), nodes.len().into(), cond.into(), rep.residual.into(), b0, b1, b2, hi.into(), lo.into()],
            &[("nodes", t_nodes), ("assembly", t_asm), ("solve", t_solve)],
        )?;
        if cfg.dump_fields {
            report.fields.push(FieldDump {
                name: format!("f{f}"),
                points: nodes.points.clone(),
                values: u,
            });
        }
    }
    Ok(report)
}
