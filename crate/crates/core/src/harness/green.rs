use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{mean_spacing, seconds, unit_square, zero_crossings, ExperimentReport, FieldDump};
use crate::analytic::{green_function, SmoothedGreen};
use crate::error::{Error, Result};
use crate::geometry::{build_stencils, NodeSet, Point};
use crate::localreg::RegularizationPolicy;
use crate::medium::SpeedModel;
use crate::operators::BoundaryKind;
use crate::system::{assemble, solve_sparse, GridSpec, ProblemSpec, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenConfig {
    pub k_over_2pi: f64,
    pub ng: f64,
    pub sources: Vec<Point>,
    pub amplitude: Complex64,
    pub bc: BoundaryKind,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub policy: RegularizationPolicy,
    /// Gaussian width in units of `h`.
    pub sigma_factor: f64,
    /// Radius of the disk around the source left out of the comparison, in units of `h`.
    pub exclusion_factor: f64,
    pub dump_fields: bool,
}

impl Default for GreenConfig {
    fn default() -> Self {
        Self {
            k_over_2pi: 20.0,
            ng: 6.0,
            sources: vec![Point::new(0.5, 0.5)],
            amplitude: Complex64::new(1.0, 0.0),
            bc: BoundaryKind::Abc3,
            n_interior: 9,
            n_boundary: 19,
            policy: RegularizationPolicy::ratio(4, 0),
            sigma_factor: 2.0,
            exclusion_factor: 5.0,
            dump_fields: false,
        }
    }
}

impl GreenConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_over_2pi", self.k_over_2pi),
            ("ng", self.ng),
            ("sigma_factor", self.sigma_factor),
            ("exclusion_factor", self.exclusion_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if self.sources.is_empty() {
            return Err(Error::param("sources", "need at least one source location"));
        }
        if self.n_interior < 5 || self.n_boundary < 5 {
            return Err(Error::param("stencil", "stencil sizes must be at least 5"));
        }
        Ok(())
    }

    fn inv_h(&self) -> f64 {
        (self.ng * self.k_over_2pi).round()
    }
}

/// Solves the truncated free-space problem for one source on the unit
/// square and returns the nodes, the computed field and the solve residual.
pub fn green_field(cfg: &GreenConfig, source: Point) -> Result<(NodeSet, Vec<Complex64>, f64)> {
    cfg.validate()?;
    let k = TAU * cfg.k_over_2pi;
    let inv_h = cfg.inv_h();
    let problem = ProblemSpec {
        domain: unit_square(),
        omega: k,
        speed: SpeedModel::constant(1.0),
        sources: vec![Source {
            location: source,
            amplitude: cfg.amplitude,
            sigma: cfg.sigma_factor / inv_h,
        }],
        bc_kind: cfg.bc,
        boundary_data: None,
        grid: GridSpec::Square { inv_h },
        n_interior: cfg.n_interior,
        n_boundary: cfg.n_boundary,
        policy: cfg.policy,
    };
    let nodes = problem.generate_nodes()?;
    let stencils = build_stencils(&nodes, cfg.n_interior, cfg.n_boundary)?;
    let mut sys = assemble(&nodes, &stencils, &problem)?;
    let rep = solve_sparse(&mut sys)?;
    let u = sys.solution.take().unwrap_or_default();
    Ok((nodes, u, rep.residual))
}

/// Max-norm error of `values` against `exact`, relative to `max |exact|`.
fn relative(values: &[Complex64], exact: &[Complex64]) -> f64 {
    let e = values.iter().zip(exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let n = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
    e / n
}

/// Compares the computed field with `(i/4) H0(k r)` away from each source.
///
/// The boundary conditions select the `exp(-i k r)` branch, so the field is
/// conjugated before comparison. Besides the direct error the report lists
/// the error against the exact response to the smoothed source, the
/// residual error after the best complex rescaling, and the spacing of the
/// zero crossings of the real part along the bottom edge.
pub fn run_green(cfg: &GreenConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::new(
        "green",
        cfg,
        None,
        &[
            "source_x",
            "source_y",
            "n_nodes",
            "h",
            "error",
            "smoothed_error",
            "shape_error",
            "fit_scale_re",
            "fit_scale_im",
            "trace_error",
            "trace_spacing",
            "exact_trace_spacing",
            "spacing_error",
            "residual",
        ],
    )?;
    let k = TAU * cfg.k_over_2pi;
    let h = 1.0 / cfg.inv_h();
    for (i, &src) in cfg.sources.iter().enumerate() {
        let t = Instant::now();
        let (nodes, u, residual) = green_field(cfg, src)?;
        let t_solve = seconds(t);
        let g = green_function(k, src)?;
        let smooth = SmoothedGreen::new(k, src, cfg.sigma_factor * h)?;
        let keep: Vec<usize> = (0..nodes.len()).filter(|&j| nodes.points[j].dist(src) >= cfg.exclusion_factor * h).collect();
        if keep.is_empty() {
            return Err(Error::param("exclusion_factor", "excludes every node"));
        }
        let uc: Vec<Complex64> = keep.iter().map(|&j| u[j].conj()).collect();
        let gv = keep.iter().map(|&j| g.value(nodes.points[j])).collect::<Result<Vec<_>>>()?;
        let sv = keep.iter().map(|&j| smooth.value(nodes.points[j])).collect::<Result<Vec<_>>>()?;
        let error = relative(&uc, &gv);
        let smoothed_error = relative(&uc, &sv);
        let den: f64 = uc.iter().map(|v| v.norm_sqr()).sum();
        let scale = if den > 0.0 {
            uc.iter().zip(&gv).map(|(a, b)| a.conj() * b).sum::<Complex64>() / den
        } else {
            Complex64::new(0.0, 0.0)
        };
        let scaled: Vec<Complex64> = uc.iter().map(|v| v * scale).collect();
        let shape_error = relative(&scaled, &gv);

        let y0 = nodes.domain.y_min;
        let mut edge: Vec<usize> = keep.iter().copied().filter(|&j| nodes.points[j].y == y0).collect();
        edge.sort_by(|&a, &b| nodes.points[a].x.total_cmp(&nodes.points[b].x));
        let trace_u: Vec<Complex64> = edge.iter().map(|&j| u[j].conj()).collect();
        let trace_g = edge.iter().map(|&j| g.value(nodes.points[j])).collect::<Result<Vec<_>>>()?;
        let trace_error = relative(&trace_u, &trace_g);
        let xs = edge.iter().map(|&j| nodes.points[j].x);
        let su = mean_spacing(&zero_crossings(&xs.clone().zip(trace_u.iter().map(|v| v.re)).collect::<Vec<_>>()));
        let sg = mean_spacing(&zero_crossings(&xs.zip(trace_g.iter().map(|v| v.re)).collect::<Vec<_>>()));
        let spacing_error = match (su, sg) {
            (Some(a), Some(b)) => Some((a / b - 1.0).abs()),
            _ => None,
        };
        report.push_row(
            vec![
                src.x.into(),
                src.y.into(),
                nodes.len().into(),
                h.into(),
                error.into(),
                smoothed_error.into(),
                shape_error.into(),
                scale.re.into(),
                scale.im.into(),
                trace_error.into(),
                su.into(),
                sg.into(),
                spacing_error.into(),
                residual.into(),
            ],
            &[("assembly_and_solve", t_solve)],
        )?;
        if cfg.dump_fields {
            report.fields.push(FieldDump {
                name: format!("source{i}"),
                points: nodes.points.clone(),
                values: u,
            });
        }
    }
    Ok(report)
}
