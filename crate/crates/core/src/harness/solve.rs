use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{beta_cells, centered_square, max_error, seconds, ExperimentReport, FieldDump};
use crate::analytic::{plane_wave, u1, u2, ReferenceField};
use crate::error::{Error, Result};
use crate::geometry::{build_stencils, Point, Rect};
use crate::localreg::RegularizationPolicy;
use crate::medium::SpeedModel;
use crate::operators::BoundaryKind;
use crate::system::{assemble, estimate_condition, solve_sparse, GridSpec, ProblemSpec, Source};

/// A source whose width defaults to twice the local node spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub location: Point,
    pub amplitude: Complex64,
    pub sigma: Option<f64>,
}

/// Closed-form solution supplying impedance data and the error reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceChoice {
    U1,
    U2,
    PlaneWave { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub domain: Rect,
    pub omega: f64,
    pub speed: SpeedModel,
    pub sources: Vec<SourceConfig>,
    pub bc: BoundaryKind,
    pub reference: Option<ReferenceChoice>,
    pub grid: GridSpec,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub policy: RegularizationPolicy,
    pub condition: bool,
    pub dump_fields: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            domain: centered_square(),
            omega: TAU * 10.0,
            speed: SpeedModel::constant(1.0),
            sources: Vec::new(),
            bc: BoundaryKind::Impedance,
            reference: Some(ReferenceChoice::U1),
            grid: GridSpec::Square { inv_h: 60.0 },
            n_interior: 13,
            n_boundary: 15,
            policy: RegularizationPolicy::ratio(6, 0),
            condition: true,
            dump_fields: true,
        }
    }
}

impl SolveConfig {
    fn spacing_at(&self, p: Point) -> f64 {
        match self.grid {
            GridSpec::Square { inv_h } | GridSpec::Hex { inv_h } => 1.0 / inv_h.round().max(1.0),
            GridSpec::Adaptive { ng, .. } => TAU * self.speed.speed(p) / (self.omega * ng),
        }
    }

    pub fn to_problem(&self) -> Result<ProblemSpec> {
        let reference = match self.reference {
            None => None,
            Some(r) => {
                let SpeedModel::Constant { c } = self.speed else {
                    return Err(Error::param("reference", "closed-form references need a constant speed"));
                };
                let k = self.omega / c;
                Some(match r {
                    ReferenceChoice::U1 => u1(k)?,
                    ReferenceChoice::U2 => u2(k)?,
                    ReferenceChoice::PlaneWave { theta } => plane_wave(k, theta)?,
                })
            }
        };
        let sources = self
            .sources
            .iter()
            .map(|s| Source {
                location: s.location,
                amplitude: s.amplitude,
                sigma: s.sigma.unwrap_or_else(|| 2.0 * self.spacing_at(s.location)),
            })
            .collect();
        let p = ProblemSpec {
            domain: self.domain,
            omega: self.omega,
            speed: self.speed.clone(),
            sources,
            bc_kind: self.bc,
            boundary_data: reference,
            grid: self.grid,
            n_interior: self.n_interior,
            n_boundary: self.n_boundary,
            policy: self.policy,
        };
        p.validate()?;
        Ok(p)
    }
}

/// One assembly and solve; the error column is filled when a closed-form
/// reference is configured.
pub fn run_solve(cfg: &SolveConfig) -> Result<ExperimentReport> {
    let problem = cfg.to_problem()?;
    let seed = match cfg.grid {
        GridSpec::Adaptive { seed, .. } => Some(seed),
        _ => None,
    };
    let mut report = ExperimentReport::new(
        "solve",
        cfg,
        seed,
        &["n_nodes", "residual", "cond_estimate", "beta_min", "beta_max", "beta_mean", "error"],
    )?;
    let t = Instant::now();
    let nodes = problem.generate_nodes()?;
    let stencils = build_stencils(&nodes, cfg.n_interior, cfg.n_boundary)?;
    let mut sys = assemble(&nodes, &stencils, &problem)?;
    let t_asm = seconds(t);
    let t = Instant::now();
    let rep = solve_sparse(&mut sys)?;
    let t_solve = seconds(t);
    let cond = if cfg.condition { Some(estimate_condition(&sys)?) } else { None };
    let u = sys.solution.take().unwrap_or_default();
    let error = match &problem.boundary_data {
        Some(f) => Some(max_error(&nodes.points, &u, |p| ReferenceField::value(f, p))?),
        None => None,
    };
    let [b0, b1, b2] = beta_cells(&sys);
    report.push_row(
        vec![nodes.len().into(), rep.residual.into(), cond.into(), b0, b1, b2, error.into()],
        &[("assembly", t_asm), ("solve", t_solve)],
    )?;
    if cfg.dump_fields {
        report.fields.push(FieldDump {
            name: "field".into(),
            points: nodes.points.clone(),
            values: u,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_solve_matches_reference() {
        let cfg = SolveConfig {
            omega: TAU * 3.0,
            grid: GridSpec::Square { inv_h: 24.0 },
            ..Default::default()
        };
        let r = run_solve(&cfg).unwrap();
        assert!(r.value(0, "error").unwrap() < 1e-2);
        assert_eq!(r.fields.len(), 1);
    }

    #[test]
    fn reference_needs_constant_speed() {
        let cfg = SolveConfig {
            speed: SpeedModel::lens(),
            ..Default::default()
        };
        assert!(run_solve(&cfg).is_err());
    }

    #[test]
    fn source_width_defaults_to_two_spacings() {
        let cfg = SolveConfig {
            reference: None,
            sources: vec![SourceConfig {
                location: Point::new(0.0, 0.0),
                amplitude: Complex64::new(1.0, 0.0),
                sigma: None,
            }],
            ..Default::default()
        };
        let p = cfg.to_problem().unwrap();
        assert_eq!(p.sources[0].sigma, 2.0 / 60.0);
    }
}
