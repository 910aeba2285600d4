//! Runs a case through its sweep: one solve per mesh size, or a warm-started
//! chain down a list of epsilon values on one mesh.

use std::sync::Arc;

use crate::analysis::{error_norms, ErrorNorms};
use crate::cases::{ExperimentSpec, Sweep};
use crate::error::{Error, Result};
use crate::mesh::build_structured_mesh;
use crate::solve::{continuation_solve, epsilon_ladder, NewtonConfig, SolveReport};
use crate::space::{FeFunction, FeSpace};

/// One solved point of a sweep.
#[derive(Debug, Clone)]
pub struct RunRow {
    /// `1/n` for mesh-size sweeps, epsilon for epsilon sweeps.
    pub parameter: f64,
    pub n: usize,
    pub epsilon: f64,
    pub dofs: usize,
    /// Errors against the case's exact solution, if it has one.
    pub norms: Option<ErrorNorms>,
    pub report: SolveReport,
}

/// P_k space on the structured `n`-per-axis mesh of the case's dimension.
pub fn build_space(dim: usize, n: usize, degree: usize) -> Result<Arc<FeSpace>> {
    let mesh = Arc::new(build_structured_mesh(dim, n)?);
    Ok(Arc::new(FeSpace::new(mesh, degree)?))
}

/// Solves the case once at mesh size `n` and `epsilon`, by continuation from
/// the convex seed.
pub fn solve_point(
    spec: &ExperimentSpec,
    degree: usize,
    n: usize,
    epsilon: f64,
    config: &NewtonConfig,
) -> Result<(FeFunction, SolveReport)> {
    let space = build_space(spec.dim(), n, degree)?;
    continuation_solve(&space, spec, &spec.params(epsilon)?, config, None)
}

fn row(spec: &ExperimentSpec, parameter: f64, n: usize, epsilon: f64, u: &FeFunction, report: SolveReport) -> Result<RunRow> {
    let norms = match spec.case.exact() {
        Some(exact) => Some(error_norms(exact.as_ref(), u)?),
        None => None,
    };
    Ok(RunRow { parameter, n, epsilon, dofs: u.space().num_dofs(), norms, report })
}

/// Halvings from `from` down to `to`, ending exactly at `to`.
fn ladder_between(from: f64, to: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = from * 0.5;
    while e > to {
        out.push(e);
        e *= 0.5;
    }
    out.push(to);
    out
}

/// Runs the sweep of `spec` at `degree`, handing each row to `on_row` as soon
/// as it is solved. A failure ends the sweep; rows already handed out stand.
pub fn run_sweep(
    spec: &ExperimentSpec,
    degree: usize,
    config: &NewtonConfig,
    mut on_row: impl FnMut(&RunRow),
) -> Result<Vec<RunRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    match spec.sweep {
        Sweep::MeshSize => {
            let [epsilon] = spec.eps_list[..] else {
                return Err(Error::InvalidArgument(format!(
                    "a mesh-size sweep needs exactly one epsilon, got {}",
                    spec.eps_list.len()
                )));
            };
            for &n in &spec.n_list {
                let (u, report) = solve_point(spec, degree, n, epsilon, config)?;
                let r = row(spec, 1.0 / n as f64, n, epsilon, &u, report)?;
                on_row(&r);
                rows.push(r);
            }
        }
        Sweep::Epsilon => {
            let [n] = spec.n_list[..] else {
                return Err(Error::InvalidArgument(format!(
                    "an epsilon sweep needs exactly one mesh size, got {}",
                    spec.n_list.len()
                )));
            };
            if spec.eps_list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::InvalidArgument("epsilon values must be strictly decreasing".into()));
            }
            let space = build_space(spec.dim(), n, degree)?;
            let mut u: Option<FeFunction> = None;
            let mut prev: Option<f64> = None;
            for &epsilon in &spec.eps_list {
                let schedule = match prev {
                    Some(p) => ladder_between(p, epsilon),
                    None => epsilon_ladder(epsilon)?,
                };
                let cfg = NewtonConfig { continuation_schedule: Some(schedule), ..config.clone() };
                let (next, report) = continuation_solve(&space, spec, &spec.params(epsilon)?, &cfg, u.take())?;
                let r = row(spec, epsilon, n, epsilon, &next, report)?;
                on_row(&r);
                rows.push(r);
                u = Some(next);
                prev = Some(epsilon);
            }
        }
    }
    Ok(rows)
}
