//! Merges flags, an optional run file and case defaults, in that priority.

use maviscid::cases::{builtin_case, parse_h_list, ExperimentSpec, Sweep};

use crate::{CliError, RunArgs};

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

pub fn parse_eps_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad epsilon `{}`", t.trim()))))
        .collect()
}

fn read_config(a: &RunArgs) -> Result<Option<ExperimentSpec>, CliError> {
    let Some(path) = &a.config else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(Some(ExperimentSpec::from_config(&text)?))
}

/// Experiment spec for `convergence` and `solve`.
pub fn experiment(a: &RunArgs) -> Result<ExperimentSpec, CliError> {
    let mut spec = match (read_config(a)?, &a.case) {
        (Some(s), Some(id)) if s.id() != id => {
            return Err(usage(format!("--case {id} conflicts with case {} of the config file", s.id())))
        }
        (Some(s), _) => s,
        (None, Some(id)) => builtin_case(id)?,
        (None, None) => return Err(usage("one of --case or --config is required")),
    };
    if let Some(d) = a.dim {
        if d != spec.dim() {
            return Err(usage(format!("case {} is {}D, not {d}D", spec.id(), spec.dim())));
        }
    }
    if let Some(k) = &a.degree {
        spec.degrees = k.clone();
    }
    if let Some(h) = &a.h_list {
        spec.n_list = parse_h_list(h).map_err(usage)?;
    }
    if let Some(e) = &a.eps_list {
        spec.eps_list = parse_eps_list(e)?;
    }
    if let Some(s) = a.sigma {
        spec.sigma = s;
    }
    if let Some(m) = &a.weight_mode {
        spec.weight_mode = m.clone();
    }
    // a list with several entries is the one being swept
    match (spec.n_list.len(), spec.eps_list.len()) {
        (1, e) if e > 1 => spec.sweep = Sweep::Epsilon,
        (n, 1) if n > 1 => spec.sweep = Sweep::MeshSize,
        _ => {}
    }
    spec.validate()?;
    Ok(spec)
}

/// Parameters of `verify`.
#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub dim: usize,
    pub degree: usize,
    pub levels: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub sigma: f64,
    pub weight_mode: String,
}

pub fn verify(a: &RunArgs) -> Result<VerifySettings, CliError> {
    let base = match (read_config(a)?, &a.case) {
        (Some(s), _) => Some(s),
        (None, Some(id)) => Some(builtin_case(id)?),
        (None, None) => None,
    };
    let dim = a.dim.or(base.as_ref().map(|s| s.dim())).unwrap_or(2);
    if dim != 2 && dim != 3 {
        return Err(usage(format!("dimension must be 2 or 3, got {dim}")));
    }
    let degree = match &a.degree {
        Some(k) if k.len() == 1 => k[0],
        Some(_) => return Err(usage("verify takes a single degree")),
        None => 2,
    };
    if degree != 2 && degree != 3 {
        return Err(usage(format!("degree must be 2 or 3, got {degree}")));
    }
    let levels = match &a.h_list {
        Some(h) => parse_h_list(h).map_err(usage)?,
        None if dim == 3 => vec![2, 4],
        None => vec![4, 8, 16],
    };
    let eps_list = match &a.eps_list {
        Some(e) => parse_eps_list(e)?,
        None => vec![0.1, 0.01],
    };
    if levels.is_empty() || eps_list.is_empty() {
        return Err(usage("verify needs at least one level and one epsilon"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(usage("epsilon values must be positive"));
    }
    let sigma = a.sigma.unwrap_or(1.0);
    if !(sigma >= 0.0) {
        return Err(usage("sigma must be non-negative"));
    }
    Ok(VerifySettings {
        dim,
        degree,
        levels,
        eps_list,
        sigma,
        weight_mode: a.weight_mode.clone().unwrap_or_else(|| "full".into()),
    })
}
