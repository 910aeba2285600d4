//! The six model experiments and user-defined cases.
//!
//! Cases are trait objects held in a [`CaseRegistry`] keyed by id. An
//! [`ExperimentSpec`] pairs a case with run parameters and round-trips through
//! a plain `key = value` text format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{BoundaryData, PenaltyParams};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3, ZERO3, ZERO33};
use crate::solve::ProblemData;
use crate::space::{AnalyticFunction, ScalarField};

/// Which parameter a convergence study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    MeshSize,
    Epsilon,
}

/// An exact solution with the fourth-order information needed to check
/// manufactured data.
pub trait ExactSolution: AnalyticFunction {
    fn bilaplacian(&self, x: &[f64]) -> f64;
}

/// Problem data of one experiment family.
pub trait Case: Send + Sync {
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn description(&self) -> &str;
    fn source(&self, epsilon: f64) -> Arc<dyn ScalarField>;
    fn dirichlet(&self) -> Arc<dyn ScalarField>;
    fn laplacian_trace(&self, epsilon: f64) -> Arc<dyn ScalarField>;
    /// Reference solution errors are measured against, if any.
    fn exact(&self) -> Option<Arc<dyn ExactSolution>> {
        None
    }
    /// True if the exact solution solves the regularized problem itself;
    /// false if it solves the limit problem `det D²u = f`.
    fn regularized_exact(&self) -> bool {
        false
    }
    fn defaults(&self) -> RunDefaults;
}

/// Penalty constant of the built-in cases (with `weight_mode = plain`): the
/// smallest value from {1, 3, 10, 30, 100} keeping the scheme coercive on the
/// structured meshes of each dimension.
pub fn default_sigma(dim: usize) -> f64 {
    if dim == 3 {
        30.0
    } else {
        10.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunDefaults {
    pub degrees: Vec<usize>,
    /// Cells per axis.
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub sigma: f64,
    pub weight_mode: String,
    pub sweep: Sweep,
}

fn constant(c: f64) -> Arc<dyn ScalarField> {
    Arc::new(move |_: &[f64]| c)
}

fn r2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `exp(|x|²/2)`, a convex solution of the limit equation.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub dim: usize,
}

impl AnalyticFunction for Gaussian {
    fn value(&self, x: &[f64]) -> f64 {
        (0.5 * r2(&x[..self.dim])).exp()
    }

    fn gradient(&self, x: &[f64]) -> Vec3 {
        let u = self.value(x);
        let mut g = ZERO3;
        for i in 0..self.dim {
            g[i] = x[i] * u;
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> Mat3 {
        let u = self.value(x);
        let mut h = ZERO33;
        for i in 0..self.dim {
            for j in 0..self.dim {
                h[i][j] = u * (x[i] * x[j] + if i == j { 1.0 } else { 0.0 });
            }
        }
        h
    }
}

impl ExactSolution for Gaussian {
    fn bilaplacian(&self, x: &[f64]) -> f64 {
        // lap u = (d + r²) u, lap(r² u) = (2d + 4r² + r²(d + r²)) u
        let d = self.dim as f64;
        let s = r2(&x[..self.dim]);
        self.value(x) * (d * (d + s) + 2.0 * d + 4.0 * s + s * (d + s))
    }
}

/// `sum_i c_i x_i^{p_i} / 2` with `p_i` in {2, 4}.
#[derive(Debug, Clone, Copy)]
pub struct SeparableQuartic {
    pub dim: usize,
    pub powers: [u32; 3],
}

impl AnalyticFunction for SeparableQuartic {
    fn value(&self, x: &[f64]) -> f64 {
        (0..self.dim).map(|i| 0.5 * x[i].powi(self.powers[i] as i32)).sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec3 {
        let mut g = ZERO3;
        for i in 0..self.dim {
            let p = self.powers[i] as i32;
            g[i] = 0.5 * p as f64 * x[i].powi(p - 1);
        }
        g
    }

    fn hessian(&self, x: &[f64]) -> Mat3 {
        let mut h = ZERO33;
        for i in 0..self.dim {
            let p = self.powers[i] as i32;
            h[i][i] = 0.5 * (p * (p - 1)) as f64 * x[i].powi(p - 2);
        }
        h
    }
}

impl ExactSolution for SeparableQuartic {
    fn bilaplacian(&self, _: &[f64]) -> f64 {
        (0..self.dim).map(|i| if self.powers[i] == 4 { 12.0 } else { 0.0 }).sum()
    }
}

/// Limit problem with the smooth solution `exp(|x|²/2)`; the source is
/// `det D²u = (1 + |x|²) exp(d |x|²/2)`.
pub struct GaussianCase {
    id: &'static str,
    dim: usize,
}

impl Case for GaussianCase {
    fn id(&self) -> &str {
        self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn description(&self) -> &str {
        "smooth convex solution exp(|x|^2/2) of the limit equation, epsilon sweep"
    }

    fn source(&self, _: f64) -> Arc<dyn ScalarField> {
        let d = self.dim as f64;
        Arc::new(move |x: &[f64]| {
            let s = r2(x);
            (1.0 + s) * (0.5 * d * s).exp()
        })
    }

    fn dirichlet(&self) -> Arc<dyn ScalarField> {
        let u = Gaussian { dim: self.dim };
        Arc::new(move |x: &[f64]| u.value(x))
    }

    fn laplacian_trace(&self, epsilon: f64) -> Arc<dyn ScalarField> {
        constant(epsilon)
    }

    fn exact(&self) -> Option<Arc<dyn ExactSolution>> {
        Some(Arc::new(Gaussian { dim: self.dim }))
    }

    fn defaults(&self) -> RunDefaults {
        RunDefaults {
            degrees: vec![2],
            n_list: vec![if self.dim == 2 { 64 } else { 8 }],
            eps_list: vec![0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.005],
            sigma: default_sigma(self.dim),
            weight_mode: "plain".into(),
            sweep: Sweep::Epsilon,
        }
    }
}

/// Regularized problem with a separable polynomial solution; all data are
/// derived from it.
pub struct QuarticCase {
    id: &'static str,
    u: SeparableQuartic,
}

impl Case for QuarticCase {
    fn id(&self) -> &str {
        self.id
    }

    fn dim(&self) -> usize {
        self.u.dim
    }

    fn description(&self) -> &str {
        "manufactured polynomial solution of the regularized equation, mesh refinement"
    }

    fn source(&self, epsilon: f64) -> Arc<dyn ScalarField> {
        let u = self.u;
        Arc::new(move |x: &[f64]| -epsilon * u.bilaplacian(x) + linalg::determinant(&u.hessian(x), u.dim))
    }

    fn dirichlet(&self) -> Arc<dyn ScalarField> {
        let u = self.u;
        Arc::new(move |x: &[f64]| u.value(x))
    }

    fn laplacian_trace(&self, _: f64) -> Arc<dyn ScalarField> {
        let u = self.u;
        Arc::new(move |x: &[f64]| linalg::trace(&u.hessian(x)))
    }

    fn exact(&self) -> Option<Arc<dyn ExactSolution>> {
        Some(Arc::new(self.u))
    }

    fn regularized_exact(&self) -> bool {
        true
    }

    fn defaults(&self) -> RunDefaults {
        RunDefaults {
            degrees: vec![2, 3],
            n_list: if self.u.dim == 2 { vec![8, 16, 32, 64] } else { vec![3, 6, 12] },
            eps_list: vec![0.01],
            sigma: default_sigma(self.u.dim),
            weight_mode: "plain".into(),
            sweep: Sweep::MeshSize,
        }
    }
}

/// `f = 1`, `g = 0`: a viscosity solution without classical regularity.
pub struct UnitSourceCase {
    id: &'static str,
    dim: usize,
}

impl Case for UnitSourceCase {
    fn id(&self) -> &str {
        self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn description(&self) -> &str {
        "f = 1, g = 0 on the unit box; no classical solution"
    }

    fn source(&self, _: f64) -> Arc<dyn ScalarField> {
        constant(1.0)
    }

    fn dirichlet(&self) -> Arc<dyn ScalarField> {
        constant(0.0)
    }

    fn laplacian_trace(&self, epsilon: f64) -> Arc<dyn ScalarField> {
        constant(epsilon)
    }

    fn defaults(&self) -> RunDefaults {
        RunDefaults {
            degrees: vec![2],
            n_list: vec![if self.dim == 2 { 64 } else { 12 }],
            eps_list: vec![0.005],
            sigma: default_sigma(self.dim),
            weight_mode: "plain".into(),
            sweep: Sweep::MeshSize,
        }
    }
}

/// Case defined by expressions in `x`, `y`, `z` and `eps`.
pub struct ExpressionCase {
    id: String,
    dim: usize,
    f: String,
    g: String,
    psi: String,
    defaults: RunDefaults,
}

thread_local! {
    static BUILTIN_FUNCTIONS: meval::Context<'static> = meval::Context::new();
}

/// A parsed expression in `x`, `y`, `z` and `eps`.
struct ExpressionField {
    expr: meval::Expr,
    epsilon: f64,
}

impl ExpressionField {
    fn eval(&self, x: &[f64]) -> std::result::Result<f64, meval::Error> {
        let z = if x.len() > 2 { x[2] } else { 0.0 };
        let vars = [("x", x[0]), ("y", x[1]), ("z", z), ("eps", self.epsilon)];
        BUILTIN_FUNCTIONS.with(|b| self.expr.eval_with_context((vars, b)))
    }
}

impl ScalarField for ExpressionField {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }
}

/// Compiles an expression in `x`, `y`, `z` and `eps`.
pub fn compile_expression(text: &str, epsilon: f64) -> Result<Arc<dyn ScalarField>> {
    let err = |e: &dyn std::fmt::Display| Error::Expression { expr: text.to_string(), message: e.to_string() };
    let expr = meval::Expr::from_str(text).map_err(|e| err(&e))?;
    let field = ExpressionField { expr, epsilon };
    field.eval(&[0.5, 0.5, 0.5]).map_err(|e| err(&e))?;
    Ok(Arc::new(field))
}

impl ExpressionCase {
    pub fn new(id: &str, dim: usize, f: &str, g: &str, psi: &str, defaults: RunDefaults) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("dimension must be 2 or 3, got {dim}")));
        }
        for e in [f, g, psi] {
            compile_expression(e, 0.1)?;
        }
        Ok(ExpressionCase { id: id.into(), dim, f: f.into(), g: g.into(), psi: psi.into(), defaults })
    }

    fn compile(&self, text: &str, eps: f64) -> Arc<dyn ScalarField> {
        compile_expression(text, eps).expect("validated at construction")
    }
}

impl Case for ExpressionCase {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn description(&self) -> &str {
        "user-defined case"
    }

    fn source(&self, epsilon: f64) -> Arc<dyn ScalarField> {
        self.compile(&self.f, epsilon)
    }

    fn dirichlet(&self) -> Arc<dyn ScalarField> {
        self.compile(&self.g, 0.0)
    }

    fn laplacian_trace(&self, epsilon: f64) -> Arc<dyn ScalarField> {
        self.compile(&self.psi, epsilon)
    }

    fn defaults(&self) -> RunDefaults {
        self.defaults.clone()
    }
}

/// Cases by id.
#[derive(Clone, Default)]
pub struct CaseRegistry {
    entries: BTreeMap<String, Arc<dyn Case>>,
}

impl CaseRegistry {
    pub fn with_builtins() -> Self {
        let mut r = CaseRegistry::default();
        r.register(Arc::new(GaussianCase { id: "I", dim: 2 }));
        r.register(Arc::new(QuarticCase { id: "II", u: SeparableQuartic { dim: 2, powers: [4, 4, 0] } }));
        r.register(Arc::new(UnitSourceCase { id: "III", dim: 2 }));
        r.register(Arc::new(GaussianCase { id: "IV", dim: 3 }));
        r.register(Arc::new(QuarticCase { id: "V", u: SeparableQuartic { dim: 3, powers: [4, 2, 4] } }));
        r.register(Arc::new(UnitSourceCase { id: "VI", dim: 3 }));
        r
    }

    pub fn register(&mut self, case: Arc<dyn Case>) {
        self.entries.insert(case.id().to_string(), case);
    }

    pub fn get(&self, id: &str) -> Result<Arc<dyn Case>> {
        self.entries.get(id).cloned().ok_or_else(|| Error::Unknown { kind: "case", name: id.to_string() })
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.keys().map(|s| s.as_str()).collect()
    }
}

fn builtins() -> &'static CaseRegistry {
    static REG: OnceLock<CaseRegistry> = OnceLock::new();
    REG.get_or_init(CaseRegistry::with_builtins)
}

/// A case plus the parameters of a run.
#[derive(Clone)]
pub struct ExperimentSpec {
    pub case: Arc<dyn Case>,
    pub degrees: Vec<usize>,
    pub n_list: Vec<usize>,
    pub eps_list: Vec<f64>,
    pub sigma: f64,
    pub weight_mode: String,
    pub sweep: Sweep,
    /// Expressions backing a user-defined case, kept for serialization.
    expressions: Option<[String; 3]>,
}

impl std::fmt::Debug for ExperimentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_config())
    }
}

pub fn builtin_case(id: &str) -> Result<ExperimentSpec> {
    Ok(ExperimentSpec::from_case(builtins().get(id)?))
}

impl ExperimentSpec {
    pub fn from_case(case: Arc<dyn Case>) -> Self {
        let d = case.defaults();
        ExperimentSpec {
            case,
            degrees: d.degrees,
            n_list: d.n_list,
            eps_list: d.eps_list,
            sigma: d.sigma,
            weight_mode: d.weight_mode,
            sweep: d.sweep,
            expressions: None,
        }
    }

    pub fn id(&self) -> &str {
        self.case.id()
    }

    pub fn dim(&self) -> usize {
        self.case.dim()
    }

    pub fn params(&self, epsilon: f64) -> Result<PenaltyParams> {
        PenaltyParams::new(self.sigma, epsilon, &self.weight_mode)
    }

    /// Checks `f`, `g` and `psi` against the exact solution at 20 random
    /// interior and 20 random boundary points. Returns the largest
    /// discrepancy; cases without an exact solution return 0.
    pub fn consistency_check(&self, epsilon: f64, seed: u64) -> Result<f64> {
        let Some(u) = self.case.exact() else { return Ok(0.0) };
        let dim = self.dim();
        let f = self.case.source(epsilon);
        let g = self.case.dirichlet();
        let psi = self.case.laplacian_trace(epsilon);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
            let h = u.hessian(&x);
            let mut expect = linalg::determinant(&h, dim);
            if self.case.regularized_exact() {
                expect -= epsilon * u.bilaplacian(&x);
            }
            worst = worst.max((f.value(&x) - expect).abs() / expect.abs().max(1.0));
        }
        for _ in 0..20 {
            let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
            let axis = rng.gen_range(0..dim);
            x[axis] = if rng.gen_bool(0.5) { 0.0 } else { 1.0 };
            let uv = u.value(&x);
            worst = worst.max((g.value(&x) - uv).abs() / uv.abs().max(1.0));
            let lap = if self.case.regularized_exact() { linalg::trace(&u.hessian(&x)) } else { epsilon };
            worst = worst.max((psi.value(&x) - lap).abs() / lap.abs().max(1.0));
        }
        if worst > 1e-10 {
            return Err(Error::Contract(format!(
                "manufactured data of case {} disagree with the exact solution by {worst:e}",
                self.id()
            )));
        }
        Ok(worst)
    }

    /// `key = value` text; parses back with [`ExperimentSpec::from_config`].
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case = {}", self.id());
        let _ = writeln!(s, "dim = {}", self.dim());
        if let Some([f, g, psi]) = &self.expressions {
            let _ = writeln!(s, "f = {f}\ng = {g}\npsi = {psi}");
        }
        let list = |v: Vec<String>| v.join(", ");
        let _ = writeln!(s, "degree = {}", list(self.degrees.iter().map(|d| d.to_string()).collect()));
        let _ = writeln!(s, "n = {}", list(self.n_list.iter().map(|d| d.to_string()).collect()));
        let _ = writeln!(s, "eps = {}", list(self.eps_list.iter().map(|e| format!("{e:e}")).collect()));
        let _ = writeln!(s, "sigma = {:e}", self.sigma);
        let _ = writeln!(s, "weight_mode = {}", self.weight_mode);
        let _ = writeln!(s, "sweep = {}", if self.sweep == Sweep::Epsilon { "eps" } else { "h" });
        s
    }

    /// Parses `key = value` lines. `case` names a builtin unless `f`, `g` and
    /// `psi` are all given, which defines a new case. `#` starts a comment.
    pub fn from_config(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| map.get(k).map(|(_, v)| v.as_str());
        let line_of = |k: &str| map.get(k).map(|(l, _)| *l).unwrap_or(0);
        let id = get("case").unwrap_or("custom");
        let expr: Vec<Option<&str>> = ["f", "g", "psi"].iter().map(|k| get(k)).collect();
        let mut spec = if expr.iter().all(|e| e.is_some()) {
            let dim = match get("dim") {
                Some(v) => parse_num::<usize>(v, line_of("dim"))?,
                None => 2,
            };
            let defaults = RunDefaults {
                degrees: vec![2],
                n_list: vec![16],
                eps_list: vec![0.01],
                sigma: default_sigma(dim),
                weight_mode: "plain".into(),
                sweep: Sweep::MeshSize,
            };
            let (f, g, psi) = (expr[0].unwrap(), expr[1].unwrap(), expr[2].unwrap());
            let case = ExpressionCase::new(id, dim, f, g, psi, defaults)?;
            let mut s = ExperimentSpec::from_case(Arc::new(case));
            s.expressions = Some([f.into(), g.into(), psi.into()]);
            s
        } else if expr.iter().any(|e| e.is_some()) {
            return Err(Error::Config { line: 0, message: "f, g and psi must be given together".into() });
        } else {
            let s = builtin_case(id).map_err(|e| Error::Config { line: line_of("case"), message: e.to_string() })?;
            if let Some(v) = get("dim") {
                if parse_num::<usize>(v, line_of("dim"))? != s.dim() {
                    return Err(Error::Config { line: line_of("dim"), message: format!("case {id} is {}D", s.dim()) });
                }
            }
            s
        };
        for (key, (line, value)) in &map {
            let line = *line;
            match key.as_str() {
                "case" | "dim" | "f" | "g" | "psi" => {}
                "degree" => spec.degrees = parse_list(value, line)?,
                "n" => spec.n_list = parse_list(value, line)?,
                "h" => spec.n_list = parse_h_list(value).map_err(|m| Error::Config { line, message: m })?,
                "eps" => spec.eps_list = parse_list(value, line)?,
                "sigma" => spec.sigma = parse_num(value, line)?,
                "weight_mode" => {
                    crate::assembly::penalty_weight(value).map_err(|e| Error::Config { line, message: e.to_string() })?;
                    spec.weight_mode = value.clone();
                }
                "sweep" => {
                    spec.sweep = match value.as_str() {
                        "h" => Sweep::MeshSize,
                        "eps" => Sweep::Epsilon,
                        other => return Err(Error::Config { line, message: format!("unknown sweep `{other}`") }),
                    }
                }
                other => return Err(Error::Config { line, message: format!("unknown key `{other}`") }),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() || self.degrees.iter().any(|k| *k != 2 && *k != 3) {
            return Err(Error::InvalidArgument("degrees must be 2 or 3".into()));
        }
        if self.n_list.is_empty() && self.eps_list.is_empty() {
            return Err(Error::InvalidArgument("mesh sizes and epsilon values are both empty".into()));
        }
        if self.n_list.iter().any(|n| *n == 0) {
            return Err(Error::InvalidArgument("mesh sizes must be positive".into()));
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidArgument("epsilon values must be positive".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidArgument("sigma must be non-negative".into()));
        }
        crate::assembly::penalty_weight(&self.weight_mode)?;
        Ok(())
    }
}

impl ProblemData for ExperimentSpec {
    fn source(&self, epsilon: f64) -> Arc<dyn ScalarField> {
        self.case.source(epsilon)
    }

    fn boundary(&self, epsilon: f64) -> BoundaryData {
        BoundaryData::new(self.case.dirichlet(), self.case.laplacian_trace(epsilon))
    }
}

fn parse_key_values(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config { line: i + 1, message: format!("expected `key = value`, got `{line}`") })?;
        let key = k.trim().to_string();
        if map.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
            return Err(Error::Config { line: i + 1, message: format!("duplicate key `{key}`") });
        }
    }
    Ok(map)
}

fn parse_num<T: FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Config { line, message: format!("bad value `{}`", s.trim()) })
}

fn parse_list<T: FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| parse_num(t, line)).collect()
}

/// Mesh sizes as `1/n` or `n` (cells per axis), comma separated.
pub fn parse_h_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let t = t.trim();
            let n = t.strip_prefix("1/").unwrap_or(t);
            match n.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(format!("bad mesh size `{t}`; use 1/n or n")),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lists_six_cases() {
        let r = CaseRegistry::with_builtins();
        assert_eq!(r.ids(), vec!["I", "II", "III", "IV", "V", "VI"]);
        assert!(matches!(builtin_case("VII"), Err(Error::Unknown { .. })));
    }

    #[test]
    fn case_one_source_at_center() {
        let s = builtin_case("I").unwrap();
        let f = s.case.source(0.01);
        // det D² exp(r²/2) = (1 + r²) exp(r²) in 2D
        assert!((f.value(&[0.5, 0.5]) - 1.5 * 0.5f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn case_two_derived_data() {
        let s = builtin_case("II").unwrap();
        let f = s.case.source(0.01);
        let psi = s.case.laplacian_trace(0.01);
        for x in [[0.3, 0.7], [1.0, 0.2], [0.0, 0.9]] {
            let expect = 36.0 * x[0] * x[0] * x[1] * x[1] - 0.24;
            assert!((f.value(&x) - expect).abs() < 1e-14);
            assert!((psi.value(&x) - 6.0 * (x[0] * x[0] + x[1] * x[1])).abs() < 1e-14);
        }
    }

    #[test]
    fn case_three_data() {
        let s = builtin_case("III").unwrap();
        assert_eq!(s.case.source(0.005).value(&[0.2, 0.4]), 1.0);
        assert_eq!(s.case.dirichlet().value(&[0.0, 0.4]), 0.0);
        assert!(s.case.exact().is_none());
    }

    #[test]
    fn case_five_data() {
        let s = builtin_case("V").unwrap();
        let x = [0.3, 0.6, 0.9];
        let f = s.case.source(0.01).value(&x);
        assert!((f - (36.0 * 0.09 * 0.81 - 0.24)).abs() < 1e-13);
        let psi = s.case.laplacian_trace(0.01).value(&x);
        assert!((psi - (1.0 + 6.0 * 0.09 + 6.0 * 0.81)).abs() < 1e-13);
    }

    #[test]
    fn manufactured_consistency() {
        for id in ["I", "II", "IV", "V"] {
            let s = builtin_case(id).unwrap();
            for eps in [0.5, 0.01] {
                assert!(s.consistency_check(eps, 7).unwrap() < 1e-10, "{id}");
            }
        }
    }

    #[test]
    fn gaussian_bilaplacian_by_differences() {
        let u = Gaussian { dim: 3 };
        let x = [0.3, 0.4, 0.5];
        let h = 1e-3;
        let lap = |p: &[f64]| linalg::trace(&u.hessian(p));
        let mut fd = 0.0;
        for i in 0..3 {
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            fd += (lap(&a) - 2.0 * lap(&x) + lap(&b)) / (h * h);
        }
        assert!((fd - u.bilaplacian(&x)).abs() < 1e-4 * fd.abs());
    }

    #[test]
    fn config_round_trip_builtin() {
        let mut s = builtin_case("II").unwrap();
        s.sigma = 2.5;
        s.eps_list = vec![0.02];
        let t = ExperimentSpec::from_config(&s.to_config()).unwrap();
        assert_eq!(t.to_config(), s.to_config());
        assert_eq!(t.id(), "II");
    }

    #[test]
    fn config_custom_case() {
        let text = "case = bowl\ndim = 2\nf = 1 + eps\ng = x^2 + y^2 # boundary\npsi = eps\nh = 1/8, 1/16\n";
        let s = ExperimentSpec::from_config(text).unwrap();
        assert_eq!(s.n_list, vec![8, 16]);
        assert!((s.case.source(0.5).value(&[0.1, 0.2]) - 1.5).abs() < 1e-15);
        assert!((s.case.dirichlet().value(&[1.0, 0.5]) - 1.25).abs() < 1e-15);
        let again = ExperimentSpec::from_config(&s.to_config()).unwrap();
        assert_eq!(again.to_config(), s.to_config());
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ExperimentSpec::from_config("case = II\nfoo = 1"), Err(Error::Config { line: 2, .. })));
        assert!(ExperimentSpec::from_config("case = II\nsigma = x").is_err());
        assert!(ExperimentSpec::from_config("case = II\ndim = 3").is_err());
        assert!(ExperimentSpec::from_config("f = 1").is_err());
        assert!(ExperimentSpec::from_config("case = II\nweight_mode = huge").is_err());
        assert!(ExperimentSpec::from_config("case = II\nn =\neps =").is_err());
        assert!(ExperimentSpec::from_config("case = b\nf = 1 +\ng = 0\npsi = 0").is_err());
    }

    #[test]
    fn h_lists() {
        assert_eq!(parse_h_list("1/8, 16,1/32").unwrap(), vec![8, 16, 32]);
        assert!(parse_h_list("1/0").is_err());
        assert!(parse_h_list("0.1").is_err());
    }
}
