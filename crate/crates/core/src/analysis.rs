//! Error norms, convergence orders and Monte-Carlo checks of the discrete
//! functional inequalities.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::assembly::tables::{for_each_ordered, CellTables, FaceTables};
use crate::assembly::{assemble_ah_sigma, CoefficientField, PenaltyParams};
use crate::error::{Error, Result};
use crate::linalg;
use crate::space::{AnalyticFunction, FeFunction, FeSpace};

/// Errors of a discrete approximation against an exact solution.
///
/// `h1` and `h2_broken` are full norms (all lower-order terms included).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
    pub h2_broken: f64,
    /// `|| I_h u - u_h ||_h`, when the discrete error lies in the test space.
    pub mesh_norm: Option<f64>,
}

pub fn error_norms(exact: &dyn AnalyticFunction, uh: &FeFunction) -> Result<ErrorNorms> {
    let space = uh.space().as_ref();
    let dim = space.dim();
    let cells = CellTables::new(space, space.cell_exactness() + 2)?;
    let nloc = cells.nloc();
    let (mut l2, mut h1, mut h2) = (0.0, 0.0, 0.0);
    for_each_ordered(
        space.mesh().num_cells(),
        |k| {
            let cp = cells.on_cell(space, k);
            let mut s = [0.0; 3];
            for (q, w) in cp.w.iter().enumerate() {
                let x = &cp.x[q][..dim];
                let e = uh.combine(k, &cp.basis[q * nloc..(q + 1) * nloc]);
                let dv = exact.value(x) - e.value;
                let dg = linalg::sub(&exact.gradient(x), &e.grad);
                let eh = exact.hessian(x);
                let mut dh = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        dh += (eh[i][j] - e.hess[i][j]).powi(2);
                    }
                }
                s[0] += w * dv * dv;
                s[1] += w * linalg::dot(&dg, &dg);
                s[2] += w * dh;
            }
            s
        },
        |_, s| {
            l2 += s[0];
            h1 += s[1];
            h2 += s[2];
        },
    );
    Ok(ErrorNorms { l2: l2.sqrt(), h1: (l2 + h1).sqrt(), h2_broken: (l2 + h1 + h2).sqrt(), mesh_norm: None })
}

/// Quantities of a discrete function entering the discrete inequalities.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DiscreteNorms {
    /// `||D² v||` over the mesh cells.
    pub hessian: f64,
    /// `||lap v||` over the mesh cells.
    pub laplacian: f64,
    /// `(sum_F h_F^{-1} ||[grad v]||_F²)^{1/2}` over interior faces.
    pub jump: f64,
    pub l2: f64,
    pub h1: f64,
    /// Maximum of `|v|` over dof nodes and cell quadrature points.
    pub linf: f64,
}

impl DiscreteNorms {
    /// `||v||_h`
    pub fn mesh_norm(&self) -> f64 {
        (self.hessian * self.hessian + self.jump * self.jump).sqrt()
    }
}

pub fn discrete_norms(v: &FeFunction) -> Result<DiscreteNorms> {
    let space = v.space().as_ref();
    let dim = space.dim();
    let cells = CellTables::new(space, space.cell_exactness())?;
    let faces = FaceTables::new(space, space.face_exactness())?;
    let nloc = cells.nloc();
    let mut out = DiscreteNorms { linf: v.coefficients().iter().fold(0.0, |m, c| m.max(c.abs())), ..Default::default() };
    let (mut hs, mut ls, mut l2, mut g2) = (0.0, 0.0, 0.0, 0.0);
    for_each_ordered(
        space.mesh().num_cells(),
        |k| {
            let cp = cells.on_cell(space, k);
            let mut s = [0.0; 5];
            for (q, w) in cp.w.iter().enumerate() {
                let e = v.combine(k, &cp.basis[q * nloc..(q + 1) * nloc]);
                let mut hh = 0.0;
                for i in 0..dim {
                    for j in 0..dim {
                        hh += e.hess[i][j] * e.hess[i][j];
                    }
                }
                let lap = linalg::trace(&e.hess);
                s[0] += w * hh;
                s[1] += w * lap * lap;
                s[2] += w * e.value * e.value;
                s[3] += w * linalg::dot(&e.grad, &e.grad);
                s[4] = s[4].max(e.value.abs());
            }
            s
        },
        |_, s| {
            hs += s[0];
            ls += s[1];
            l2 += s[2];
            g2 += s[3];
            out.linf = out.linf.max(s[4]);
        },
    );
    let interior = space.mesh().interior_faces();
    let mut js = 0.0;
    for_each_ordered(
        interior.len(),
        |f| {
            let face = &interior[f];
            let fp = faces.interior(space, f);
            let mut s = 0.0;
            for (q, w) in fp.w.iter().enumerate() {
                let gp = v.combine(face.plus_cell, &fp.plus[q * nloc..(q + 1) * nloc]).grad;
                let gm = v.combine(face.minus_cell, &fp.minus[q * nloc..(q + 1) * nloc]).grad;
                let j = linalg::dot(&linalg::sub(&gp, &gm), &face.normal_plus);
                s += w * j * j;
            }
            s / face.diameter
        },
        |_, s| js += s,
    );
    out.hessian = hs.sqrt();
    out.laplacian = ls.sqrt();
    out.jump = js.sqrt();
    out.l2 = l2.sqrt();
    out.h1 = (l2 + g2).sqrt();
    Ok(out)
}

fn require_zero_boundary(v: &FeFunction) -> Result<()> {
    let c = v.coefficients();
    for &d in v.space().boundary_dofs() {
        if c[d] != 0.0 {
            return Err(Error::Contract(format!("mesh norm needs zero boundary values; dof {d} holds {}", c[d])));
        }
    }
    Ok(())
}

/// `||v||_h² = ||D² v||² + sum_F h_F^{-1} ||[grad v]||_F²` for `v` in the
/// zero-trace space.
pub fn mesh_norm(v: &FeFunction) -> Result<f64> {
    require_zero_boundary(v)?;
    Ok(discrete_norms(v)?.mesh_norm())
}

/// Function with iid uniform(-1, 1) interior coefficients and zero trace.
pub fn random_interior_function(space: &Arc<FeSpace>, seed: u64) -> FeFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = FeFunction::zero(space.clone());
    let c = v.coefficients_mut();
    for &d in space.interior_dofs() {
        c[d] = rng.gen_range(-1.0..1.0);
    }
    v
}

/// Outcome of a Monte-Carlo bound check over random discrete functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEstimate {
    /// Largest observed ratio.
    pub max_ratio: f64,
    /// Seed of the sample attaining it.
    pub worst_seed: u64,
    pub samples: usize,
    /// Samples that broke an inequality that must hold without a constant.
    pub violations: usize,
}

fn sample_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

fn monte_carlo(
    space: &Arc<FeSpace>,
    samples: usize,
    seed: u64,
    ratio: impl Fn(&DiscreteNorms) -> Option<f64> + Sync,
    violated: impl Fn(&DiscreteNorms) -> bool + Sync,
) -> Result<BoundEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let mut est = BoundEstimate { max_ratio: 0.0, worst_seed: seed, samples, violations: 0 };
    for i in 0..samples {
        let s = sample_seed(seed, i);
        let n = discrete_norms(&random_interior_function(space, s))?;
        if violated(&n) {
            est.violations += 1;
        }
        if let Some(r) = ratio(&n) {
            if r > est.max_ratio {
                est.max_ratio = r;
                est.worst_seed = s;
            }
        }
    }
    Ok(est)
}

/// Largest observed `(||D² v|| - ||lap v||)_+ / jump(v)` over random `v`.
/// Samples with vanishing jumps must satisfy `||D² v|| <= ||lap v||` directly.
pub fn verify_miranda_talenti(space: &Arc<FeSpace>, samples: usize, seed: u64) -> Result<BoundEstimate> {
    monte_carlo(
        space,
        samples,
        seed,
        |n| (n.jump > 0.0).then(|| (n.hessian - n.laplacian).max(0.0) / n.jump),
        |n| n.jump == 0.0 && n.hessian > n.laplacian + 1e-12,
    )
}

/// Largest observed `||v||_inf / ||v||_h`.
pub fn verify_discrete_sobolev(space: &Arc<FeSpace>, samples: usize, seed: u64) -> Result<BoundEstimate> {
    let mn = |n: &DiscreteNorms| n.mesh_norm();
    monte_carlo(space, samples, seed, move |n| (mn(n) > 0.0).then(|| n.linf / mn(n)), |_| false)
}

/// Largest observed `||v||_{H1} / ||v||_h`.
pub fn verify_h1_bound(space: &Arc<FeSpace>, samples: usize, seed: u64) -> Result<BoundEstimate> {
    let mn = |n: &DiscreteNorms| n.mesh_norm();
    monte_carlo(space, samples, seed, move |n| (mn(n) > 0.0).then(|| n.h1 / mn(n)), |_| false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityEstimate {
    /// Smallest observed `A(v, v) / (eps ||v||_h²)`.
    pub min_ratio: f64,
    /// Smallest observed `A(v, v)`.
    pub min_value: f64,
    pub worst_seed: u64,
    pub samples: usize,
    /// Samples with `A(v, v) <= 0`.
    pub negative: usize,
}

/// Samples `A_h^sigma(v, v)` for random `v` in the zero-trace space.
pub fn coercivity_probe(
    space: &Arc<FeSpace>,
    field: &dyn CoefficientField,
    params: &PenaltyParams,
    samples: usize,
    seed: u64,
) -> Result<CoercivityEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let a = assemble_ah_sigma(space, field, params)?;
    let mut est = CoercivityEstimate { min_ratio: f64::INFINITY, min_value: f64::INFINITY, worst_seed: seed, samples, negative: 0 };
    for i in 0..samples {
        let s = sample_seed(seed, i);
        let v = random_interior_function(space, s);
        let value = a.bilinear(v.coefficients(), v.coefficients());
        let norm = discrete_norms(&v)?.mesh_norm();
        let ratio = value / (params.epsilon * norm * norm);
        if value <= 0.0 {
            est.negative += 1;
        }
        if value < est.min_value {
            est.min_value = value;
        }
        if ratio < est.min_ratio {
            est.min_ratio = ratio;
            est.worst_seed = s;
        }
    }
    Ok(est)
}

/// One row of a convergence table; `orders[i]` compares with the previous row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub parameter: f64,
    pub errors: [f64; 3],
    pub orders: [Option<f64>; 3],
}

/// `log(e_prev / e_cur) / log(p_prev / p_cur)`, omitted for non-positive errors.
pub fn order(p_prev: f64, e_prev: f64, p_cur: f64, e_cur: f64) -> Option<f64> {
    (e_prev > 0.0 && e_cur > 0.0).then(|| (e_prev / e_cur).ln() / (p_prev / p_cur).ln())
}

pub fn rate_table(rows: &[(f64, ErrorNorms)]) -> Result<Vec<RateRow>> {
    let raw: Vec<(f64, [f64; 3])> = rows.iter().map(|(p, e)| (*p, [e.l2, e.h1, e.h2_broken])).collect();
    rate_table_raw(&raw)
}

pub fn rate_table_raw(rows: &[(f64, [f64; 3])]) -> Result<Vec<RateRow>> {
    if rows.len() < 2 {
        return Err(Error::InvalidArgument("a rate table needs at least two rows".into()));
    }
    if rows.windows(2).any(|w| !(w[1].0 < w[0].0) || !(w[1].0 > 0.0)) {
        return Err(Error::InvalidArgument("rate table parameters must be positive and strictly decreasing".into()));
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, &(p, e)) in rows.iter().enumerate() {
        let mut orders = [None; 3];
        if i > 0 {
            let (pp, ep) = rows[i - 1];
            for c in 0..3 {
                orders[c] = order(pp, ep[c], p, e[c]);
            }
        }
        out.push(RateRow { parameter: p, errors: e, orders });
    }
    Ok(out)
}

/// Least-squares slope of `log e` against `log p`.
pub fn fitted_order(params: &[f64], errors: &[f64]) -> Option<f64> {
    if params.len() != errors.len() || params.len() < 2 || errors.iter().any(|e| !(*e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = params.iter().map(|p| p.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Three significant digits with a two-digit exponent, e.g. `3.98e-04`.
pub fn format_sci(x: f64) -> String {
    let s = format!("{x:.2e}");
    match s.split_once('e') {
        Some((m, e)) => {
            let exp: i32 = e.parse().unwrap_or(0);
            let sign = if exp < 0 { '-' } else { '+' };
            format!("{m}e{sign}{:02}", exp.abs())
        }
        None => s,
    }
}

pub fn format_order(o: Option<f64>) -> String {
    o.map(|v| format!("{v:.2}")).unwrap_or_default()
}

/// Parameter column text: `1/n` for reciprocal integers, else scientific.
pub fn format_parameter(p: f64) -> String {
    let inv = 1.0 / p;
    if (inv - inv.round()).abs() < 1e-9 * inv && inv >= 1.5 {
        format!("1/{}", inv.round() as u64)
    } else {
        format_sci(p)
    }
}

const COLUMNS: [&str; 3] = ["L2", "H1", "H2_broken"];

pub fn table_markdown(label: &str, rows: &[RateRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "| {label} | L2 error | order | H1 error | order | H2(T_h) error | order |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|");
    for r in rows {
        let _ = write!(s, "| {} ", format_parameter(r.parameter));
        for c in 0..3 {
            let _ = write!(s, "| {} | {} ", format_sci(r.errors[c]), format_order(r.orders[c]));
        }
        s.push_str("|\n");
    }
    s
}

/// Comma-separated table; errors and orders at full precision so that orders
/// recomputed from the error columns match the stored ones.
pub fn table_csv(label: &str, rows: &[RateRow]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{label}");
    for c in COLUMNS {
        let _ = write!(s, ",{c},{c}_order");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{:e}", r.parameter);
        for c in 0..3 {
            let o = r.orders[c].map(|v| format!("{v:e}")).unwrap_or_default();
            let _ = write!(s, ",{:e},{o}", r.errors[c]);
        }
        s.push('\n');
    }
    s
}

/// Parses [`table_csv`] output back into rows.
pub fn parse_table_csv(text: &str) -> Result<Vec<RateRow>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(Error::Config { line: i + 1, message: format!("expected 7 columns, found {}", cells.len()) });
        }
        let num = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::Config { line: i + 1, message: format!("bad number `{s}`") })
        };
        let mut row = RateRow { parameter: num(cells[0])?, errors: [0.0; 3], orders: [None; 3] };
        for c in 0..3 {
            row.errors[c] = num(cells[1 + 2 * c])?;
            let o = cells[2 + 2 * c].trim();
            row.orders[c] = if o.is_empty() { None } else { Some(num(o)?) };
        }
        out.push(row);
    }
    Ok(out)
}
