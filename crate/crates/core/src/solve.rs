//! Sparse direct solves, damped Newton for the nonlinear scheme and
//! epsilon-continuation.

use std::sync::{Arc, Once};
use std::time::{Duration, Instant};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::MatMut;

use crate::assembly::{
    apply_dirichlet, assemble_ah_sigma, assemble_jacobian, assemble_linearized_rhs, assemble_nonlinear_residual,
    BoundaryData, CoefficientField, PenaltyParams,
};
use crate::error::{Error, Result};
use crate::space::{interpolate, FeFunction, FeSpace, ScalarField};
use crate::sparse::SparseMatrix;

/// Relative residual accepted by [`sparse_solve`].
pub const SOLVE_TOL: f64 = 1e-10;

fn sequential_faer() {
    static ONCE: Once = Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `|Ax - b|_inf / (|A|_inf |x|_inf + |b|_inf)`
pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r = ax.iter().zip(b).fold(0.0_f64, |m, (p, q)| m.max((p - q).abs()));
    let denom = a.norm_inf() * norm_inf(x) + norm_inf(b);
    if denom == 0.0 {
        r
    } else {
        r / denom
    }
}

/// LU factorization of a square sparse matrix with partial pivoting.
///
/// The CSR arrays of `A` are handed to faer as the CSC arrays of `Aᵀ`, so the
/// stored factorization is of `Aᵀ` and solves go through the transpose.
pub struct SparseLu {
    matrix: SparseMatrix,
    pattern: SymbolicSparseColMat<usize>,
    symbolic: SymbolicLu<usize>,
    lu: Lu<usize, f64>,
}

fn map_lu_error(e: LuError) -> Error {
    match e {
        LuError::SymbolicSingular { index } => Error::Singular { row: index },
        LuError::Generic(e) => Error::InvalidArgument(format!("sparse LU failed: {e:?}")),
    }
}

impl SparseLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        sequential_faer();
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!("matrix is {}x{}", a.nrows(), a.ncols())));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite { iteration: 0 });
        }
        let n = a.nrows();
        let pattern = SymbolicSparseColMat::new_checked(n, n, a.row_ptr().to_vec(), None, a.col_idx().to_vec());
        let symbolic = SymbolicLu::try_new(pattern.as_ref())
            .map_err(|e| Error::InvalidArgument(format!("symbolic LU failed: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(symbolic.clone(), SparseColMatRef::new(pattern.as_ref(), a.values()))
            .map_err(map_lu_error)?;
        let out = SparseLu { matrix: a.clone(), pattern, symbolic, lu };
        out.check_pivots()?;
        Ok(out)
    }

    /// Refactors a matrix with the same sparsity pattern, reusing the symbolic
    /// analysis. Falls back to a full factorization if the pattern differs.
    pub fn refactor(&mut self, a: &SparseMatrix) -> Result<()> {
        let same = a.nrows() == self.matrix.nrows()
            && a.row_ptr() == self.matrix.row_ptr()
            && a.col_idx() == self.matrix.col_idx();
        if !same {
            *self = SparseLu::factor(a)?;
            return Ok(());
        }
        if !a.is_finite() {
            return Err(Error::NonFinite { iteration: 0 });
        }
        self.lu = Lu::try_new_with_symbolic(self.symbolic.clone(), SparseColMatRef::new(self.pattern.as_ref(), a.values()))
            .map_err(map_lu_error)?;
        self.matrix = a.clone();
        self.check_pivots()
    }

    /// Numerically zero pivots surface as non-finite solution entries.
    fn check_pivots(&self) -> Result<()> {
        let n = self.matrix.nrows();
        let x = self.raw_solve(&vec![1.0; n]);
        match x.iter().position(|v| !v.is_finite()) {
            Some(row) => Err(Error::Singular { row }),
            None => Ok(()),
        }
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let n = x.len();
        self.lu.solve_transpose_in_place(MatMut::from_column_major_slice_mut(&mut x, n, 1));
        x
    }

    /// Solves `A x = b`, with up to three steps of iterative refinement when
    /// the relative residual exceeds [`SOLVE_TOL`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a {}-row matrix",
                b.len(),
                self.matrix.nrows()
            )));
        }
        let mut x = self.raw_solve(b);
        if let Some(row) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular { row });
        }
        let mut rel = relative_residual(&self.matrix, &x, b);
        for _ in 0..3 {
            if rel < SOLVE_TOL {
                break;
            }
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let dx = self.raw_solve(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            rel = relative_residual(&self.matrix, &x, b);
        }
        if rel < SOLVE_TOL {
            Ok(x)
        } else {
            Err(Error::InaccurateSolve { residual: rel })
        }
    }
}

/// Direct sparse solve of `A x = b`.
pub fn sparse_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    SparseLu::factor(a)?.solve(b)
}

/// Solves the linearized scheme `A_h^sigma(u, w) = (phi, w) + eps(psi, grad w · n)`
/// for `u = g` on the boundary.
pub fn solve_linearized(
    space: &Arc<FeSpace>,
    field: &dyn CoefficientField,
    phi: &dyn ScalarField,
    psi: &dyn ScalarField,
    g: &dyn ScalarField,
    params: &PenaltyParams,
) -> Result<FeFunction> {
    let a = assemble_ah_sigma(space, field, params)?;
    let rhs = assemble_linearized_rhs(space, phi, psi, params)?;
    let split = apply_dirichlet(space, g);
    let mut x = vec![0.0; space.num_dofs()];
    split.impose(&mut x);
    let lift = a.mul_vec(&x);
    let b: Vec<f64> = split.interior_dofs.iter().map(|&i| rhs[i] - lift[i]).collect();
    let aii = a.submatrix(&split.interior_dofs, &split.interior_dofs);
    let xi = sparse_solve(&aii, &b)?;
    for (&d, v) in split.interior_dofs.iter().zip(xi) {
        x[d] = v;
    }
    FeFunction::from_coefficients(space.clone(), x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Tolerance on the residual infinity norm.
    pub abs_tol: f64,
    pub max_iters: usize,
    pub damping_factor: f64,
    pub max_halvings: usize,
    /// Explicit decreasing epsilon ladder for continuation.
    pub continuation_schedule: Option<Vec<f64>>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { abs_tol: 1e-10, max_iters: 50, damping_factor: 0.5, max_halvings: 20, continuation_schedule: None }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if !(self.damping_factor > 0.0 && self.damping_factor < 1.0) {
            return Err(Error::InvalidArgument(format!("damping factor must lie in (0, 1), got {}", self.damping_factor)));
        }
        if let Some(s) = &self.continuation_schedule {
            if s.is_empty() || s.windows(2).any(|w| w[1] >= w[0]) || s.iter().any(|e| !(*e > 0.0)) {
                return Err(Error::InvalidArgument("continuation schedule must be positive and strictly decreasing".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    /// Newton steps taken, summed over continuation rungs.
    pub iterations: usize,
    /// Residual infinity norms, one per evaluation at an accepted iterate.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub wall_time: Duration,
    /// Epsilon values solved in order, with the Newton steps each took.
    pub rungs: Vec<(f64, usize)>,
    /// Residual bound the final solve met: `abs_tol`, or the rounding floor
    /// of the residual at the solution when that is larger.
    pub tolerance: f64,
}

/// Residual change caused by rounding every coefficient of `u` to working
/// precision, `2 eps_mach max_i sum_j |J_ij| |u_j|` over rows `rows`. No
/// representable iterate can be expected to beat it.
pub fn rounding_floor(jacobian: &SparseMatrix, rows: &[usize], coeffs: &[f64]) -> f64 {
    rows.iter()
        .map(|&i| jacobian.row(i).map(|(j, v)| (v * coeffs[j]).abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * 2.0
        * f64::EPSILON
}

fn interior_norm(r: &[f64]) -> f64 {
    norm_inf(r)
}

/// Damped Newton iteration for the nonlinear scheme starting from `initial`,
/// which must carry the Dirichlet values.
pub fn newton_solve(
    f: &dyn ScalarField,
    bdata: &BoundaryData,
    params: &PenaltyParams,
    config: &NewtonConfig,
    initial: FeFunction,
) -> Result<(FeFunction, SolveReport)> {
    config.validate()?;
    let start = Instant::now();
    let space = initial.space().clone();
    let interior = space.interior_dofs().to_vec();
    let mut u = initial;
    let mut r = assemble_nonlinear_residual(&u, f, bdata, params)?;
    let mut rn = interior_norm(&r);
    if !rn.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut report = SolveReport { residual_history: vec![rn], ..Default::default() };
    let mut lu: Option<SparseLu> = None;
    let mut it = 0;
    let mut tol = config.abs_tol;
    while rn > config.abs_tol {
        let full = assemble_jacobian(&u, params)?;
        tol = config.abs_tol.max(rounding_floor(&full, &interior, u.coefficients()));
        if rn <= tol {
            break;
        }
        if it == config.max_iters {
            return Err(Error::MaxIterations { iterations: it, residual: rn });
        }
        it += 1;
        let j = full.submatrix(&interior, &interior);
        if !j.is_finite() {
            return Err(Error::NonFinite { iteration: it });
        }
        match lu.as_mut() {
            Some(f) => f.refactor(&j)?,
            None => lu = Some(SparseLu::factor(&j)?),
        }
        let rhs: Vec<f64> = interior.iter().map(|&i| -r[i]).collect();
        let delta = match lu.as_ref().expect("factored above").solve(&rhs) {
            Ok(d) => d,
            Err(Error::NonFinite { .. }) => return Err(Error::NonFinite { iteration: it }),
            Err(e) => return Err(e),
        };

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let mut trial = u.clone();
            let c = trial.coefficients_mut();
            for (&i, d) in interior.iter().zip(&delta) {
                c[i] += t * d;
            }
            let rt = assemble_nonlinear_residual(&trial, f, bdata, params)?;
            let rtn = interior_norm(&rt);
            if rtn.is_finite() && rtn < rn {
                accepted = Some((trial, rt, rtn));
                break;
            }
            t *= config.damping_factor;
        }
        match accepted {
            Some((trial, rt, rtn)) => {
                u = trial;
                r = rt;
                rn = rtn;
                report.residual_history.push(rn);
            }
            None => {
                if u.coefficients().iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite { iteration: it });
                }
                return Err(Error::DampingFloor { iteration: it, halvings: config.max_halvings, residual: rn });
            }
        }
    }
    report.iterations = it;
    report.converged = true;
    report.tolerance = tol;
    report.wall_time = start.elapsed();
    report.rungs.push((params.epsilon, it));
    Ok((u, report))
}

/// Source and boundary data of a problem family indexed by epsilon.
pub trait ProblemData: Send + Sync {
    fn source(&self, epsilon: f64) -> Arc<dyn ScalarField>;
    fn boundary(&self, epsilon: f64) -> BoundaryData;
}

/// `max(0.5, target)` halved until it would pass `target`, then `target`.
pub fn epsilon_ladder(target: f64) -> Result<Vec<f64>> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon target must be positive, got {target}")));
    }
    let mut e = target.max(0.5);
    let mut out = Vec::new();
    while e > target {
        out.push(e);
        e *= 0.5;
    }
    out.push(target);
    Ok(out)
}

/// Convex seed: `g + (|x - c|² - d/4) / 2` inside, `g` on boundary dofs.
pub fn convex_seed(space: &Arc<FeSpace>, g: &dyn ScalarField) -> FeFunction {
    let d = space.dim();
    let q = move |x: &[f64]| {
        let r2: f64 = x.iter().map(|xi| (xi - 0.5) * (xi - 0.5)).sum();
        g.value(x) + 0.5 * (r2 - d as f64 / 4.0)
    };
    let mut u = interpolate(space, &q);
    apply_dirichlet(space, g).impose(u.coefficients_mut());
    u
}

/// Solves for `params.epsilon` by warm-started Newton solves down an epsilon
/// ladder, from [`convex_seed`] unless `initial` is given.
pub fn continuation_solve(
    space: &Arc<FeSpace>,
    data: &dyn ProblemData,
    params: &PenaltyParams,
    config: &NewtonConfig,
    initial: Option<FeFunction>,
) -> Result<(FeFunction, SolveReport)> {
    config.validate()?;
    let start = Instant::now();
    let ladder = match &config.continuation_schedule {
        Some(s) => s.clone(),
        None => epsilon_ladder(params.epsilon)?,
    };
    let mut u = match initial {
        Some(u) => u,
        None => convex_seed(space, data.boundary(ladder[0]).g.as_ref()),
    };
    let mut report = SolveReport::default();
    for &eps in &ladder {
        let p = params.with_epsilon(eps)?;
        let bdata = data.boundary(eps);
        apply_dirichlet(space, bdata.g.as_ref()).impose(u.coefficients_mut());
        let f = data.source(eps);
        let (next, rep) = newton_solve(f.as_ref(), &bdata, &p, config, u)
            .map_err(|e| Error::Continuation { eps, source: Box::new(e) })?;
        u = next;
        report.iterations += rep.iterations;
        report.residual_history.extend(rep.residual_history);
        report.rungs.extend(rep.rungs);
        report.tolerance = rep.tolerance;
    }
    report.converged = true;
    report.wall_time = start.elapsed();
    Ok((u, report))
}
