//! Discrete forms of the C0 interior penalty scheme.
//!
//! Conventions: rows are test functions, columns are trial functions. Matrices
//! and vectors are assembled over all dofs; boundary rows of residuals and
//! right-hand sides are zero and solvers restrict matrices to interior dofs.
//!
//! On an interior face `F = K+ ∩ K-` with unit normal `n+` pointing out of
//! `K+`, the gradient jump is `[grad v] = (grad v+ - grad v-) · n+` and the
//! Laplacian average is `{lap v} = (lap v+ + lap v-) / 2`.

mod forms;
mod penalty;
pub(crate) mod tables;

use std::fmt;
use std::sync::Arc;

pub use forms::{
    apply_dirichlet, assemble_ah_sigma, assemble_jacobian, assemble_linearized_rhs, assemble_nonlinear_residual,
    DirichletSplit,
};
pub use penalty::{penalty_weight, Full, PenaltyRegistry, PenaltyWeight, Plain, Reduced};

use crate::element::BasisValue;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3};
use crate::space::{FeFunction, ScalarField};

/// `(det H, cof H)` for the leading `dim x dim` block of `h`.
pub fn det_and_cofactor(h: &Mat3, dim: usize) -> (f64, Mat3) {
    (linalg::determinant(h, dim), linalg::cofactor(h, dim))
}

/// Symmetric matrix field evaluated at cell quadrature points.
pub trait CoefficientField: Sync {
    fn dim(&self) -> usize;

    /// Value on `cell` at physical point `x`; `basis` holds the physical
    /// basis functions of the cell at that point.
    fn eval(&self, cell: usize, x: &Vec3, basis: &[BasisValue]) -> Mat3;
}

/// The same matrix everywhere.
#[derive(Debug, Clone, Copy)]
pub struct ConstantField {
    pub dim: usize,
    pub value: Mat3,
}

impl ConstantField {
    pub fn identity(dim: usize) -> Self {
        ConstantField { dim, value: linalg::identity(dim) }
    }

    pub fn zero(dim: usize) -> Self {
        ConstantField { dim, value: linalg::ZERO33 }
    }
}

impl CoefficientField for ConstantField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _: usize, _: &Vec3, _: &[BasisValue]) -> Mat3 {
        self.value
    }
}

/// `cof(D² u_h)` computed from the elementwise Hessian.
pub struct CofactorField<'a> {
    pub u: &'a FeFunction,
}

impl CoefficientField for CofactorField<'_> {
    fn dim(&self) -> usize {
        self.u.space().dim()
    }

    fn eval(&self, cell: usize, _: &Vec3, basis: &[BasisValue]) -> Mat3 {
        let e = self.u.combine(cell, basis);
        linalg::cofactor(&e.hess, self.dim())
    }
}

/// A prescribed matrix-valued function of position.
pub struct FunctionField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&Vec3) -> Mat3 + Sync> CoefficientField for FunctionField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _: usize, x: &Vec3, _: &[BasisValue]) -> Mat3 {
        (self.f)(x)
    }
}

/// Penalty parameter, regularization parameter and weight mode.
#[derive(Clone)]
pub struct PenaltyParams {
    pub sigma: f64,
    pub epsilon: f64,
    pub weight: Arc<dyn PenaltyWeight>,
}

impl fmt::Debug for PenaltyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PenaltyParams(sigma={}, eps={}, mode={})", self.sigma, self.epsilon, self.weight.name())
    }
}

impl PenaltyParams {
    pub fn new(sigma: f64, epsilon: f64, mode: &str) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be non-negative, got {sigma}")));
        }
        Ok(PenaltyParams { sigma, epsilon, weight: penalty_weight(mode)? })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        PenaltyParams::new(self.sigma, epsilon, self.weight.name())
    }

    /// Coefficient of `sum_F h_F^{-1} ([grad v], [grad w])_F`.
    pub fn face_weight(&self) -> f64 {
        self.weight.weight(self.sigma, self.epsilon)
    }

    pub fn mode(&self) -> &'static str {
        self.weight.name()
    }
}

/// Dirichlet trace `g` and Laplacian trace `psi` on the boundary.
#[derive(Clone)]
pub struct BoundaryData {
    pub g: Arc<dyn ScalarField>,
    pub psi: Arc<dyn ScalarField>,
}

impl BoundaryData {
    pub fn new(g: Arc<dyn ScalarField>, psi: Arc<dyn ScalarField>) -> Self {
        BoundaryData { g, psi }
    }

    /// `g` with the default Laplacian condition `lap u = eps`.
    pub fn with_default_psi(g: Arc<dyn ScalarField>, epsilon: f64) -> Self {
        BoundaryData { g, psi: Arc::new(move |_: &[f64]| epsilon) }
    }
}
