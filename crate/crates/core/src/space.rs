//! Continuous Lagrange spaces over a simplicial mesh and functions in them.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::element::{BasisValue, ReferenceElement};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3, ZERO3, ZERO33};
use crate::mesh::{CellGeometry, SimplicialMesh};
use crate::sparse::SparsityPattern;

/// A scalar function of position, used for all problem data.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
}

impl<F> ScalarField for F
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// A twice differentiable function with known derivatives.
pub trait AnalyticFunction: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec3;
    fn hessian(&self, x: &[f64]) -> Mat3;
}

pub struct FeSpace {
    mesh: Arc<SimplicialMesh>,
    element: ReferenceElement,
    dof_coords: Vec<Vec3>,
    cell_dofs: Vec<usize>,
    on_boundary: Vec<bool>,
    boundary_dofs: Vec<usize>,
    interior_dofs: Vec<usize>,
    pattern: OnceLock<Arc<SparsityPattern>>,
}

impl std::fmt::Debug for FeSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeSpace")
            .field("dim", &self.dim())
            .field("degree", &self.degree())
            .field("num_dofs", &self.num_dofs())
            .finish()
    }
}

impl FeSpace {
    /// Lagrange `P_degree` space. Nodes are shared between cells by
    /// geometric matching with tolerance `1e-10 h`; global dofs are numbered
    /// lexicographically by `(z, y, x)`.
    pub fn new(mesh: Arc<SimplicialMesh>, degree: usize) -> Result<Self> {
        let dim = mesh.dim();
        let element = ReferenceElement::new(dim, degree)?;
        let nloc = element.num_nodes();
        let tol = 1e-10 * mesh.h();
        let key = |x: &Vec3, d: usize| (x[d] / tol).round() as i64;

        let mut lookup: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut coords: Vec<Vec3> = Vec::new();
        let mut cell_dofs = Vec::with_capacity(mesh.num_cells() * nloc);
        for k in 0..mesh.num_cells() {
            let g = mesh.geometry(k);
            for xi in element.nodes() {
                let x = g.map(xi);
                let base = [key(&x, 0), key(&x, 1), if dim == 3 { key(&x, 2) } else { 0 }];
                let mut found = None;
                'search: for dz in if dim == 3 { -1..=1 } else { 0..=0 } {
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            let kk = [base[0] + dx, base[1] + dy, base[2] + dz];
                            if let Some(list) = lookup.get(&kk) {
                                for &d in list {
                                    if linalg::norm(&linalg::sub(&coords[d], &x)) <= tol {
                                        found = Some(d);
                                        break 'search;
                                    }
                                }
                            }
                        }
                    }
                }
                let d = found.unwrap_or_else(|| {
                    coords.push(x);
                    lookup.entry(base).or_default().push(coords.len() - 1);
                    coords.len() - 1
                });
                cell_dofs.push(d);
            }
        }

        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (coords[a], coords[b]);
            (key(&pa, 2), key(&pa, 1), key(&pa, 0)).cmp(&(key(&pb, 2), key(&pb, 1), key(&pb, 0)))
        });
        let mut renumber = vec![0; coords.len()];
        for (new, &old) in order.iter().enumerate() {
            renumber[old] = new;
        }
        let dof_coords: Vec<Vec3> = order.iter().map(|&o| coords[o]).collect();
        for d in cell_dofs.iter_mut() {
            *d = renumber[*d];
        }

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in mesh.vertices() {
            for d in 0..dim {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        let on_boundary: Vec<bool> = dof_coords
            .iter()
            .map(|x| (0..dim).any(|d| (x[d] - lo[d]).abs() <= tol || (x[d] - hi[d]).abs() <= tol))
            .collect();
        let boundary_dofs = (0..dof_coords.len()).filter(|&d| on_boundary[d]).collect();
        let interior_dofs = (0..dof_coords.len()).filter(|&d| !on_boundary[d]).collect();

        Ok(FeSpace {
            mesh,
            element,
            dof_coords,
            cell_dofs,
            on_boundary,
            boundary_dofs,
            interior_dofs,
            pattern: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn num_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.element.num_nodes()
    }

    pub fn dof_coords(&self) -> &[Vec3] {
        &self.dof_coords
    }

    pub fn cell_dofs(&self, k: usize) -> &[usize] {
        let n = self.dofs_per_cell();
        &self.cell_dofs[k * n..(k + 1) * n]
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.on_boundary[dof]
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior_dofs
    }

    /// Default cell quadrature exactness `max(2k, d(k-2)+k) + 2`.
    pub fn cell_exactness(&self) -> usize {
        let (k, d) = (self.degree(), self.dim());
        (2 * k).max(d * (k - 2) + k) + 2
    }

    /// Default face quadrature exactness `2(k-1) + 2`.
    pub fn face_exactness(&self) -> usize {
        2 * (self.degree() - 1) + 2
    }

    /// Sparsity of all forms on this space: every pair of dofs that share a
    /// cell or sit on the two cells of a common interior face.
    pub fn coupling_pattern(&self) -> Arc<SparsityPattern> {
        self.pattern
            .get_or_init(|| {
                let mut groups: Vec<Vec<usize>> = Vec::new();
                for k in 0..self.mesh.num_cells() {
                    groups.push(self.cell_dofs(k).to_vec());
                }
                for f in self.mesh.interior_faces() {
                    let mut g = self.cell_dofs(f.plus_cell).to_vec();
                    g.extend_from_slice(self.cell_dofs(f.minus_cell));
                    groups.push(g);
                }
                Arc::new(SparsityPattern::from_groups(self.num_dofs(), &groups))
            })
            .clone()
    }

    /// Maps reference values/derivatives to the physical cell.
    pub fn push_forward(geom: &CellGeometry, reference: &BasisValue) -> BasisValue {
        let inv = &geom.inverse;
        let grad = linalg::mat_t_vec(inv, &reference.grad);
        // J^{-T} H J^{-1}
        let mut tmp = ZERO33;
        for r in 0..3 {
            for b in 0..3 {
                tmp[r][b] = reference.hess[r][0] * inv[0][b] + reference.hess[r][1] * inv[1][b] + reference.hess[r][2] * inv[2][b];
            }
        }
        let mut hess = ZERO33;
        for a in 0..3 {
            for b in 0..3 {
                hess[a][b] = inv[0][a] * tmp[0][b] + inv[1][a] * tmp[1][b] + inv[2][a] * tmp[2][b];
            }
        }
        BasisValue { value: reference.value, grad, hess }
    }

    /// Physical basis values on cell `k` at reference point `xi`.
    pub fn basis_on_cell(&self, k: usize, xi: &Vec3, out: &mut [BasisValue]) {
        self.element.eval_into(xi, out);
        let g = self.mesh.geometry(k);
        for b in out.iter_mut() {
            *b = Self::push_forward(g, b);
        }
    }
}

#[derive(Clone)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for FeFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FeFunction").field("space", &self.space).finish()
    }
}

/// Value, gradient and Hessian of a discrete function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEval {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Mat3,
}

impl FeFunction {
    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.num_dofs();
        FeFunction { space, coeffs: vec![0.0; n] }
    }

    pub fn from_coefficients(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a space with {} dofs",
                coeffs.len(),
                space.num_dofs()
            )));
        }
        Ok(FeFunction { space, coeffs })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coeffs
    }

    /// Combines basis values already pushed forward to cell `k`.
    pub fn combine(&self, k: usize, basis: &[BasisValue]) -> PointEval {
        let mut value = 0.0;
        let mut grad = ZERO3;
        let mut hess = ZERO33;
        for (b, &d) in basis.iter().zip(self.space.cell_dofs(k)) {
            let c = self.coeffs[d];
            value += c * b.value;
            for i in 0..3 {
                grad[i] += c * b.grad[i];
                for j in 0..3 {
                    hess[i][j] += c * b.hess[i][j];
                }
            }
        }
        PointEval { value, grad, hess }
    }

    /// Value, physical gradient and elementwise Hessian on `cell` at the
    /// reference point `xi`.
    pub fn eval(&self, cell: usize, xi: &Vec3) -> Result<PointEval> {
        if cell >= self.space.mesh().num_cells() {
            return Err(Error::OutOfRange { what: "cell", index: cell, len: self.space.mesh().num_cells() });
        }
        let mut basis = vec![BasisValue::default(); self.space.dofs_per_cell()];
        self.space.basis_on_cell(cell, xi, &mut basis);
        Ok(self.combine(cell, &basis))
    }

    /// Point value at physical `x`, or `None` outside the mesh.
    pub fn value_at(&self, x: &Vec3) -> Option<f64> {
        let (k, xi) = self.space.mesh().locate(x)?;
        self.eval(k, &xi).ok().map(|e| e.value)
    }
}

/// Nodal interpolant: the coefficient of each dof is `g` at its node.
pub fn interpolate(space: &Arc<FeSpace>, g: &dyn ScalarField) -> FeFunction {
    let dim = space.dim();
    let coeffs = space.dof_coords().iter().map(|x| g.value(&x[..dim])).collect();
    FeFunction { space: space.clone(), coeffs }
}
