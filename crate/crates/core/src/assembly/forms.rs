use crate::element::BasisValue;
use crate::error::{Error, Result};
use crate::linalg::{self, CompensatedDot, Vec3};
use crate::space::{FeFunction, FeSpace, ScalarField};
use crate::sparse::SparseMatrix;

use super::tables::{for_each_ordered, CellTables, FacePoints, FaceTables};
use super::{BoundaryData, CoefficientField, CofactorField, PenaltyParams};

fn laplacian(b: &BasisValue) -> f64 {
    linalg::trace(&b.hess)
}

/// Jump `[grad v]` and average `{lap v}` of every basis function touching an
/// interior face, at one quadrature point. Plus-cell functions come first.
fn face_traces(fp: &FacePoints, q: usize, nloc: usize, n: &Vec3, out: &mut Vec<(f64, f64)>) {
    out.clear();
    for b in &fp.plus[q * nloc..(q + 1) * nloc] {
        out.push((linalg::dot(&b.grad, n), 0.5 * laplacian(b)));
    }
    for b in &fp.minus[q * nloc..(q + 1) * nloc] {
        out.push((-linalg::dot(&b.grad, n), 0.5 * laplacian(b)));
    }
}

/// Hessian of `u` on cell `k` from pushed-forward basis values, accumulated
/// with compensation: each entry is a sum of terms of size `|u| h^-2` that
/// nearly cancel.
fn compensated_hessian(coeffs: &[f64], dofs: &[usize], basis: &[BasisValue], dim: usize) -> linalg::Mat3 {
    let mut acc = [[CompensatedDot::default(); 3]; 3];
    for (b, &d) in basis.iter().zip(dofs) {
        let c = coeffs[d];
        for i in 0..dim {
            for j in i..dim {
                acc[i][j].add(c, b.hess[i][j]);
            }
        }
    }
    let mut h = linalg::ZERO33;
    for i in 0..dim {
        for j in i..dim {
            h[i][j] = acc[i][j].value();
            h[j][i] = h[i][j];
        }
    }
    h
}

fn face_dofs(space: &FeSpace, plus: usize, minus: usize) -> Vec<usize> {
    let mut d = space.cell_dofs(plus).to_vec();
    d.extend_from_slice(space.cell_dofs(minus));
    d
}

/// `A_h^sigma` with coefficient field `phi`, scaled by `scale`.
fn assemble_operator(space: &FeSpace, phi: &dyn CoefficientField, params: &PenaltyParams, scale: f64) -> Result<SparseMatrix> {
    if phi.dim() != space.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient field of dimension {} on a {}D mesh",
            phi.dim(),
            space.dim()
        )));
    }
    let mesh = space.mesh();
    let eps = params.epsilon;
    let weight = params.face_weight();
    let cells = CellTables::new(space, space.cell_exactness())?;
    let faces = FaceTables::new(space, space.face_exactness())?;
    let nloc = cells.nloc();
    let mut a = SparseMatrix::with_pattern(&space.coupling_pattern());

    for_each_ordered(
        mesh.num_cells(),
        |k| {
            let cp = cells.on_cell(space, k);
            let mut local = vec![0.0; nloc * nloc];
            for (q, w) in cp.w.iter().enumerate() {
                let basis = &cp.basis[q * nloc..(q + 1) * nloc];
                let m = phi.eval(k, &cp.x[q], basis);
                for (i, bi) in basis.iter().enumerate() {
                    let li = laplacian(bi);
                    for (j, bj) in basis.iter().enumerate() {
                        local[i * nloc + j] += w * (eps * laplacian(bj) * li - linalg::frobenius(&m, &bj.hess) * bi.value);
                    }
                }
            }
            local
        },
        |k, local| {
            let dofs = space.cell_dofs(k);
            for (i, &r) in dofs.iter().enumerate() {
                for (j, &c) in dofs.iter().enumerate() {
                    a.add(r, c, scale * local[i * nloc + j]);
                }
            }
        },
    );

    let interior = mesh.interior_faces();
    let m = 2 * nloc;
    for_each_ordered(
        interior.len(),
        |f| {
            let face = &interior[f];
            let fp = faces.interior(space, f);
            let pen = weight / face.diameter;
            let mut tr = Vec::with_capacity(m);
            let mut local = vec![0.0; m * m];
            for (q, w) in fp.w.iter().enumerate() {
                face_traces(&fp, q, nloc, &face.normal_plus, &mut tr);
                for (i, &(ji, ai)) in tr.iter().enumerate() {
                    for (j, &(jj, aj)) in tr.iter().enumerate() {
                        local[i * m + j] += w * (pen * jj * ji - eps * aj * ji - eps * ai * jj);
                    }
                }
            }
            local
        },
        |f, local| {
            let dofs = face_dofs(space, interior[f].plus_cell, interior[f].minus_cell);
            for (i, &r) in dofs.iter().enumerate() {
                for (j, &c) in dofs.iter().enumerate() {
                    a.add(r, c, scale * local[i * m + j]);
                }
            }
        },
    );
    Ok(a)
}

/// Matrix of `A_h^sigma(v, w)`: row = test `w`, column = trial `v`, over all
/// dofs (no boundary rows removed).
pub fn assemble_ah_sigma(space: &FeSpace, field: &dyn CoefficientField, params: &PenaltyParams) -> Result<SparseMatrix> {
    assemble_operator(space, field, params, 1.0)
}

/// Frechet derivative of the nonlinear residual at `u`, which equals
/// `-A_h^sigma` with `Phi = cof(D² u_h)`.
pub fn assemble_jacobian(u: &FeFunction, params: &PenaltyParams) -> Result<SparseMatrix> {
    assemble_operator(u.space(), &CofactorField { u }, params, -1.0)
}

fn boundary_flux(space: &FeSpace, psi: &dyn ScalarField, eps: f64, out: &mut [f64]) -> Result<()> {
    let faces = FaceTables::new(space, space.face_exactness() + 2)?;
    let bfaces = space.mesh().boundary_faces();
    let nloc = space.dofs_per_cell();
    let dim = space.dim();
    for_each_ordered(
        bfaces.len(),
        |f| {
            let fp = faces.boundary(space, f);
            let n = bfaces[f].normal;
            let mut local = vec![0.0; nloc];
            for (q, w) in fp.w.iter().enumerate() {
                let p = psi.value(&fp.x[q][..dim]);
                for (i, b) in fp.plus[q * nloc..(q + 1) * nloc].iter().enumerate() {
                    local[i] += w * eps * p * linalg::dot(&b.grad, &n);
                }
            }
            local
        },
        |f, local| {
            for (i, &d) in space.cell_dofs(bfaces[f].cell).iter().enumerate() {
                out[d] += local[i];
            }
        },
    );
    Ok(())
}

fn zero_boundary_rows(space: &FeSpace, v: &mut [f64]) {
    for &d in space.boundary_dofs() {
        v[d] = 0.0;
    }
}

/// Right-hand side `(phi, w_i) + eps (psi, grad w_i · n)_{boundary}` with
/// boundary rows zeroed.
pub fn assemble_linearized_rhs(
    space: &FeSpace,
    phi: &dyn ScalarField,
    psi: &dyn ScalarField,
    params: &PenaltyParams,
) -> Result<Vec<f64>> {
    let cells = CellTables::new(space, space.cell_exactness())?;
    let nloc = cells.nloc();
    let dim = space.dim();
    let mut rhs = vec![0.0; space.num_dofs()];
    for_each_ordered(
        space.mesh().num_cells(),
        |k| {
            let cp = cells.on_cell(space, k);
            let mut local = vec![0.0; nloc];
            for (q, w) in cp.w.iter().enumerate() {
                let p = phi.value(&cp.x[q][..dim]);
                for (i, b) in cp.basis[q * nloc..(q + 1) * nloc].iter().enumerate() {
                    local[i] += w * p * b.value;
                }
            }
            local
        },
        |k, local| {
            for (i, &d) in space.cell_dofs(k).iter().enumerate() {
                rhs[d] += local[i];
            }
        },
    );
    boundary_flux(space, psi, params.epsilon, &mut rhs)?;
    zero_boundary_rows(space, &mut rhs);
    Ok(rhs)
}

/// Residual of the nonlinear scheme at `u`:
/// `-eps(lap u, lap v) + (det D²u, v) - b_h^sigma(u, v) - (f, v) + eps(psi, grad v · n)`
/// for interior test functions; boundary rows are zero.
pub fn assemble_nonlinear_residual(
    u: &FeFunction,
    f: &dyn ScalarField,
    bdata: &BoundaryData,
    params: &PenaltyParams,
) -> Result<Vec<f64>> {
    let space = u.space().as_ref();
    let dim = space.dim();
    let coeffs = u.coefficients();
    for &d in space.boundary_dofs() {
        let x = &space.dof_coords()[d];
        let g = bdata.g.value(&x[..dim]);
        if (coeffs[d] - g).abs() > 1e-10 {
            return Err(Error::Contract(format!(
                "boundary dof {d} holds {} but the Dirichlet value is {g}",
                coeffs[d]
            )));
        }
    }
    let eps = params.epsilon;
    let weight = params.face_weight();
    let cells = CellTables::new(space, space.cell_exactness())?;
    let faces = FaceTables::new(space, space.face_exactness())?;
    let nloc = cells.nloc();
    let mesh = space.mesh();
    let mut r = vec![0.0; space.num_dofs()];

    for_each_ordered(
        mesh.num_cells(),
        |k| {
            let cp = cells.on_cell(space, k);
            let mut local = vec![0.0; nloc];
            for (q, w) in cp.w.iter().enumerate() {
                let basis = &cp.basis[q * nloc..(q + 1) * nloc];
                let hess = compensated_hessian(coeffs, space.cell_dofs(k), basis, dim);
                let lap = linalg::trace(&hess);
                let det = linalg::determinant(&hess, dim);
                let src = f.value(&cp.x[q][..dim]);
                for (i, b) in basis.iter().enumerate() {
                    local[i] += w * (-eps * lap * laplacian(b) + (det - src) * b.value);
                }
            }
            local
        },
        |k, local| {
            for (i, &d) in space.cell_dofs(k).iter().enumerate() {
                r[d] += local[i];
            }
        },
    );

    let interior = mesh.interior_faces();
    for_each_ordered(
        interior.len(),
        |fi| {
            let face = &interior[fi];
            let fp = faces.interior(space, fi);
            let dofs = face_dofs(space, face.plus_cell, face.minus_cell);
            let pen = weight / face.diameter;
            let mut tr = Vec::with_capacity(2 * nloc);
            let mut local = vec![0.0; 2 * nloc];
            for (q, w) in fp.w.iter().enumerate() {
                face_traces(&fp, q, nloc, &face.normal_plus, &mut tr);
                let (mut ju, mut au) = (CompensatedDot::default(), CompensatedDot::default());
                for (&d, &(j, a)) in dofs.iter().zip(&tr) {
                    ju.add(coeffs[d], j);
                    au.add(coeffs[d], a);
                }
                let (ju, au) = (ju.value(), au.value());
                for (i, &(jv, av)) in tr.iter().enumerate() {
                    local[i] -= w * (pen * ju * jv - eps * au * jv - eps * av * ju);
                }
            }
            (dofs, local)
        },
        |_, (dofs, local)| {
            for (i, &d) in dofs.iter().enumerate() {
                r[d] += local[i];
            }
        },
    );

    boundary_flux(space, bdata.psi.as_ref(), eps, &mut r)?;
    zero_boundary_rows(space, &mut r);
    Ok(r)
}

/// Boundary dofs with their Dirichlet values, and the free (interior) dofs.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSplit {
    pub boundary_dofs: Vec<usize>,
    pub boundary_values: Vec<f64>,
    pub interior_dofs: Vec<usize>,
}

impl DirichletSplit {
    /// Writes the boundary values into a full coefficient vector.
    pub fn impose(&self, coeffs: &mut [f64]) {
        for (&d, &v) in self.boundary_dofs.iter().zip(&self.boundary_values) {
            coeffs[d] = v;
        }
    }
}

pub fn apply_dirichlet(space: &FeSpace, g: &dyn ScalarField) -> DirichletSplit {
    let dim = space.dim();
    let boundary_dofs = space.boundary_dofs().to_vec();
    let boundary_values = boundary_dofs.iter().map(|&d| g.value(&space.dof_coords()[d][..dim])).collect();
    DirichletSplit { boundary_dofs, boundary_values, interior_dofs: space.interior_dofs().to_vec() }
}
