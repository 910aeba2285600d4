use rayon::prelude::*;

use crate::element::BasisValue;
use crate::error::Result;
use crate::linalg::Vec3;
use crate::mesh::SimplicialMesh;
use crate::quadrature::{cell_quadrature, face_quadrature, QuadratureRule};
use crate::space::FeSpace;

/// Runs `work` over `0..n` in parallel chunks and feeds the results to `sink`
/// strictly in index order, so accumulation is independent of scheduling.
pub(crate) fn for_each_ordered<T, W, S>(n: usize, work: W, mut sink: S)
where
    T: Send,
    W: Fn(usize) -> T + Sync,
    S: FnMut(usize, T),
{
    const CHUNK: usize = 1024;
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let out: Vec<T> = (start..end).into_par_iter().map(&work).collect();
        for (i, t) in out.into_iter().enumerate() {
            sink(start + i, t);
        }
        start = end;
    }
}

/// Reference basis tabulated at a cell rule.
pub(crate) struct CellTables {
    pub rule: QuadratureRule,
    reference: Vec<BasisValue>,
    nloc: usize,
}

/// Physical quantities of one cell at every quadrature point.
pub(crate) struct CellPoints {
    pub x: Vec<Vec3>,
    pub w: Vec<f64>,
    /// `basis[q * nloc + a]`
    pub basis: Vec<BasisValue>,
}

impl CellTables {
    pub fn new(space: &FeSpace, exactness: usize) -> Result<Self> {
        let rule = cell_quadrature(space.dim(), exactness)?;
        let nloc = space.dofs_per_cell();
        let mut reference = vec![BasisValue::default(); rule.len() * nloc];
        for (q, p) in rule.points.iter().enumerate() {
            space.element().eval_into(p, &mut reference[q * nloc..(q + 1) * nloc]);
        }
        Ok(CellTables { rule, reference, nloc })
    }

    pub fn nloc(&self) -> usize {
        self.nloc
    }

    pub fn on_cell(&self, space: &FeSpace, k: usize) -> CellPoints {
        let g = space.mesh().geometry(k);
        let jac = g.det.abs();
        let x = self.rule.points.iter().map(|p| g.map(p)).collect();
        let w = self.rule.weights.iter().map(|w| w * jac).collect();
        let basis = self.reference.iter().map(|b| FeSpace::push_forward(g, b)).collect();
        CellPoints { x, w, basis }
    }
}

/// Face rule plus helpers to evaluate basis traces from either side.
pub(crate) struct FaceTables {
    pub rule: QuadratureRule,
    nloc: usize,
}

/// Physical points and weights on a face and the basis traces of one or two
/// adjacent cells.
pub(crate) struct FacePoints {
    pub x: Vec<Vec3>,
    pub w: Vec<f64>,
    pub plus: Vec<BasisValue>,
    pub minus: Vec<BasisValue>,
}

impl FaceTables {
    pub fn new(space: &FeSpace, exactness: usize) -> Result<Self> {
        Ok(FaceTables { rule: face_quadrature(space.dim(), exactness)?, nloc: space.dofs_per_cell() })
    }

    fn points(&self, mesh: &SimplicialMesh, ids: &[usize], measure: f64) -> (Vec<Vec3>, Vec<f64>) {
        let v = mesh.vertices();
        let scale = measure / QuadratureRule::reference_measure(mesh.dim() - 1);
        let x = self
            .rule
            .points
            .iter()
            .map(|p| {
                let mut x = v[ids[0]];
                for (j, &id) in ids.iter().enumerate().skip(1) {
                    for c in 0..3 {
                        x[c] += p[j - 1] * (v[id][c] - v[ids[0]][c]);
                    }
                }
                x
            })
            .collect();
        let w = self.rule.weights.iter().map(|w| w * scale).collect();
        (x, w)
    }

    fn traces(&self, space: &FeSpace, cell: usize, x: &[Vec3]) -> Vec<BasisValue> {
        let g = space.mesh().geometry(cell);
        let mut out = vec![BasisValue::default(); x.len() * self.nloc];
        for (q, xq) in x.iter().enumerate() {
            space.basis_on_cell(cell, &g.pullback(xq), &mut out[q * self.nloc..(q + 1) * self.nloc]);
        }
        out
    }

    pub fn interior(&self, space: &FeSpace, face: usize) -> FacePoints {
        let f = &space.mesh().interior_faces()[face];
        let (x, w) = self.points(space.mesh(), &f.vertex_ids, f.measure);
        let plus = self.traces(space, f.plus_cell, &x);
        let minus = self.traces(space, f.minus_cell, &x);
        FacePoints { x, w, plus, minus }
    }

    pub fn boundary(&self, space: &FeSpace, face: usize) -> FacePoints {
        let f = &space.mesh().boundary_faces()[face];
        let (x, w) = self.points(space.mesh(), &f.vertex_ids, f.measure);
        let plus = self.traces(space, f.cell, &x);
        FacePoints { x, w, plus, minus: Vec::new() }
    }
}
