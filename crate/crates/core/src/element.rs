//! Lagrange `P_k` reference elements on simplices.
//!
//! Each basis function is stored as a product of `k` affine factors in the
//! barycentric coordinates, so values, gradients and Hessians are exact
//! polynomial evaluations with no linear solve involved.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3, ZERO3, ZERO33};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BasisValue {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Mat3,
}

/// One affine factor `(k * lambda_i - shift) / denom`.
#[derive(Debug, Clone, Copy)]
struct Factor {
    lambda: usize,
    shift: f64,
    denom: f64,
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    dim: usize,
    degree: usize,
    nodes: Vec<Vec3>,
    factors: Vec<Vec<Factor>>,
}

impl ReferenceElement {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidArgument(format!("element dimension must be 2 or 3, got {dim}")));
        }
        if degree != 2 && degree != 3 {
            return Err(Error::InvalidArgument(format!("element degree must be 2 or 3, got {degree}")));
        }
        let mut nodes = Vec::new();
        let mut factors = Vec::new();
        for alpha in multi_indices(dim + 1, degree) {
            let mut xi = ZERO3;
            for j in 0..dim {
                xi[j] = alpha[j + 1] as f64 / degree as f64;
            }
            nodes.push(xi);
            let mut f = Vec::with_capacity(degree);
            for (i, &a) in alpha.iter().enumerate() {
                for j in 0..a {
                    f.push(Factor { lambda: i, shift: j as f64, denom: (j + 1) as f64 });
                }
            }
            factors.push(f);
        }
        Ok(ReferenceElement { dim, degree, nodes, factors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    fn lambda(&self, xi: &Vec3, i: usize) -> f64 {
        if i == 0 {
            1.0 - xi[..self.dim].iter().sum::<f64>()
        } else {
            xi[i - 1]
        }
    }

    fn lambda_grad(&self, i: usize) -> Vec3 {
        let mut g = ZERO3;
        if i == 0 {
            for gj in g.iter_mut().take(self.dim) {
                *gj = -1.0;
            }
        } else {
            g[i - 1] = 1.0;
        }
        g
    }

    /// Values, reference gradients and reference Hessians of every basis
    /// function at `xi`.
    pub fn eval_into(&self, xi: &Vec3, out: &mut [BasisValue]) {
        let k = self.degree as f64;
        let mut vals = [0.0; 3];
        let mut grads = [ZERO3; 3];
        for (b, fs) in self.factors.iter().enumerate() {
            let m = fs.len();
            for (t, f) in fs.iter().enumerate() {
                vals[t] = (k * self.lambda(xi, f.lambda) - f.shift) / f.denom;
                let g = self.lambda_grad(f.lambda);
                for c in 0..3 {
                    grads[t][c] = k * g[c] / f.denom;
                }
            }
            let mut value = 1.0;
            for v in &vals[..m] {
                value *= v;
            }
            let mut grad = ZERO3;
            let mut hess = ZERO33;
            for p in 0..m {
                let others: f64 = (0..m).filter(|&q| q != p).map(|q| vals[q]).product();
                for c in 0..3 {
                    grad[c] += grads[p][c] * others;
                }
                for q in 0..m {
                    if q == p {
                        continue;
                    }
                    let rest: f64 = (0..m).filter(|&r| r != p && r != q).map(|r| vals[r]).product();
                    for r in 0..3 {
                        for c in 0..3 {
                            hess[r][c] += grads[p][r] * grads[q][c] * rest;
                        }
                    }
                }
            }
            out[b] = BasisValue { value, grad, hess };
        }
    }

    pub fn eval(&self, xi: &Vec3) -> Vec<BasisValue> {
        let mut out = vec![BasisValue::default(); self.num_nodes()];
        self.eval_into(xi, &mut out);
        out
    }
}

/// All `n`-component multi-indices of total order `k`, in lexicographic order.
fn multi_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in multi_indices(n - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
