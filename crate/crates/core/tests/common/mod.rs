//! Brute-force 2D oracles: tensor Gauss rules mapped onto triangles and
//! edges, independent of the library's quadrature tables.
#![allow(dead_code)]

use maviscid::linalg::{Mat3, Vec3};
use maviscid::space::{AnalyticFunction, FeFunction, PointEval};

/// 5-point Gauss-Legendre on [0, 1].
fn gl5() -> Vec<(f64, f64)> {
    let a = (5.0_f64 - 2.0 * (10.0_f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0_f64 + 2.0 * (10.0_f64 / 7.0).sqrt()).sqrt() / 3.0;
    let wa = (322.0 + 13.0 * 70.0_f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70.0_f64.sqrt()) / 900.0;
    [(-b, wb), (-a, wa), (0.0, 128.0 / 225.0), (a, wa), (b, wb)]
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Reference-triangle points and weights of the Duffy-collapsed 5x5 rule,
/// subdivided `levels` times into 4^levels similar triangles.
pub fn triangle_rule(levels: u32) -> Vec<([f64; 2], f64)> {
    let g = gl5();
    let mut base = Vec::new();
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            base.push(([u, v * (1.0 - u)], wu * wv * (1.0 - u)));
        }
    }
    let mut tris: Vec<[[f64; 2]; 3]> = vec![[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]];
    for _ in 0..levels {
        let mut next = Vec::new();
        for t in &tris {
            let m = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let (m01, m12, m02) = (m(t[0], t[1]), m(t[1], t[2]), m(t[0], t[2]));
            next.push([t[0], m01, m02]);
            next.push([m01, t[1], m12]);
            next.push([m02, m12, t[2]]);
            next.push([m12, m02, m01]);
        }
        tris = next;
    }
    let mut out = Vec::new();
    for t in &tris {
        let e1 = [t[1][0] - t[0][0], t[1][1] - t[0][1]];
        let e2 = [t[2][0] - t[0][0], t[2][1] - t[0][1]];
        let det = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        for (p, w) in &base {
            out.push(([t[0][0] + e1[0] * p[0] + e2[0] * p[1], t[0][1] + e1[1] * p[0] + e2[1] * p[1]], w * det));
        }
    }
    out
}

/// `sum_K int_K integrand(cell, xi, x) dx` over a 2D mesh.
pub fn integrate_cells(u: &FeFunction, levels: u32, integrand: impl Fn(usize, &Vec3, &Vec3) -> f64) -> f64 {
    let mesh = u.space().mesh();
    let rule = triangle_rule(levels);
    let mut total = 0.0;
    for k in 0..mesh.num_cells() {
        let g = mesh.geometry(k);
        let jac = g.volume(2) * 2.0;
        for (p, w) in &rule {
            let xi = [p[0], p[1], 0.0];
            total += w * jac * integrand(k, &xi, &g.map(&xi));
        }
    }
    total
}

/// Gauss points and weights along the segment `a -> b`.
pub fn segment_rule(a: &Vec3, b: &Vec3) -> Vec<(Vec3, f64)> {
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    gl5()
        .into_iter()
        .map(|(t, w)| ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0], w * len))
        .collect()
}

pub fn eval_at(u: &FeFunction, cell: usize, x: &Vec3) -> PointEval {
    let xi = u.space().mesh().geometry(cell).pullback(x);
    u.eval(cell, &xi).unwrap()
}

/// `int_{boundary} grad u · n` over a 2D mesh.
pub fn boundary_flux(u: &FeFunction) -> f64 {
    let mesh = u.space().mesh();
    let v = mesh.vertices();
    let mut total = 0.0;
    for f in mesh.boundary_faces() {
        for (x, w) in segment_rule(&v[f.vertex_ids[0]], &v[f.vertex_ids[1]]) {
            let e = eval_at(u, f.cell, &x);
            total += w * (e.grad[0] * f.normal[0] + e.grad[1] * f.normal[1]);
        }
    }
    total
}

/// `sum_F h_F^{-1} ||[grad u]||_F²` over interior faces of a 2D mesh.
pub fn jump_seminorm_sq(u: &FeFunction) -> f64 {
    let mesh = u.space().mesh();
    let v = mesh.vertices();
    let mut total = 0.0;
    for f in mesh.interior_faces() {
        for (x, w) in segment_rule(&v[f.vertex_ids[0]], &v[f.vertex_ids[1]]) {
            let a = eval_at(u, f.plus_cell, &x).grad;
            let b = eval_at(u, f.minus_cell, &x).grad;
            let j: f64 = (0..2).map(|i| (a[i] - b[i]).powi(2)).sum();
            total += w * j / f.diameter;
        }
    }
    total
}

pub fn frob_sq(m: &Mat3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum()
}

/// FE function with a single unit coefficient.
pub fn unit(u: &FeFunction, dof: usize) -> FeFunction {
    let mut c = vec![0.0; u.space().num_dofs()];
    c[dof] = 1.0;
    FeFunction::from_coefficients(u.space().clone(), c).unwrap()
}

/// `e^{|x|²/2}` with derivatives.
pub struct Gauss;

impl AnalyticFunction for Gauss {
    fn value(&self, x: &[f64]) -> f64 {
        (0.5 * x.iter().map(|t| t * t).sum::<f64>()).exp()
    }
    fn gradient(&self, x: &[f64]) -> Vec3 {
        let e = self.value(x);
        let mut g = [0.0; 3];
        for (i, t) in x.iter().enumerate() {
            g[i] = t * e;
        }
        g
    }
    fn hessian(&self, x: &[f64]) -> Mat3 {
        let e = self.value(x);
        let mut h = [[0.0; 3]; 3];
        for i in 0..x.len() {
            for j in 0..x.len() {
                h[i][j] = e * (x[i] * x[j] + if i == j { 1.0 } else { 0.0 });
            }
        }
        h
    }
}

pub struct Zero;

impl AnalyticFunction for Zero {
    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _: &[f64]) -> Vec3 {
        [0.0; 3]
    }
    fn hessian(&self, _: &[f64]) -> Mat3 {
        [[0.0; 3]; 3]
    }
}
