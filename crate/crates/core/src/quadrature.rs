//! Quadrature on reference simplices by collapsed (Duffy) tensor Gauss rules.
//!
//! Reference simplices: `[0,1]` in 1D, `{x, y >= 0, x + y <= 1}` in 2D and the
//! unit corner tetrahedron in 3D. All weights are positive.

use crate::error::{Error, Result};
use crate::linalg::Vec3;

/// Highest supported exactness per simplex dimension (index = dimension).
pub const MAX_EXACTNESS: [usize; 4] = [0, 40, 20, 16];

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Measure of the reference simplex.
    pub fn reference_measure(dim: usize) -> f64 {
        match dim {
            0 => 1.0,
            1 => 1.0,
            2 => 0.5,
            _ => 1.0 / 6.0,
        }
    }

    pub fn integrate(&self, f: impl Fn(&Vec3) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Rule on the reference simplex of dimension `dim` (0..=3) exact for
/// polynomials of total degree `exactness`.
pub fn simplex_quadrature(dim: usize, exactness: usize) -> Result<QuadratureRule> {
    if dim > 3 {
        return Err(Error::InvalidArgument(format!("no simplex rule in dimension {dim}")));
    }
    if exactness == 0 || exactness > MAX_EXACTNESS[dim].max(1) {
        return Err(Error::UnsupportedQuadrature { dim, exactness, max: MAX_EXACTNESS[dim] });
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        0 => {
            points.push([0.0; 3]);
            weights.push(1.0);
        }
        1 => {
            let (x, w) = gauss_legendre((exactness + 1).div_ceil(2));
            for (xi, wi) in x.iter().zip(&w) {
                points.push([*xi, 0.0, 0.0]);
                weights.push(*wi);
            }
        }
        2 => {
            let (x, w) = gauss_legendre((exactness + 2).div_ceil(2));
            for (u, wu) in x.iter().zip(&w) {
                for (v, wv) in x.iter().zip(&w) {
                    points.push([*u, (1.0 - u) * v, 0.0]);
                    weights.push(wu * wv * (1.0 - u));
                }
            }
        }
        _ => {
            let (x, w) = gauss_legendre((exactness + 3).div_ceil(2));
            for (u, wu) in x.iter().zip(&w) {
                for (v, wv) in x.iter().zip(&w) {
                    for (t, wt) in x.iter().zip(&w) {
                        points.push([*u, (1.0 - u) * v, (1.0 - u) * (1.0 - v) * t]);
                        weights.push(wu * wv * wt * (1.0 - u) * (1.0 - u) * (1.0 - v));
                    }
                }
            }
        }
    }
    Ok(QuadratureRule { dim, points, weights, exactness })
}

/// Cell rule for a mesh of dimension `dim`.
pub fn cell_quadrature(dim: usize, exactness: usize) -> Result<QuadratureRule> {
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidArgument(format!("cell dimension must be 2 or 3, got {dim}")));
    }
    simplex_quadrature(dim, exactness)
}

/// Rule on the reference face of a mesh of dimension `dim`.
pub fn face_quadrature(dim: usize, exactness: usize) -> Result<QuadratureRule> {
    if dim != 2 && dim != 3 {
        return Err(Error::InvalidArgument(format!("cell dimension must be 2 or 3, got {dim}")));
    }
    simplex_quadrature(dim - 1, exactness)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// ∫ x^a y^b z^c over the reference simplex = a! b! c! / (a+b+c+d)!
    fn monomial_exact(dim: usize, e: [u32; 3]) -> f64 {
        let s: u32 = e[..dim].iter().sum();
        e[..dim].iter().map(|&k| factorial(k)).product::<f64>() / factorial(s + dim as u32)
    }

    #[test]
    fn gauss_legendre_matches_known_rule() {
        let (x, w) = gauss_legendre(2);
        let a = 0.5 - 0.5 / 3f64.sqrt();
        assert!((x[0] - a).abs() < 1e-15 && (x[1] - (1.0 - a)).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn centroid_rule_integrates_x() {
        let q = cell_quadrature(2, 1).unwrap();
        assert!((q.integrate(|p| p[0]) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn known_moments() {
        let q = cell_quadrature(2, 4).unwrap();
        assert!((q.integrate(|p| p[0].powi(2) * p[1].powi(2)) - 1.0 / 180.0).abs() < 1e-15);
        let q = cell_quadrature(3, 2).unwrap();
        assert!((q.integrate(|p| p[0] * p[1]) - 1.0 / 120.0).abs() < 1e-15);
    }

    #[test]
    fn all_monomials_up_to_exactness() {
        for dim in 1..=3usize {
            for p in 1..=MAX_EXACTNESS[dim].min(12) {
                let q = simplex_quadrature(dim, p).unwrap();
                assert!(q.weights.iter().all(|&w| w > 0.0));
                let wsum: f64 = q.weights.iter().sum();
                assert!((wsum - QuadratureRule::reference_measure(dim)).abs() < 1e-14);
                for a in 0..=p as u32 {
                    for b in 0..=(if dim > 1 { p as u32 - a } else { 0 }) {
                        for c in 0..=(if dim > 2 { p as u32 - a - b } else { 0 }) {
                            let got = q.integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32));
                            let exact = monomial_exact(dim, [a, b, c]);
                            assert!((got - exact).abs() < 1e-12 * exact.max(1e-3), "dim {dim} p {p} ({a},{b},{c})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unsupported_exactness() {
        assert!(matches!(cell_quadrature(2, 0), Err(Error::UnsupportedQuadrature { .. })));
        assert!(matches!(cell_quadrature(2, 21), Err(Error::UnsupportedQuadrature { .. })));
        assert!(matches!(cell_quadrature(3, 17), Err(Error::UnsupportedQuadrature { .. })));
        assert!(cell_quadrature(2, 10).is_ok() && cell_quadrature(3, 8).is_ok());
        assert!(face_quadrature(3, 6).unwrap().dim == 2);
    }
}
