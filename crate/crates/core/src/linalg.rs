//! Fixed-size dense helpers for points, gradients and Hessians.
//!
//! Everything is stored in 3-component arrays; 2D quantities leave the third
//! row/column at zero so the same code path serves both dimensions.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const ZERO3: Vec3 = [0.0; 3];
pub const ZERO33: Mat3 = [[0.0; 3]; 3];

pub fn identity(dim: usize) -> Mat3 {
    let mut m = ZERO33;
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

#[inline]
pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `m * v`
#[inline]
pub fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// `mᵀ * v`
#[inline]
pub fn mat_t_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = ZERO33;
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn transpose(a: &Mat3) -> Mat3 {
    let mut t = ZERO33;
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

/// Frobenius product `a : b`.
#[inline]
pub fn frobenius(a: &Mat3, b: &Mat3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        s += dot(&a[i], &b[i]);
    }
    s
}

#[inline]
pub fn trace(a: &Mat3) -> f64 {
    a[0][0] + a[1][1] + a[2][2]
}

pub fn determinant(a: &Mat3, dim: usize) -> f64 {
    match dim {
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
    }
}

/// Cofactor matrix: `cof(a)[i][j] = (-1)^(i+j) * minor(i, j)`.
pub fn cofactor(a: &Mat3, dim: usize) -> Mat3 {
    let mut c = ZERO33;
    match dim {
        1 => c[0][0] = 1.0,
        2 => {
            c[0][0] = a[1][1];
            c[0][1] = -a[1][0];
            c[1][0] = -a[0][1];
            c[1][1] = a[0][0];
        }
        _ => {
            for i in 0..3 {
                for j in 0..3 {
                    let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
                    let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                    // cyclic indexing already carries the (-1)^(i+j) sign
                    c[i][j] = a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1];
                }
            }
        }
    }
    c
}

/// Inverse of a nonsingular matrix; returns `None` when `|det| == 0`.
pub fn inverse(a: &Mat3, dim: usize) -> Option<(Mat3, f64)> {
    let det = determinant(a, dim);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let cof = cofactor(a, dim);
    let mut inv = ZERO33;
    for i in 0..dim {
        for j in 0..dim {
            inv[i][j] = cof[j][i] / det;
        }
    }
    Some((inv, det))
}

pub fn max_abs_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Dot product accumulated with error-free transformations; the result is
/// as accurate as if computed in twice the working precision.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedDot {
    sum: f64,
    err: f64,
}

impl CompensatedDot {
    #[inline]
    pub fn add(&mut self, a: f64, b: f64) {
        let p = a * b;
        let ep = a.mul_add(b, -p);
        let s = self.sum + p;
        let z = s - self.sum;
        let es = (self.sum - (s - z)) + (p - z);
        self.sum = s;
        self.err += ep + es;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.err
    }
}
