//! Small dense linear algebra for dimensions one and two.
//!
//! Points and vectors are `[f64; 2]`; in one dimension the second slot is
//! always zero.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn norm(a: &Point) -> f64 {
    a[0].hypot(a[1])
}

/// Converts a slice of length `dim` into a padded point.
pub fn point_from_slice(v: &[f64], dim: usize) -> Result<Point> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
    }
    let mut p = [0.0; 2];
    p[..dim].copy_from_slice(v);
    Ok(p)
}

/// Symmetric matrix of size one or two, stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat {
    dim: usize,
    xx: f64,
    xy: f64,
    yy: f64,
}

impl SymMat {
    pub fn new_1d(xx: f64) -> Self {
        SymMat { dim: 1, xx, xy: 0.0, yy: 0.0 }
    }

    pub fn new_2d(xx: f64, xy: f64, yy: f64) -> Self {
        SymMat { dim: 2, xx, xy, yy }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(dim, 1.0, 1.0)
    }

    pub fn diag(dim: usize, d0: f64, d1: f64) -> Self {
        if dim == 1 {
            Self::new_1d(d0)
        } else {
            Self::new_2d(d0, 0.0, d1)
        }
    }

    /// Builds from a row-major `dim x dim` list; rejects asymmetric input.
    pub fn from_row_major(values: &[f64], dim: usize) -> Result<Self> {
        match (dim, values) {
            (1, [v]) => Ok(Self::new_1d(*v)),
            (2, [a, b, c, d]) => {
                if (b - c).abs() > 1e-12 * (1.0 + b.abs().max(c.abs())) {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric: entries (0,1) = {b} and (1,0) = {c}"
                    )));
                }
                Ok(Self::new_2d(*a, 0.5 * (b + c), *d))
            }
            _ => Err(Error::DimensionMismatch { expected: dim * dim, got: values.len() }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            _ => self.xy,
        }
    }

    pub fn trace(&self) -> f64 {
        if self.dim == 1 {
            self.xx
        } else {
            self.xx + self.yy
        }
    }

    pub fn det(&self) -> f64 {
        if self.dim == 1 {
            self.xx
        } else {
            self.xx * self.yy - self.xy * self.xy
        }
    }

    /// Eigenvalues in ascending order (second equals first in 1D).
    pub fn eigenvalues(&self) -> (f64, f64) {
        if self.dim == 1 {
            return (self.xx, self.xx);
        }
        let mean = 0.5 * (self.xx + self.yy);
        let half_gap = 0.5 * (self.xx - self.yy);
        let radius = (half_gap * half_gap + self.xy * self.xy).sqrt();
        (mean - radius, mean + radius)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().1
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > 0.0
    }

    pub fn inverse(&self) -> Option<SymMat> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(if self.dim == 1 {
            Self::new_1d(1.0 / self.xx)
        } else {
            Self::new_2d(self.yy / det, -self.xy / det, self.xx / det)
        })
    }

    pub fn apply(&self, v: &Point) -> Point {
        if self.dim == 1 {
            [self.xx * v[0], 0.0]
        } else {
            [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
        }
    }

    pub fn quad(&self, v: &Point) -> f64 {
        dot(v, &self.apply(v))
    }

    pub fn add(&self, other: &SymMat) -> SymMat {
        SymMat { dim: self.dim, xx: self.xx + other.xx, xy: self.xy + other.xy, yy: self.yy + other.yy }
    }

    pub fn scale(&self, s: f64) -> SymMat {
        SymMat { dim: self.dim, xx: s * self.xx, xy: s * self.xy, yy: s * self.yy }
    }

    /// Max-entry norm of `self * other - I`.
    pub fn product_identity_deviation(&self, other: &SymMat) -> f64 {
        let p = Mat::from_sym(self).mul(&Mat::from_sym(other));
        p.max_abs_diff(&Mat::identity(self.dim))
    }
}

/// General square matrix of size one or two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat {
    dim: usize,
    m: [[f64; 2]; 2],
}

impl Mat {
    pub fn identity(dim: usize) -> Self {
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate().take(dim) {
            row[i] = 1.0;
        }
        Mat { dim, m }
    }

    pub fn from_row_major(values: &[f64], dim: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) || values.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: values.len() });
        }
        let mut m = [[0.0; 2]; 2];
        for i in 0..dim {
            for j in 0..dim {
                m[i][j] = values[i * dim + j];
            }
        }
        Ok(Mat { dim, m })
    }

    /// Counter-clockwise planar rotation.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat { dim: 2, m: [[c, -s], [s, c]] }
    }

    fn from_sym(s: &SymMat) -> Self {
        Mat { dim: s.dim, m: [[s.xx, s.xy], [s.xy, s.yy]] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn transpose(&self) -> Mat {
        let mut m = self.m;
        m[0][1] = self.m[1][0];
        m[1][0] = self.m[0][1];
        Mat { dim: self.dim, m }
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        let mut m = [[0.0; 2]; 2];
        for (i, row) in m.iter_mut().enumerate().take(self.dim) {
            for (j, entry) in row.iter_mut().enumerate().take(self.dim) {
                *entry = (0..self.dim).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Mat { dim: self.dim, m }
    }

    pub fn pow(&self, exp: usize) -> Mat {
        (0..exp).fold(Mat::identity(self.dim), |acc, _| acc.mul(self))
    }

    pub fn apply(&self, v: &Point) -> Point {
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = (0..self.dim).map(|k| self.m[i][k] * v[k]).sum();
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }
}
