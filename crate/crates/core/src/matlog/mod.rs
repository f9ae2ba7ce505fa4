//! Dense 2x2 and 3x3 real matrices: symmetric eigensolver, principal
//! logarithms, polar decomposition, and the matrix forms of the inequality.
//!
//! Matrices are stored row-major in a fixed 3x3 array with an active
//! dimension, so nothing in this module allocates.

mod eigen;
mod expm;
mod general;
mod spd;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{sym_eig, EigenDecomp};
pub use expm::expm;
pub use general::{log_real_diagonalizable, MAX_EIGENVECTOR_CONDITION};
pub use spd::{
    check_charpol, check_frobenius, geodesic_dist_iso_sq, hencky, log_spd, polar, rotation_from_quaternion,
    sqrt_spd, Polar,
};

/// Square real matrix of dimension 2 or 3.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    dim: usize,
    a: [[f64; 3]; 3],
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::arg(format!("matrix dimension must be 2 or 3, got {dim}")))
    }
}

impl Mat {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, a: [[0.0; 3]; 3] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.a[i][i] = 1.0;
        }
        Ok(m)
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(d.len())?;
        for (i, v) in d.iter().enumerate() {
            m.a[i][i] = *v;
        }
        m.ensure_finite()?;
        Ok(m)
    }

    /// From row arrays; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = Self::zeros(rows.len())?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != rows.len() {
                return Err(Error::arg(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    rows.len()
                )));
            }
            m.a[i][..row.len()].copy_from_slice(row);
        }
        m.ensure_finite()?;
        Ok(m)
    }

    pub fn from_rows3(rows: [[f64; 3]; 3]) -> Self {
        Self { dim: 3, a: rows }
    }

    pub fn from_rows2(rows: [[f64; 2]; 2]) -> Self {
        let mut a = [[0.0; 3]; 3];
        for i in 0..2 {
            a[i][..2].copy_from_slice(&rows[i]);
        }
        Self { dim: 2, a }
    }

    fn ensure_finite(&self) -> Result<()> {
        if self.entries().any(|v| !v.is_finite()) {
            return Err(Error::arg("matrix entries must be finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim, "index ({i}, {j}) out of range");
        self.a[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.dim && j < self.dim, "index ({i}, {j}) out of range");
        self.a[i][j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.a[i][..self.dim].to_vec()).collect()
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).flat_map(move |i| (0..self.dim).map(move |j| self.a[i][j]))
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] = f(self.a[i][j]);
            }
        }
        m
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] = f(self.a[i][j], other.a[i][j]);
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] = self.a[j][i];
            }
        }
        m
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.a[i][i]).sum()
    }

    pub fn det(&self) -> f64 {
        let a = &self.a;
        if self.dim == 2 {
            a[0][0] * a[1][1] - a[0][1] * a[1][0]
        } else {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
    }

    /// Sum of squared entries.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries().map(|v| v * v).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.a[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Cofactor matrix: entry `(i, j)` is the signed minor deleting row `i`
    /// and column `j`. Equals `det(M) M^-T` for invertible `M`.
    pub fn cof(&self) -> Self {
        let a = &self.a;
        if self.dim == 2 {
            return Self::from_rows2([[a[1][1], -a[1][0]], [-a[0][1], a[0][0]]]);
        }
        let mut c = [[0.0; 3]; 3];
        for (i, row) in c.iter_mut().enumerate() {
            let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
            for (j, v) in row.iter_mut().enumerate() {
                let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
                *v = a[i1][j1] * a[i2][j2] - a[i1][j2] * a[i2][j1];
            }
        }
        Self::from_rows3(c)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.dim;
        let mut m = self.a;
        let mut inv = Self::identity(n)?.a;
        let scale = self.norm1();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
                .expect("non-empty range");
            if m[pivot][col].abs() <= 1e-300_f64.max(f64::EPSILON * 1e-3 * scale) {
                return Err(Error::domain(format!("matrix is singular (det = {:e})", self.det())));
            }
            m.swap(col, pivot);
            inv.swap(col, pivot);
            let p = m[col][col];
            for j in 0..n {
                m[col][j] /= p;
                inv[col][j] /= p;
            }
            for r in 0..n {
                if r != col {
                    let f = m[r][col];
                    for j in 0..n {
                        m[r][j] -= f * m[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
        Ok(Self { dim: n, a: inv })
    }

    /// Solves `self * X = rhs`.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        Ok(self.inverse()? * *rhs)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let skew = (*self - self.transpose()).frobenius();
        skew <= rel_tol * self.frobenius()
    }

    /// Frobenius distance to the nearest matrix with orthonormal columns, as
    /// `||M^T M - I||_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        (self.transpose() * *self - Self::identity(self.dim).expect("valid dim")).frobenius()
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Self {
        m.rows()
    }
}

impl Add for Mat {
    type Output = Mat;
    fn add(self, rhs: Mat) -> Mat {
        self.zip(&rhs, |x, y| x + y)
    }
}

impl Sub for Mat {
    type Output = Mat;
    fn sub(self, rhs: Mat) -> Mat {
        self.zip(&rhs, |x, y| x - y)
    }
}

impl Neg for Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.map(|v| -v)
    }
}

impl Mul for Mat {
    type Output = Mat;
    fn mul(self, rhs: Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate().take(n) {
            for (j, v) in row.iter_mut().enumerate().take(n) {
                *v = (0..n).map(|k| self.a[i][k] * rhs.a[k][j]).sum();
            }
        }
        Mat { dim: n, a: out }
    }
}

impl Mul<f64> for Mat {
    type Output = Mat;
    fn mul(self, s: f64) -> Mat {
        self.scale(s)
    }
}

/// `X - tr(X)/3 I`, the trace-free part of a 3x3 matrix.
pub fn dev3(x: &Mat) -> Result<Mat> {
    if x.dim() != 3 {
        return Err(Error::arg(format!("dev3 needs a 3x3 matrix, got {0}x{0}", x.dim())));
    }
    Ok(*x - Mat::identity(3)?.scale(x.trace() / 3.0))
}

/// `(X + X^T) / 2`.
pub fn sym_part(x: &Mat) -> SymMat {
    SymMat::from_upper(&(*x + x.transpose()).scale(0.5))
}

/// `(X - X^T) / 2`.
pub fn skew_part(x: &Mat) -> Mat {
    (*x - x.transpose()).scale(0.5)
}

/// Symmetric matrix; only the upper triangle of the source is ever read.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMat(Mat);

/// Relative asymmetry accepted when parsing a symmetric matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

impl SymMat {
    /// Mirrors the upper triangle of `m`.
    pub fn from_upper(m: &Mat) -> Self {
        let mut s = *m;
        for i in 0..m.dim() {
            for j in 0..i {
                s.a[i][j] = m.a[j][i];
            }
        }
        SymMat(s)
    }

    /// Accepts `m` when `||m - m^T||_F <= rel_tol ||m||_F`.
    pub fn try_from_mat(m: &Mat, rel_tol: f64) -> Result<Self> {
        if !m.is_symmetric(rel_tol) {
            return Err(Error::arg(format!(
                "matrix is not symmetric: ||M - M^T||_F = {:e}",
                (*m - m.transpose()).frobenius()
            )));
        }
        Ok(Self::from_upper(m))
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        Ok(SymMat(Mat::diag(d)?))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(SymMat(Mat::identity(dim)?))
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `Q S Q^T`, re-symmetrised.
    pub fn congruence(&self, q: &Mat) -> Self {
        Self::from_upper(&(*q * self.0 * q.transpose()))
    }

    /// Eigendecomposition with every eigenvalue checked to be positive.
    pub fn spd_certificate(&self) -> Result<EigenDecomp> {
        let eig = sym_eig(self);
        let (hi, lo) = (eig.values[0], eig.values[self.dim() - 1]);
        if !(lo > 0.0) || lo <= 1e-15 * hi {
            return Err(Error::domain(format!(
                "matrix is not positive definite (eigenvalues {:?})",
                &eig.values[..self.dim()]
            )));
        }
        Ok(eig)
    }
}

impl fmt::Debug for SymMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::try_from_mat(&Mat::from_rows(&rows)?, SYMMETRY_TOL)
    }
}

impl From<SymMat> for Vec<Vec<f64>> {
    fn from(m: SymMat) -> Self {
        m.0.rows()
    }
}

impl From<SymMat> for Mat {
    fn from(m: SymMat) -> Self {
        m.0
    }
}
