//! Sorted real tuples, elementary symmetric polynomials, classical means and
//! majorization.
//!
//! Both tuple types are stored in non-increasing order, so every operation in
//! this crate is permutation invariant by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total sums for [`majorizes`].
pub const MAJORIZATION_SUM_TOL: f64 = 1e-9;

fn sort_desc(values: &mut [f64]) {
    values.sort_by(|a, b| b.total_cmp(a));
}

/// Strictly positive reals, length at least 2, sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PositiveTuple {
    values: Vec<f64>,
}

impl PositiveTuple {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::arg(format!(
                "tuple needs at least 2 entries, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::arg(format!(
                "tuple entries must be finite and > 0, got {bad}"
            )));
        }
        sort_desc(&mut values);
        Ok(Self { values })
    }

    /// Builds `(exp z_1, ..., exp z_n)`.
    pub fn from_logs(logs: &[f64]) -> Result<Self> {
        Self::new(logs.iter().map(|z| z.exp()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Natural logarithms of the entries (already sorted).
    pub fn logs(&self) -> LogTuple {
        LogTuple::from_sorted(self.values.iter().map(|v| v.ln()).collect())
    }

    /// Entrywise map that keeps positivity (squares, square roots, inverses).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub(crate) fn expect_len(&self, n: usize, what: &str) -> Result<()> {
        if self.len() != n {
            return Err(Error::arg(format!(
                "{what} needs tuples of length {n}, got {}",
                self.len()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for PositiveTuple {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<PositiveTuple> for Vec<f64> {
    fn from(t: PositiveTuple) -> Self {
        t.values
    }
}

/// Finite reals, length at least 2, sorted non-increasing, with cached sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LogTuple {
    values: Vec<f64>,
    sum: f64,
}

impl LogTuple {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::arg(format!(
                "tuple needs at least 2 entries, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::arg(format!("tuple entries must be finite, got {bad}")));
        }
        sort_desc(&mut values);
        Ok(Self::from_sorted(values))
    }

    fn from_sorted(values: Vec<f64>) -> Self {
        let sum = values.iter().sum();
        Self { values, sum }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn sum_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `sum_i exp(s * v_i)`; `s = 1` and `s = -1` give the two exponential sums.
    pub fn exp_sum(&self, s: f64) -> f64 {
        self.values.iter().map(|v| (s * v).exp()).sum()
    }

    /// `sum_i |v_i|`, the floating-point scale of [`LogTuple::sum`].
    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| k * v).collect())
    }

    pub fn exp(&self) -> Result<PositiveTuple> {
        PositiveTuple::from_logs(&self.values)
    }

    pub(crate) fn expect_len(&self, n: usize, what: &str) -> Result<()> {
        if self.len() != n {
            return Err(Error::arg(format!(
                "{what} needs tuples of length {n}, got {}",
                self.len()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for LogTuple {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<LogTuple> for Vec<f64> {
    fn from(t: LogTuple) -> Self {
        t.values
    }
}

/// All coefficients `e_0..=e_n` of `prod (X + t_i)`, built one factor at a time.
pub fn elem_sym_all(values: &[f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; values.len() + 1];
    coeffs[0] = 1.0;
    for (i, &t) in values.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            coeffs[j] += t * coeffs[j - 1];
        }
    }
    coeffs
}

/// Elementary symmetric polynomial `e_k(t)`, `0 <= k <= n`.
pub fn elem_sym(k: usize, t: &PositiveTuple) -> Result<f64> {
    let n = t.len();
    if k > n {
        return Err(Error::arg(format!("elem_sym order {k} exceeds length {n}")));
    }
    let mut coeffs = vec![0.0; k + 1];
    coeffs[0] = 1.0;
    for (i, &v) in t.values().iter().enumerate() {
        for j in (1..=(i + 1).min(k)).rev() {
            coeffs[j] += v * coeffs[j - 1];
        }
    }
    Ok(coeffs[k])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Means {
    pub arithmetic: f64,
    pub harmonic: f64,
    pub geometric: f64,
    pub quadratic: f64,
}

/// Arithmetic, harmonic, geometric and quadratic means.
///
/// The geometric mean is evaluated as `exp(mean(log t))`, which equals
/// `e_n^(1/n)` without overflowing for long or wide tuples.
pub fn means(t: &PositiveTuple) -> Means {
    let v = t.values();
    let n = v.len() as f64;
    Means {
        arithmetic: v.iter().sum::<f64>() / n,
        harmonic: n / v.iter().map(|x| 1.0 / x).sum::<f64>(),
        geometric: (v.iter().map(|x| x.ln()).sum::<f64>() / n).exp(),
        quadratic: (v.iter().map(|x| x * x).sum::<f64>() / n).sqrt(),
    }
}

/// Whether `z` majorizes `c`: every leading partial sum of `z` dominates the
/// corresponding one of `c`. Equal totals are a precondition.
pub fn majorizes(z: &LogTuple, c: &LogTuple) -> Result<bool> {
    if z.len() != c.len() {
        return Err(Error::arg(format!(
            "majorization needs equal lengths, got {} and {}",
            z.len(),
            c.len()
        )));
    }
    if (z.sum() - c.sum()).abs() > MAJORIZATION_SUM_TOL {
        return Err(Error::arg(format!(
            "majorization undefined for unequal sums {} and {}",
            z.sum(),
            c.sum()
        )));
    }
    let (mut pz, mut pc) = (0.0, 0.0);
    for (zi, ci) in z.values().iter().zip(c.values()).take(z.len() - 1) {
        pz += zi;
        pc += ci;
        if pz < pc {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Karamata's conclusion for `f(t) = t^2`: `sum z_i^2 >= sum c_i^2`.
pub fn karamata_dominance_sumsq(z: &LogTuple, c: &LogTuple) -> Result<bool> {
    if z.len() != c.len() {
        return Err(Error::arg(format!(
            "length mismatch {} vs {}",
            z.len(),
            c.len()
        )));
    }
    Ok(z.sum_sq() >= c.sum_sq())
}

/// `sum (log t_i)^2`.
pub fn sum_sq_log(t: &PositiveTuple) -> f64 {
    t.values().iter().map(|v| v.ln().powi(2)).sum()
}
