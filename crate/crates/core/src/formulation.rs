//! Hypothesis/conclusion checkers for the equivalent forms of the
//! sum-of-squared-logarithms inequality.
//!
//! Every checker returns a [`HypothesisReport`] with signed margins rather than
//! a bare verdict. A positive margin always means "satisfied with room to
//! spare"; this includes the harmonic-mean line, whose direction is reversed
//! relative to the arithmetic one.
//!
//! Inequality lines hold when `margin >= -tolerance.ineq * scale`, where
//! `scale` is the larger magnitude of the two compared sides. Equality lines
//! are reported as relative defects and hold when `|defect| <= tolerance.eq`.
//! The conclusion uses the same rule as an inequality line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symtuple::{elem_sym, elem_sym_all, means, sum_sq_log, LogTuple, PositiveTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Trace, trace of cofactor and determinant of SPD matrices.
    CharPol,
    /// `e1`, `e2` dominance of positive triples with equal products.
    Tuple3,
    /// `e1..e_{n-1}` dominance with equal `e_n`, any length.
    ElemSym,
    /// Sum and sum of reciprocals.
    InverseSum,
    /// Arithmetic, harmonic (reversed) and geometric means.
    Means,
    /// Squared variables `x_i^2`, `d_i^2`; also the two-entry case.
    Squared,
    /// Frobenius norms of SPD matrices and their inverses.
    FrobNorm,
    /// Exponential sums of logarithms with equal totals.
    Exp,
    /// Exponential sums with both totals zero.
    ExpZeroSum,
}

impl Formulation {
    pub const ALL: [Formulation; 9] = [
        Formulation::CharPol,
        Formulation::Tuple3,
        Formulation::ElemSym,
        Formulation::InverseSum,
        Formulation::Means,
        Formulation::Squared,
        Formulation::FrobNorm,
        Formulation::Exp,
        Formulation::ExpZeroSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formulation::CharPol => "charpol",
            Formulation::Tuple3 => "tuple3",
            Formulation::ElemSym => "elem_sym",
            Formulation::InverseSum => "inverse_sum",
            Formulation::Means => "means",
            Formulation::Squared => "squared",
            Formulation::FrobNorm => "frob_norm",
            Formulation::Exp => "exp",
            Formulation::ExpZeroSum => "exp_zero_sum",
        }
    }
}

/// Relative slack for inequality lines (`ineq`) and equality lines (`eq`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub ineq: f64,
    pub eq: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { ineq: 1e-12, eq: 1e-12 }
    }
}

impl Tolerance {
    pub fn new(ineq: f64, eq: f64) -> Result<Self> {
        if !(ineq >= 0.0 && eq >= 0.0 && ineq.is_finite() && eq.is_finite()) {
            return Err(Error::arg(format!(
                "tolerances must be finite and >= 0, got ineq={ineq} eq={eq}"
            )));
        }
        Ok(Self { ineq, eq })
    }

    pub fn uniform(tol: f64) -> Result<Self> {
        Self::new(tol, tol)
    }
}

/// Outcome of checking one formulation on one pair of inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub formulation: Formulation,
    /// `lhs - rhs` for each inequality hypothesis, positive = satisfied.
    pub margins: Vec<f64>,
    /// `max(|lhs|, |rhs|)` for each entry of `margins`.
    pub margin_scales: Vec<f64>,
    /// Relative defects of the equality hypotheses.
    pub equality_defects: Vec<f64>,
    pub hypotheses_hold: bool,
    /// Squared-log sum of the first argument minus that of the second.
    pub conclusion_margin: f64,
    pub conclusion_scale: f64,
    pub conclusion_holds: bool,
    pub tolerance: Tolerance,
    /// Conditions implied by the hypotheses, reported for inspection only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derived_margins: Vec<f64>,
}

impl HypothesisReport {
    /// Margins divided by their scales (zero where the scale vanishes).
    pub fn relative_margins(&self) -> Vec<f64> {
        self.margins
            .iter()
            .zip(&self.margin_scales)
            .map(|(m, s)| if *s > 0.0 { m / s } else { 0.0 })
            .collect()
    }

    /// Smallest relative margin, `+inf` when there are no inequality lines.
    pub fn min_relative_margin(&self) -> f64 {
        self.relative_margins().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Hypotheses hold but the conclusion fails.
    pub fn contradicts_theorem(&self) -> bool {
        self.hypotheses_hold && !self.conclusion_holds
    }
}

/// Accumulates hypothesis lines and evaluates them against a tolerance.
#[derive(Debug, Clone)]
pub(crate) struct ReportBuilder {
    formulation: Formulation,
    tol: Tolerance,
    margins: Vec<f64>,
    scales: Vec<f64>,
    defects: Vec<f64>,
    derived: Vec<f64>,
}

impl ReportBuilder {
    pub(crate) fn new(formulation: Formulation, tol: Tolerance) -> Self {
        Self {
            formulation,
            tol,
            margins: Vec::new(),
            scales: Vec::new(),
            defects: Vec::new(),
            derived: Vec::new(),
        }
    }

    /// Hypothesis `lhs >= rhs`.
    pub(crate) fn at_least(mut self, lhs: f64, rhs: f64) -> Self {
        self.margins.push(lhs - rhs);
        self.scales.push(lhs.abs().max(rhs.abs()));
        self
    }

    /// Hypothesis `lhs == rhs`, defect relative to the larger side.
    pub(crate) fn equal(self, lhs: f64, rhs: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        self.equal_scaled(lhs, rhs, scale)
    }

    /// Hypothesis `lhs == rhs`, defect relative to an explicit scale.
    pub(crate) fn equal_scaled(mut self, lhs: f64, rhs: f64, scale: f64) -> Self {
        let diff = lhs - rhs;
        self.defects.push(if scale > 0.0 { diff / scale } else { diff });
        self
    }

    pub(crate) fn derived(mut self, margin: f64) -> Self {
        self.derived.push(margin);
        self
    }

    /// Conclusion `lhs >= rhs`.
    pub(crate) fn conclude(self, lhs: f64, rhs: f64) -> HypothesisReport {
        let tol = self.tol;
        let ineq_ok = self
            .margins
            .iter()
            .zip(&self.scales)
            .all(|(m, s)| *m >= -tol.ineq * s);
        let eq_ok = self.defects.iter().all(|d| d.abs() <= tol.eq);
        let conclusion_margin = lhs - rhs;
        let conclusion_scale = lhs.abs().max(rhs.abs());
        HypothesisReport {
            formulation: self.formulation,
            margins: self.margins,
            margin_scales: self.scales,
            equality_defects: self.defects,
            hypotheses_hold: ineq_ok && eq_ok,
            conclusion_margin,
            conclusion_scale,
            conclusion_holds: conclusion_margin >= -tol.ineq * conclusion_scale,
            tolerance: tol,
            derived_margins: self.derived,
        }
    }
}

fn product(t: &PositiveTuple) -> f64 {
    t.values().iter().product()
}

fn reciprocal_sum(t: &PositiveTuple) -> f64 {
    t.values().iter().map(|v| 1.0 / v).sum()
}

fn sum(t: &PositiveTuple) -> f64 {
    t.values().iter().sum()
}

/// `e1`, `e2` dominance and equal products for positive triples.
pub fn check_tuple3(y: &PositiveTuple, a: &PositiveTuple, tol: Tolerance) -> Result<HypothesisReport> {
    y.expect_len(3, "tuple3")?;
    a.expect_len(3, "tuple3")?;
    let (ey, ea) = (elem_sym_all(y.values()), elem_sym_all(a.values()));
    Ok(ReportBuilder::new(Formulation::Tuple3, tol)
        .at_least(ey[1], ea[1])
        .at_least(ey[2], ea[2])
        .equal(ey[3], ea[3])
        .conclude(sum_sq_log(y), sum_sq_log(a)))
}

/// `e_i(y) >= e_i(a)` for `i < n` and `e_n(y) = e_n(a)`, any common length `n >= 2`.
pub fn check_elem_sym(y: &PositiveTuple, a: &PositiveTuple, tol: Tolerance) -> Result<HypothesisReport> {
    let n = y.len();
    a.expect_len(n, "elem_sym")?;
    let (ey, ea) = (elem_sym_all(y.values()), elem_sym_all(a.values()));
    let mut b = ReportBuilder::new(Formulation::ElemSym, tol);
    for k in 1..n {
        b = b.at_least(ey[k], ea[k]);
    }
    Ok(b.equal(ey[n], ea[n]).conclude(sum_sq_log(y), sum_sq_log(a)))
}

/// Sum and reciprocal-sum dominance with equal products.
pub fn check_inverse_sum(y: &PositiveTuple, a: &PositiveTuple, tol: Tolerance) -> Result<HypothesisReport> {
    y.expect_len(3, "inverse_sum")?;
    a.expect_len(3, "inverse_sum")?;
    Ok(ReportBuilder::new(Formulation::InverseSum, tol)
        .at_least(sum(y), sum(a))
        .at_least(reciprocal_sum(y), reciprocal_sum(a))
        .equal(product(y), product(a))
        .conclude(sum_sq_log(y), sum_sq_log(a)))
}

/// `A(y) >= A(a)`, `H(a) >= H(y)` and `G(y) = G(a)`.
///
/// The second margin is `H(a) - H(y)`: the harmonic mean of the dominating
/// tuple is the smaller one.
pub fn check_means(y: &PositiveTuple, a: &PositiveTuple, tol: Tolerance) -> Result<HypothesisReport> {
    y.expect_len(3, "means")?;
    a.expect_len(3, "means")?;
    let (my, ma) = (means(y), means(a));
    // 3 * (Q(log y)^2 - Q(log a)^2) is the squared-log difference itself.
    Ok(ReportBuilder::new(Formulation::Means, tol)
        .at_least(my.arithmetic, ma.arithmetic)
        .at_least(ma.harmonic, my.harmonic)
        .equal(my.geometric, ma.geometric)
        .conclude(sum_sq_log(y), sum_sq_log(a)))
}

/// Hypotheses on the squares `x_i^2`, `d_i^2`, conclusion on the unsquared
/// variables: `sum (log x_i)^2 >= sum (log d_i)^2`.
///
/// Substituting `y = x^2` multiplies the squared-log sums by 4, so the
/// conclusion margin here is a quarter of [`check_tuple3`] on the squares.
pub fn check_squared(x: &PositiveTuple, d: &PositiveTuple, tol: Tolerance) -> Result<HypothesisReport> {
    x.expect_len(3, "squared")?;
    d.expect_len(3, "squared")?;
    let xs = x.map(|v| v * v)?;
    let ds = d.map(|v| v * v)?;
    Ok(ReportBuilder::new(Formulation::Squared, tol)
        .at_least(sum(&xs), sum(&ds))
        .at_least(elem_sym(2, &xs)?, elem_sym(2, &ds)?)
        .equal(product(x), product(d))
        .conclude(sum_sq_log(x), sum_sq_log(d)))
}

/// Two-entry version: `x1^2 + x2^2 >= d1^2 + d2^2` and `x1 x2 = d1 d2`.
///
/// The reciprocal condition `1/x1^2 + 1/x2^2 >= 1/d1^2 + 1/d2^2` follows from
/// the other two and is reported in `derived_margins`. In two dimensions the
/// second characteristic coefficient is the determinant, so there is no
/// separate `e2` line.
pub fn check_2d(x: &PositiveTuple, d: &PositiveTuple, tol: Tolerance) -> Result<HypothesisReport> {
    x.expect_len(2, "2d")?;
    d.expect_len(2, "2d")?;
    let sq = |t: &PositiveTuple| t.values().iter().map(|v| v * v).sum::<f64>();
    let inv_sq = |t: &PositiveTuple| t.values().iter().map(|v| 1.0 / (v * v)).sum::<f64>();
    Ok(ReportBuilder::new(Formulation::Squared, tol)
        .at_least(sq(x), sq(d))
        .equal(product(x), product(d))
        .derived(inv_sq(x) - inv_sq(d))
        .conclude(sum_sq_log(x), sum_sq_log(d)))
}

fn check_sums_match(z: &LogTuple, c: &LogTuple, tol: Tolerance) -> Result<f64> {
    let scale = z.abs_sum().max(c.abs_sum());
    if (z.sum() - c.sum()).abs() > tol.eq * scale {
        return Err(Error::arg(format!(
            "exponential form needs equal sums, got {} and {}",
            z.sum(),
            c.sum()
        )));
    }
    Ok(scale)
}

fn exp_report(z: &LogTuple, c: &LogTuple, tol: Tolerance, id: Formulation, scale: f64) -> HypothesisReport {
    ReportBuilder::new(id, tol)
        .at_least(z.exp_sum(1.0), c.exp_sum(1.0))
        .at_least(z.exp_sum(-1.0), c.exp_sum(-1.0))
        .equal_scaled(z.sum(), c.sum(), scale)
        .conclude(z.sum_sq(), c.sum_sq())
}

/// `sum e^z >= sum e^c`, `sum e^-z >= sum e^-c` with `sum z = sum c`;
/// conclusion `sum z^2 >= sum c^2`.
pub fn check_exp(z: &LogTuple, c: &LogTuple, tol: Tolerance) -> Result<HypothesisReport> {
    z.expect_len(3, "exp")?;
    c.expect_len(3, "exp")?;
    let scale = check_sums_match(z, c, tol)?;
    Ok(exp_report(z, c, tol, Formulation::Exp, scale))
}

/// [`check_exp`] restricted to inputs whose sums are both zero.
pub fn check_exp_zero_sum(z: &LogTuple, c: &LogTuple, tol: Tolerance) -> Result<HypothesisReport> {
    z.expect_len(3, "exp_zero_sum")?;
    c.expect_len(3, "exp_zero_sum")?;
    for t in [z, c] {
        if t.sum().abs() > tol.eq * t.abs_sum() {
            return Err(Error::arg(format!("expected a zero-sum tuple, sum is {}", t.sum())));
        }
    }
    let scale = check_sums_match(z, c, tol)?;
    Ok(exp_report(z, c, tol, Formulation::ExpZeroSum, scale))
}

/// Shifts a tuple by its mean so that it sums to zero.
///
/// For two tuples with equal sums the shift is the same, and
/// `sum (z_i - m)^2 - sum (c_i - m)^2 = sum z_i^2 - sum c_i^2`.
pub fn normalize_sum_zero(z: &LogTuple) -> LogTuple {
    let mean = z.sum() / z.len() as f64;
    if mean == 0.0 {
        return z.clone();
    }
    LogTuple::new(z.values().iter().map(|v| v - mean).collect())
        .expect("shifting finite values keeps them finite")
}
