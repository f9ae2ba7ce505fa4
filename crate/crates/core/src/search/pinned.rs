//! Fixed inputs showing that no hypothesis of the inequality can be dropped
//! or weakened, plus an admissible pair that is not a majorization.

use std::f64::consts::E;

use serde::Serialize;

use crate::error::Result;
use crate::formulation::{check_elem_sym, check_exp, check_tuple3, HypothesisReport, Tolerance};
use crate::symtuple::{majorizes, LogTuple, PositiveTuple};

/// Relative tolerance for matching a pinned value.
pub const PINNED_REL_TOL: f64 = 1e-12;

/// Expected outcome of each hypothesis line and of the conclusion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedPattern {
    /// One entry per inequality hypothesis, `true` when it should hold.
    pub hypotheses: Vec<bool>,
    pub equality_holds: bool,
    pub conclusion_holds: bool,
}

/// A derived quantity with its expected value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinnedValue {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    /// Absolute tolerance used for the comparison.
    pub tolerance: f64,
}

impl PinnedValue {
    fn relative(name: &str, value: f64, expected: f64) -> Self {
        let tolerance = PINNED_REL_TOL * expected.abs().max(1.0);
        Self { name: name.into(), value, expected, tolerance }
    }

    fn absolute(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, expected, tolerance }
    }

    pub fn matches(&self) -> bool {
        (self.value - self.expected).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinnedExample {
    pub name: String,
    pub description: String,
    pub y: Vec<f64>,
    pub a: Vec<f64>,
    pub report: HypothesisReport,
    pub expected: ExpectedPattern,
    pub values: Vec<PinnedValue>,
    /// Extra boolean facts, such as the majorization test.
    pub flags: Vec<(String, bool, bool)>,
    pub matches: bool,
}

impl PinnedExample {
    fn new(name: &str, description: &str, y: Vec<f64>, a: Vec<f64>, report: HypothesisReport, expected: ExpectedPattern) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            y,
            a,
            report,
            expected,
            values: Vec::new(),
            flags: Vec::new(),
            matches: false,
        }
    }

    fn value(mut self, v: PinnedValue) -> Self {
        self.values.push(v);
        self
    }

    fn flag(mut self, name: &str, value: bool, expected: bool) -> Self {
        self.flags.push((name.into(), value, expected));
        self
    }

    fn pattern_matches(&self) -> bool {
        let r = &self.report;
        let tol = r.tolerance;
        let lines_ok = r.margins.len() == self.expected.hypotheses.len()
            && r
                .margins
                .iter()
                .zip(&r.margin_scales)
                .zip(&self.expected.hypotheses)
                .all(|((m, s), want)| (*m >= -tol.ineq * s) == *want);
        let eq_ok = r.equality_defects.iter().all(|d| d.abs() <= tol.eq) == self.expected.equality_holds;
        lines_ok && eq_ok && r.conclusion_holds == self.expected.conclusion_holds
    }

    fn finish(mut self) -> Self {
        self.matches = self.pattern_matches()
            && self.values.iter().all(PinnedValue::matches)
            && self.flags.iter().all(|(_, v, want)| v == want);
        self
    }
}

fn pattern(hypotheses: &[bool], equality_holds: bool, conclusion_holds: bool) -> ExpectedPattern {
    ExpectedPattern { hypotheses: hypotheses.to_vec(), equality_holds, conclusion_holds }
}

fn from_logs(l: &[f64]) -> Result<PositiveTuple> {
    PositiveTuple::from_logs(l)
}

fn sum_sq_log_values(report: &HypothesisReport) -> (f64, f64) {
    // conclusion_margin = lhs - rhs and conclusion_scale = max(lhs, rhs)
    // with both sides non-negative, so the sides can be recovered.
    let (m, s) = (report.conclusion_margin, report.conclusion_scale);
    if m >= 0.0 {
        (s, s - m)
    } else {
        (s + m, s)
    }
}

/// Truncates to `digits` decimals.
fn truncate(x: f64, digits: i32) -> f64 {
    let k = 10f64.powi(digits);
    (x * k).trunc() / k
}

/// Evaluates every pinned example. Each carries the expected sign of every
/// hypothesis line and of the conclusion, and the exact sums.
pub fn pinned_counterexamples() -> Result<Vec<PinnedExample>> {
    let tol = Tolerance::default();
    let mut out = Vec::new();

    // Drop the e2 condition.
    let (y, a) = (from_logs(&[6.0, 0.0, -6.0])?, from_logs(&[4.0, 4.0, -8.0])?);
    let r = check_tuple3(&y, &a, tol)?;
    let (ly, la) = sum_sq_log_values(&r);
    out.push(
        PinnedExample::new(
            "e2-dropped",
            "e1 dominates and products agree, but e2 does not dominate: 36+0+36 < 16+16+64",
            y.values().to_vec(),
            a.values().to_vec(),
            r,
            pattern(&[true, false], true, false),
        )
        .value(PinnedValue::relative("sum (log y)^2", ly, 72.0))
        .value(PinnedValue::relative("sum (log a)^2", la, 96.0))
        .finish(),
    );

    // Weaken the product equality to an inequality.
    let (y, a) = (PositiveTuple::new(vec![E, 1.0, 1.0])?, PositiveTuple::new(vec![1.0, 1.0, (-2.0f64).exp()])?);
    let r = check_tuple3(&y, &a, tol)?;
    let (ly, la) = sum_sq_log_values(&r);
    let product_margin = y.values().iter().product::<f64>() - a.values().iter().product::<f64>();
    out.push(
        PinnedExample::new(
            "product-relaxed",
            "e1 and e2 dominate and y1 y2 y3 = e >= e^-2 = a1 a2 a3, yet 1+0+0 < 0+0+4",
            y.values().to_vec(),
            a.values().to_vec(),
            r,
            pattern(&[true, true], false, false),
        )
        .value(PinnedValue::relative("sum (log y)^2", ly, 1.0))
        .value(PinnedValue::relative("sum (log a)^2", la, 4.0))
        .flag("y1 y2 y3 > a1 a2 a3", product_margin > 0.0, true)
        .finish(),
    );

    // Four entries: e1 and e2 dominate, products agree, e3 does not.
    let (y, a) = (from_logs(&[1.0, 7.0, 7.0, -15.0])?, from_logs(&[6.0, 6.0, 7.0, -19.0])?);
    let r = check_elem_sym(&y, &a, tol)?;
    let (ly, la) = sum_sq_log_values(&r);
    out.push(
        PinnedExample::new(
            "four-entries",
            "n = 4 with e1, e2 dominating (e^14 > e^13 + e^13 + e^12 since e^2 > 2e + 1) and equal products: 324 < 482",
            y.values().to_vec(),
            a.values().to_vec(),
            r,
            pattern(&[true, true, false], true, false),
        )
        .value(PinnedValue::relative("sum (log y)^2", ly, 324.0))
        .value(PinnedValue::relative("sum (log a)^2", la, 482.0))
        .finish(),
    );

    // Replacing log by its linearization breaks the inequality.
    let (y, a) = (PositiveTuple::new(vec![9.0, 5.0, 1.0 / 45.0])?, PositiveTuple::new(vec![10.0, 1.0, 0.1])?);
    let r = check_tuple3(&y, &a, tol)?;
    let lin = |t: &PositiveTuple| t.values().iter().map(|v| (v - 1.0).powi(2)).sum::<f64>();
    out.push(
        PinnedExample::new(
            "linearized",
            "all hypotheses hold and the log inequality holds, but 64+16+(44/45)^2 < 9^2+0+(9/10)^2",
            y.values().to_vec(),
            a.values().to_vec(),
            r,
            pattern(&[true, true], true, true),
        )
        .value(PinnedValue::relative("sum (y-1)^2", lin(&y), 64.0 + 16.0 + (44.0f64 / 45.0).powi(2)))
        .value(PinnedValue::relative("sum (a-1)^2", lin(&a), 81.81))
        .flag("sum (y-1)^2 >= sum (a-1)^2", lin(&y) >= lin(&a), false)
        .finish(),
    );

    // Exponential form: admissible, yet z does not majorize c.
    let s3 = 3f64.sqrt();
    let z = LogTuple::new(vec![0.5 + 0.95 / (2.0 * s3), 0.5 + 0.85 / (2.0 * s3), -1.0 - 0.9 / s3])?;
    let c = LogTuple::new(vec![0.5 + 1.0 / (2.0 * s3), -0.5 + 1.0 / (2.0 * s3), -1.0 / s3])?;
    let r = check_exp(&z, &c, tol)?;
    let z1_minus_c1 = z.values()[0] - c.values()[0];
    let trunc_tol = 1e-12;
    out.push(
        PinnedExample::new(
            "not-majorized",
            "sum e^z > sum e^c, sum e^-z > sum e^-c and sum z = sum c hold, but z1 < c1 so z does not majorize c",
            z.values().to_vec(),
            c.values().to_vec(),
            r,
            pattern(&[true, true], true, true),
        )
        .value(PinnedValue::absolute("sum e^z (5 decimals)", truncate(z.exp_sum(1.0), 5), 4.49497, trunc_tol))
        .value(PinnedValue::absolute("sum e^c (5 decimals)", truncate(c.exp_sum(1.0), 5), 3.57137, trunc_tol))
        .value(PinnedValue::absolute("sum e^-z (5 decimals)", truncate(z.exp_sum(-1.0), 5), 5.50607, trunc_tol))
        .value(PinnedValue::absolute("sum e^-c (5 decimals)", truncate(c.exp_sum(-1.0), 5), 3.47107, trunc_tol))
        .flag("z majorizes c", majorizes(&z, &c)?, false)
        .flag("z1 < c1", z1_minus_c1 < 0.0, true)
        .finish(),
    );

    Ok(out)
}
