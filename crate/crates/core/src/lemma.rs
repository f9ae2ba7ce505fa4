//! Numerical content of the proof for triples.
//!
//! A sorted zero-sum triple with `sum v_i^2 = 1.5 r^2` is determined by its
//! leading entry `a in [r/2, r]`, or equivalently by an angle
//! `phi = arccos(a / r) in [0, pi/3]`:
//!
//! ```text
//! (a, b, c) = r * (cos phi, cos(phi - 2pi/3), cos(phi + 2pi/3))
//! h(r, phi) = sum_i exp(r cos(phi + 2pi k/3))
//! ```
//!
//! `h` decreases in `phi` and increases in `r`. Both facts are exposed here as
//! evaluable functions plus a grid scanner, together with the scaling step and
//! the rigidity (equality) check that build on them.

use std::f64::consts::{FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::formulation::{check_exp, Tolerance};
use crate::symtuple::LogTuple;

const TWO_PI_3: f64 = 2.0 * PI / 3.0;
const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Slack for domain boundaries hit by rounded grid coordinates.
const DOMAIN_SLACK: f64 = 1e-12;

/// Entrywise gap allowed between an equal-norm admissible pair.
pub const RIGIDITY_TOL: f64 = 1e-8;

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::arg(format!("radius must be finite and > 0, got {r}")));
    }
    Ok(())
}

fn check_angle(phi: f64) -> Result<f64> {
    if !(phi >= -DOMAIN_SLACK && phi <= FRAC_PI_3 + DOMAIN_SLACK) {
        return Err(Error::arg(format!("angle {phi} outside [0, pi/3]")));
    }
    Ok(phi.clamp(0.0, FRAC_PI_3))
}

fn check_leading(a: f64, r: f64) -> Result<f64> {
    check_radius(r)?;
    let slack = DOMAIN_SLACK * r;
    if !(a >= 0.5 * r - slack && a <= r + slack) {
        return Err(Error::arg(format!("leading entry {a} outside [r/2, r] for r = {r}")));
    }
    Ok(a.clamp(0.5 * r, r))
}

/// The `(r, phi)` coordinates of a sorted zero-sum triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPair {
    r: f64,
    phi: f64,
}

impl SphericalPair {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        check_radius(r)?;
        let phi = check_angle(phi)?;
        Ok(Self { r, phi })
    }

    /// Coordinates of a nonzero triple whose entries sum to zero.
    pub fn from_triple(t: &LogTuple) -> Result<Self> {
        t.expect_len(3, "spherical coordinates")?;
        if t.sum().abs() > 1e-12 * t.abs_sum().max(f64::MIN_POSITIVE) {
            return Err(Error::arg(format!("triple must sum to zero, sum is {}", t.sum())));
        }
        let r = (2.0 / 3.0 * t.sum_sq()).sqrt();
        check_radius(r)?;
        let phi = (t.values()[0] / r).clamp(0.5, 1.0).acos();
        Ok(Self { r, phi })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// The sorted triple `r * (cos phi, cos(phi - 2pi/3), cos(phi + 2pi/3))`.
    pub fn triple(&self) -> [f64; 3] {
        let (r, p) = (self.r, self.phi);
        [r * p.cos(), r * (p - TWO_PI_3).cos(), r * (p + TWO_PI_3).cos()]
    }
}

/// The sorted zero-sum triple with leading entry `a` and `sum v^2 = 1.5 r^2`.
#[doc(alias = "spherical_from_leading")]
pub fn triple_from_leading(a: f64, r: f64) -> Result<[f64; 3]> {
    let a = check_leading(a, r)?;
    let root = (3.0 * (r * r - a * a)).max(0.0).sqrt();
    Ok([a, 0.5 * (-a + root), 0.5 * (-a - root)])
}

/// Exponential sum of the triple with leading entry `x`, as a function of `x`.
#[doc(alias = "lemma_f")]
pub fn leading_exp_sum(x: f64, r: f64) -> Result<f64> {
    let [a, b, c] = triple_from_leading(x, r)?;
    Ok(a.exp() + b.exp() + c.exp())
}

/// `h(r, phi)`, the exponential sum in angular coordinates.
#[doc(alias = "lemma_h")]
pub fn angular_exp_sum(r: f64, phi: f64) -> Result<f64> {
    check_radius(r)?;
    let phi = check_angle(phi)?;
    Ok((r * phi.cos()).exp() + (r * (phi + TWO_PI_3).cos()).exp() + (r * (phi - TWO_PI_3).cos()).exp())
}

/// `h(r, phi) - 3`, summed from `exp_m1` terms so that differences of nearby
/// values do not cancel against the constant.
fn angular_exp_excess(r: f64, phi: f64) -> f64 {
    (r * phi.cos()).exp_m1() + (r * (phi + TWO_PI_3).cos()).exp_m1() + (r * (phi - TWO_PI_3).cos()).exp_m1()
}

/// `exp(-r cos phi) / r * dh/dphi`: same sign as the angular derivative, and
/// never positive on the domain.
#[doc(alias = "lemma_F")]
pub fn scaled_angular_slope(r: f64, phi: f64) -> Result<f64> {
    check_radius(r)?;
    let phi = check_angle(phi)?;
    let lead = -phi.sin();
    let upper = (-r * SQRT_3 * (phi + FRAC_PI_3).sin()).exp() * (phi + TWO_PI_3).sin();
    let lower = (r * SQRT_3 * (phi - FRAC_PI_3).sin()).exp() * (phi - TWO_PI_3).sin();
    Ok(lead - upper - lower)
}

/// `dh/dr`, positive for every `r > 0`.
#[doc(alias = "lemma_dh_dr")]
pub fn radial_derivative(r: f64, phi: f64) -> Result<f64> {
    check_radius(r)?;
    let phi = check_angle(phi)?;
    Ok([phi, phi + TWO_PI_3, phi - TWO_PI_3]
        .iter()
        .map(|t| (r * t.cos()).exp() * t.cos())
        .sum())
}

/// Central finite difference of `h` in `r` with step `1e-6 r`.
pub fn radial_derivative_fd(r: f64, phi: f64) -> Result<f64> {
    check_radius(r)?;
    let phi = check_angle(phi)?;
    let step = 1e-6 * r;
    Ok((angular_exp_excess(r + step, phi) - angular_exp_excess(r - step, phi)) / (2.0 * step))
}

/// `x e^x + y e^y + z e^z` for `x + y + z = 0`; nonnegative, zero only at the origin.
#[doc(alias = "chebyshev_exp_identity")]
pub fn chebyshev_exp_sum(x: f64, y: f64, z: f64) -> Result<f64> {
    let scale = x.abs().max(y.abs()).max(z.abs());
    if (x + y + z).abs() > 1e-12 * scale {
        return Err(Error::arg(format!("entries must sum to zero, sum is {}", x + y + z)));
    }
    Ok(x * x.exp() + y * y.exp() + z * z.exp())
}

/// Rescales the zero-sum tuple `z` to the norm of the zero-sum tuple `c`.
///
/// Requires `sum z^2 < sum c^2`; returns `(k z, k)` with `k > 1`.
pub fn scale_to_norm(z: &LogTuple, c: &LogTuple) -> Result<(LogTuple, f64)> {
    if z.len() != c.len() {
        return Err(Error::arg(format!("length mismatch {} vs {}", z.len(), c.len())));
    }
    for t in [z, c] {
        if t.sum().abs() > 1e-12 * t.abs_sum().max(1.0) {
            return Err(Error::arg(format!("tuple must sum to zero, sum is {}", t.sum())));
        }
    }
    let (nz, nc) = (z.sum_sq(), c.sum_sq());
    if nz == 0.0 {
        return Err(Error::arg("scale factor undefined for the zero tuple"));
    }
    if nz >= nc {
        return Err(Error::arg(format!(
            "rescaling needs sum z^2 < sum c^2, got {nz} >= {nc}"
        )));
    }
    let k = (nc / nz).sqrt();
    Ok((z.scaled(k)?, k))
}

/// The three predicates compared by the lemma for two triples of equal norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderEquivalence {
    /// `sum e^a <= sum e^x`
    pub exp_dominated: bool,
    /// `a <= x` for the leading entries
    pub leading_le: bool,
    /// `c <= z` for the trailing entries
    pub trailing_le: bool,
}

impl OrderEquivalence {
    pub fn consistent(&self) -> bool {
        self.exp_dominated == self.leading_le && self.leading_le == self.trailing_le
    }
}

/// Builds both triples from their leading entries and evaluates the three
/// predicates, which the lemma asserts are equivalent.
#[doc(alias = "lemma1_equivalence")]
pub fn order_equivalence(a_lead: f64, x_lead: f64, r: f64) -> Result<OrderEquivalence> {
    let first = triple_from_leading(a_lead, r)?;
    let second = triple_from_leading(x_lead, r)?;
    let sum_exp = |t: &[f64; 3]| t.iter().map(|v| v.exp()).sum::<f64>();
    Ok(OrderEquivalence {
        exp_dominated: sum_exp(&first) <= sum_exp(&second),
        leading_le: first[0] <= second[0],
        trailing_le: first[2] <= second[2],
    })
}

/// Whether an admissible pair attains equality in `sum z^2 >= sum c^2`.
///
/// `(z, c)` must satisfy the exponential-form hypotheses. When the squared
/// norms agree (within `tol.ineq`), the tuples must coincide entrywise within
/// [`RIGIDITY_TOL`]; otherwise [`Error::Rigidity`] is returned.
pub fn equality_case(z: &LogTuple, c: &LogTuple, tol: Tolerance) -> Result<bool> {
    let report = check_exp(z, c, tol)?;
    if !report.hypotheses_hold {
        return Err(Error::arg("equality case needs pairs satisfying the exponential hypotheses"));
    }
    let (nz, nc) = (z.sum_sq(), c.sum_sq());
    if (nz - nc).abs() > tol.ineq * nz.max(nc) {
        return Ok(false);
    }
    let gap = z
        .values()
        .iter()
        .zip(c.values())
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    if gap > RIGIDITY_TOL {
        return Err(Error::Rigidity { gap, limit: RIGIDITY_TOL });
    }
    Ok(true)
}

/// Rectangular `(r, phi)` grid for the monotonicity scans.
///
/// `r_steps` is the number of radii from `r_min` to `r_max` inclusive;
/// `phi_steps` is the number of angular intervals on `[0, pi/3]`, so the grid
/// has `phi_steps + 1` angles. The default is 1000 radii `0.01, 0.02, .., 10`
/// and angles spaced by `pi/300`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub r_steps: usize,
    pub phi_steps: usize,
}

impl Default for LemmaGrid {
    fn default() -> Self {
        Self { r_min: 0.01, r_max: 10.0, r_steps: 1000, phi_steps: 100 }
    }
}

impl LemmaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_max.is_finite() && self.r_max >= self.r_min) {
            return Err(Error::arg(format!(
                "need 0 < r_min <= r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.r_steps == 0 {
            return Err(Error::arg("r_steps must be positive"));
        }
        if self.r_steps > 1 && self.r_max == self.r_min {
            return Err(Error::arg("several radii need r_min < r_max"));
        }
        Ok(())
    }

    pub fn radius(&self, i: usize) -> f64 {
        if self.r_steps == 1 {
            return self.r_min;
        }
        self.r_min + (self.r_max - self.r_min) * i as f64 / (self.r_steps - 1) as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        if self.phi_steps == 0 {
            return 0.0;
        }
        FRAC_PI_3 * j as f64 / self.phi_steps as f64
    }

    pub fn points(&self) -> usize {
        self.r_steps * (self.phi_steps + 1)
    }
}

/// A value and where on the grid it was attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridExtremum {
    pub value: f64,
    pub r: f64,
    pub phi: f64,
}

impl GridExtremum {
    fn max_of(self, other: Self) -> Self {
        if other.value > self.value { other } else { self }
    }

    fn min_of(self, other: Self) -> Self {
        if other.value < self.value { other } else { self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaScan {
    pub grid: LemmaGrid,
    pub points: usize,
    /// Largest value of the scaled angular slope (should be <= 0).
    pub max_slope: GridExtremum,
    /// Smallest radial derivative (should be > 0).
    pub min_radial: GridExtremum,
    /// Largest relative gap between the radial derivative and its finite difference.
    pub max_fd_rel_err: Option<GridExtremum>,
    /// Number of adjacent angle pairs along which `h` failed to decrease strictly.
    pub angular_monotonicity_failures: usize,
}

impl LemmaScan {
    /// Slope at most `tol` and radial derivative above `-tol` everywhere.
    pub fn claims_hold(&self, tol: f64) -> bool {
        self.max_slope.value <= tol && self.min_radial.value > -tol
    }
}

struct RowScan {
    max_slope: GridExtremum,
    min_radial: GridExtremum,
    max_fd: Option<GridExtremum>,
    monotone_failures: usize,
}

fn scan_row(grid: &LemmaGrid, i: usize, finite_differences: bool) -> RowScan {
    let r = grid.radius(i);
    let at = |value, phi| GridExtremum { value, r, phi };
    let mut max_slope = at(f64::NEG_INFINITY, 0.0);
    let mut min_radial = at(f64::INFINITY, 0.0);
    let mut max_fd: Option<GridExtremum> = None;
    let mut monotone_failures = 0;
    let mut prev_excess: Option<f64> = None;
    for j in 0..=grid.phi_steps {
        let phi = grid.angle(j);
        let slope = scaled_angular_slope(r, phi).expect("grid point in domain");
        let radial = radial_derivative(r, phi).expect("grid point in domain");
        max_slope = max_slope.max_of(at(slope, phi));
        min_radial = min_radial.min_of(at(radial, phi));
        if finite_differences {
            let fd = radial_derivative_fd(r, phi).expect("grid point in domain");
            let e = at((fd - radial).abs() / radial.abs(), phi);
            max_fd = Some(max_fd.map_or(e, |m| m.max_of(e)));
        }
        let excess = angular_exp_excess(r, phi);
        if let Some(p) = prev_excess {
            if excess >= p {
                monotone_failures += 1;
            }
        }
        prev_excess = Some(excess);
    }
    RowScan { max_slope, min_radial, max_fd, monotone_failures }
}

/// Evaluates the angular slope, the radial derivative and optionally its
/// finite-difference check on every grid point, one radius per work item.
pub fn scan_grid(grid: &LemmaGrid, finite_differences: bool, exec: Exec) -> Result<LemmaScan> {
    grid.validate()?;
    let rows = exec.map_range(grid.r_steps, |i| scan_row(grid, i, finite_differences));
    let mut rows = rows.into_iter();
    let first = rows.next().expect("at least one radius");
    let mut scan = LemmaScan {
        grid: *grid,
        points: grid.points(),
        max_slope: first.max_slope,
        min_radial: first.min_radial,
        max_fd_rel_err: first.max_fd,
        angular_monotonicity_failures: first.monotone_failures,
    };
    for row in rows {
        scan.max_slope = scan.max_slope.max_of(row.max_slope);
        scan.min_radial = scan.min_radial.min_of(row.min_radial);
        scan.max_fd_rel_err = match (scan.max_fd_rel_err, row.max_fd) {
            (Some(a), Some(b)) => Some(a.max_of(b)),
            (a, b) => a.or(b),
        };
        scan.angular_monotonicity_failures += row.monotone_failures;
    }
    Ok(scan)
}
