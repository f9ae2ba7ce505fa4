use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::random_rotation;
use crate::error::Result;
use crate::matlog::{log_real_diagonalizable, log_spd, polar, sym_part, Mat};

/// Largest condition number of the sampled matrices.
pub const MAX_CONDITION: f64 = 1e3;

/// A rotation whose value falls more than this below the reference counts
/// as a violation.
pub const OPTIMALITY_TOL: f64 = 1e-8;

/// Allowed gap between the value at the polar factor and the reference.
pub const ATTAINMENT_TOL: f64 = 1e-8;

/// Outcome for one matrix `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalityTrial {
    /// `||log H||^2` for `Z = U H`.
    pub reference: f64,
    /// Largest deviation from the reference of either functional at `Q = U`.
    pub attainment_defect: f64,
    /// Smallest `||log(Q^T Z)||^2 - reference`, including `Q = U`.
    pub min_log_margin: f64,
    /// Smallest `||sym log(Q^T Z)||^2 - reference`, including `Q = U`.
    pub min_sym_margin: f64,
    pub evaluated: u64,
    pub skipped: u64,
}

impl OptimalityTrial {
    pub fn violation(&self) -> bool {
        self.min_log_margin < -OPTIMALITY_TOL
            || self.min_sym_margin < -OPTIMALITY_TOL
            || self.attainment_defect > ATTAINMENT_TOL
    }
}

fn functionals(m: &Mat) -> Result<(f64, f64)> {
    let l = log_real_diagonalizable(m)?;
    Ok((l.frobenius_sq(), sym_part(&l).as_mat().frobenius_sq()))
}

/// Compares both functionals at `rotations` random rotations, and at the
/// polar factor, against `||log H||^2`. Rotations for which `Q^T Z` has no
/// real principal logarithm are counted in `skipped`.
pub fn evaluate_optimality(z: &Mat, rotations: u64, rng: &mut impl Rng) -> Result<OptimalityTrial> {
    let p = polar(z)?;
    let reference = log_spd(&p.h)?.as_mat().frobenius_sq();
    let (at_log, at_sym) = functionals(&(p.u.transpose() * *z))?;
    let mut t = OptimalityTrial {
        reference,
        attainment_defect: (at_log - reference).abs().max((at_sym - reference).abs()),
        min_log_margin: at_log - reference,
        min_sym_margin: at_sym - reference,
        evaluated: 0,
        skipped: 0,
    };
    for _ in 0..rotations {
        let q = random_rotation(rng);
        match functionals(&(q.transpose() * *z)) {
            Ok((v_log, v_sym)) => {
                t.evaluated += 1;
                t.min_log_margin = t.min_log_margin.min(v_log - reference);
                t.min_sym_margin = t.min_sym_margin.min(v_sym - reference);
            }
            Err(_) => t.skipped += 1,
        }
    }
    Ok(t)
}

/// Optimality aggregates over a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct OptimalityStats {
    pub rotations_evaluated: u64,
    pub rotations_skipped: u64,
    pub skip_rate: f64,
    /// Matrices for which more than half the rotations were skipped.
    pub low_coverage_trials: u64,
    pub min_log_margin: Option<f64>,
    pub min_sym_margin: Option<f64>,
    pub max_attainment_defect: f64,
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, y) => x.or(y),
    }
}

impl OptimalityStats {
    pub(crate) fn absorb(&mut self, t: &OptimalityTrial, rotations: u64) {
        self.rotations_evaluated += t.evaluated;
        self.rotations_skipped += t.skipped;
        if 2 * t.skipped > rotations {
            self.low_coverage_trials += 1;
        }
        self.min_log_margin = min_opt(self.min_log_margin, Some(t.min_log_margin));
        self.min_sym_margin = min_opt(self.min_sym_margin, Some(t.min_sym_margin));
        self.max_attainment_defect = self.max_attainment_defect.max(t.attainment_defect);
        self.refresh();
    }

    pub(crate) fn merge(&mut self, o: &OptimalityStats) {
        self.rotations_evaluated += o.rotations_evaluated;
        self.rotations_skipped += o.rotations_skipped;
        self.low_coverage_trials += o.low_coverage_trials;
        self.min_log_margin = min_opt(self.min_log_margin, o.min_log_margin);
        self.min_sym_margin = min_opt(self.min_sym_margin, o.min_sym_margin);
        self.max_attainment_defect = self.max_attainment_defect.max(o.max_attainment_defect);
        self.refresh();
    }

    fn refresh(&mut self) {
        let total = self.rotations_evaluated + self.rotations_skipped;
        self.skip_rate = if total > 0 { self.rotations_skipped as f64 / total as f64 } else { 0.0 };
    }
}
