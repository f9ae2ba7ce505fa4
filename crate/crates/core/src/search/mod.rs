//! Seeded randomized campaigns and pinned examples.
//!
//! Three campaign modes share one runner:
//! - `conjecture`: the n-entry generalisation (`e_i` dominance for `i < n`,
//!   equal products) on independent equal-product pairs. Violations are
//!   reported as findings.
//! - `theorem3`: the three-entry theorem with a premise-respecting sampler.
//! - `optimality`: for random invertible `Z = U H`, random rotations `Q`
//!   never bring `||log(Q^T Z)||^2` or `||sym log(Q^T Z)||^2` below
//!   `||log H||^2`.
//!
//! Trial `t` draws from its own generator seeded with
//! [`mix_seed`]`(seed, t)`, so a campaign gives the same summary for any
//! split into shards and any thread count.

mod csv_out;
mod optimality;
mod pinned;
mod sampling;

use std::ops::Range;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::formulation::{check_elem_sym, HypothesisReport, Tolerance};
use crate::matlog::Mat;
use crate::symtuple::PositiveTuple;

pub use csv_out::{csv_header, CsvSink};
pub use optimality::{evaluate_optimality, OptimalityStats, OptimalityTrial, ATTAINMENT_TOL, MAX_CONDITION, OPTIMALITY_TOL};
pub use pinned::{pinned_counterexamples, ExpectedPattern, PinnedExample, PinnedValue, PINNED_REL_TOL};
pub use sampling::{
    condition_number, mix_seed, random_invertible, random_rotation, sample_equal_product_pair, sample_theorem3_pair,
    splitmix64, trial_rng, THEOREM3_ATTEMPTS,
};

/// Premise lines must exceed this relative margin, and the conclusion fall
/// below minus this absolute margin, for a trial to count as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Trials evaluated per batch before records are flushed to a sink.
pub const BATCH_SIZE: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Conjecture,
    Theorem3,
    Optimality,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Conjecture => "conjecture",
            Mode::Theorem3 => "theorem3",
            Mode::Optimality => "optimality",
        }
    }

    /// Sampling scheme, echoed in every summary.
    pub fn sampler(self) -> &'static str {
        match self {
            Mode::Conjecture => "y, a: logs i.i.d. Normal(0, spread), each tuple shifted to mean zero",
            Mode::Theorem3 => {
                "a: logs i.i.d. Normal(0, spread) shifted to mean zero; y: up to 8 product-preserving \
                 perturbations of a (outward extreme moves, or generic with probability 1/4), first with \
                 e1 and e2 dominance kept"
            }
            Mode::Optimality => {
                "Z: i.i.d. standard normal entries, first column negated if det < 0, redrawn while \
                 cond > 1e3; Q: normalised Gaussian quaternions"
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub mode: Mode,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// Standard deviation of the sampled log-coordinates.
    pub spread: f64,
    /// Rotations per matrix in optimality mode.
    pub rot_samples: u64,
}

impl CampaignConfig {
    pub fn new(mode: Mode, n: usize, trials: u64, seed: u64, spread: f64) -> Self {
        Self { mode, n, trials, seed, spread, rot_samples: 10_000 }
    }

    pub fn with_rot_samples(mut self, rot_samples: u64) -> Self {
        self.rot_samples = rot_samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::arg("trials must be at least 1"));
        }
        if !(self.spread > 0.0) || !self.spread.is_finite() {
            return Err(Error::arg(format!("spread must be positive and finite, got {}", self.spread)));
        }
        match self.mode {
            Mode::Conjecture if self.n < 2 => Err(Error::arg(format!("n must be at least 2, got {}", self.n))),
            Mode::Theorem3 | Mode::Optimality if self.n != 3 => {
                Err(Error::arg(format!("{} mode needs n = 3, got {}", self.mode.name(), self.n)))
            }
            Mode::Optimality if self.rot_samples == 0 => Err(Error::arg("rot_samples must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// What a trial was evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialInput {
    Tuples { y: PositiveTuple, a: PositiveTuple },
    Matrix { z: Mat },
}

impl TrialInput {
    fn floats(&self) -> Vec<f64> {
        match self {
            TrialInput::Tuples { y, a } => y.values().iter().chain(a.values()).copied().collect(),
            TrialInput::Matrix { z } => z.rows().concat(),
        }
    }

    /// Bit patterns of every float, `y` then `a`, or `Z` row-major.
    pub fn hex(&self) -> Vec<String> {
        self.floats().iter().map(|v| format!("{:016x}", v.to_bits())).collect()
    }

    /// Rebuilds an input of the same shape from [`TrialInput::hex`] output.
    pub fn from_hex(&self, hex: &[String]) -> Result<Self> {
        let vals: Vec<f64> = hex
            .iter()
            .map(|h| u64::from_str_radix(h, 16).map(f64::from_bits))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::arg(format!("bad hex float: {e}")))?;
        if vals.len() != self.floats().len() {
            return Err(Error::arg("hex dump has the wrong number of entries"));
        }
        match self {
            TrialInput::Tuples { y, .. } => {
                let (vy, va) = vals.split_at(y.len());
                Ok(TrialInput::Tuples { y: PositiveTuple::new(vy.to_vec())?, a: PositiveTuple::new(va.to_vec())? })
            }
            TrialInput::Matrix { z } => {
                let rows: Vec<Vec<f64>> = vals.chunks(z.dim()).map(<[f64]>::to_vec).collect();
                Ok(TrialInput::Matrix { z: Mat::from_rows(&rows)? })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub input: TrialInput,
    /// Hypothesis margins `e_i(y) - e_i(a)`; empty in optimality mode.
    pub hypothesis_margins: Vec<f64>,
    /// Relative product defect, or the attainment defect at `Q = U` in
    /// optimality mode.
    pub eq_defect: f64,
    pub premises_hold: bool,
    /// Squared-log sum difference, or the smallest value minus reference
    /// over all admissible rotations in optimality mode.
    pub conclusion_margin: f64,
    pub violation: bool,
    /// Rotations with no real principal logarithm (optimality mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped_rotations: Option<u64>,
    /// Exact input encoding, attached to violation records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_hex: Option<Vec<String>>,
}

/// Aggregate result of a campaign or of a contiguous range of its trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub version: String,
    pub config: CampaignConfig,
    pub sampler: String,
    pub tolerance: Tolerance,
    pub violation_tol: f64,
    pub trials_run: u64,
    pub premises_hold_count: u64,
    pub premise_rate: f64,
    /// Smallest conclusion margin among premise-holding trials.
    pub min_conclusion_margin_over_premise_holding: Option<f64>,
    pub violations: Vec<TrialRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimality: Option<OptimalityStats>,
    /// Excluded from JSON so that summaries of identical runs are
    /// byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl CampaignSummary {
    fn empty(cfg: &CampaignConfig) -> Self {
        Self {
            version: crate::VERSION.to_string(),
            config: *cfg,
            sampler: cfg.mode.sampler().to_string(),
            tolerance: Tolerance::default(),
            violation_tol: VIOLATION_TOL,
            trials_run: 0,
            premises_hold_count: 0,
            premise_rate: 0.0,
            min_conclusion_margin_over_premise_holding: None,
            violations: Vec::new(),
            optimality: (cfg.mode == Mode::Optimality).then(OptimalityStats::default),
            wall_time: Duration::ZERO,
        }
    }

    fn absorb(&mut self, rec: &TrialRecord, opt: Option<&OptimalityTrial>) {
        self.trials_run += 1;
        if rec.premises_hold {
            self.premises_hold_count += 1;
            self.min_conclusion_margin_over_premise_holding = Some(
                self.min_conclusion_margin_over_premise_holding
                    .map_or(rec.conclusion_margin, |m| m.min(rec.conclusion_margin)),
            );
        }
        if rec.violation {
            let mut v = rec.clone();
            v.input_hex = Some(rec.input.hex());
            self.violations.push(v);
        }
        if let (Some(stats), Some(t)) = (self.optimality.as_mut(), opt) {
            stats.absorb(t, self.config.rot_samples);
        }
        self.refresh_rate();
    }

    fn refresh_rate(&mut self) {
        self.premise_rate =
            if self.trials_run > 0 { self.premises_hold_count as f64 / self.trials_run as f64 } else { 0.0 };
    }

    /// Combines summaries of disjoint trial ranges of the same campaign.
    /// The operation is associative and commutative.
    pub fn merge(&mut self, other: &CampaignSummary) -> Result<()> {
        if self.config != other.config {
            return Err(Error::arg("cannot merge summaries of different campaigns"));
        }
        self.trials_run += other.trials_run;
        self.premises_hold_count += other.premises_hold_count;
        self.min_conclusion_margin_over_premise_holding = match (
            self.min_conclusion_margin_over_premise_holding,
            other.min_conclusion_margin_over_premise_holding,
        ) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        self.violations.extend(other.violations.iter().cloned());
        self.violations.sort_by_key(|v| v.trial_index);
        if let (Some(a), Some(b)) = (self.optimality.as_mut(), other.optimality.as_ref()) {
            a.merge(b);
        }
        self.wall_time += other.wall_time;
        self.refresh_rate();
        Ok(())
    }

    /// True when the run found nothing to report.
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn tuple_record(trial: u64, y: PositiveTuple, a: PositiveTuple) -> Result<TrialRecord> {
    let r = check_elem_sym(&y, &a, Tolerance::default())?;
    let violation = is_violation(&r);
    Ok(TrialRecord {
        trial_index: trial,
        hypothesis_margins: r.margins.clone(),
        eq_defect: r.equality_defects[0],
        premises_hold: r.hypotheses_hold,
        conclusion_margin: r.conclusion_margin,
        violation,
        input: TrialInput::Tuples { y, a },
        skipped_rotations: None,
        input_hex: None,
    })
}

/// Premises hold with relative margins above [`VIOLATION_TOL`] and the
/// conclusion margin is below `-VIOLATION_TOL`.
pub fn is_violation(r: &HypothesisReport) -> bool {
    r.hypotheses_hold && r.min_relative_margin() > VIOLATION_TOL && r.conclusion_margin < -VIOLATION_TOL
}

/// Evaluates a single trial of a campaign.
pub fn run_trial(cfg: &CampaignConfig, trial: u64) -> Result<(TrialRecord, Option<OptimalityTrial>)> {
    let mut rng = trial_rng(cfg.seed, trial);
    match cfg.mode {
        Mode::Conjecture => {
            let (y, a) = sample_equal_product_pair(cfg.n, &mut rng, cfg.spread)?;
            Ok((tuple_record(trial, y, a)?, None))
        }
        Mode::Theorem3 => {
            let (y, a) = sample_theorem3_pair(&mut rng, cfg.spread)?;
            Ok((tuple_record(trial, y, a)?, None))
        }
        Mode::Optimality => {
            let z = random_invertible(&mut rng, MAX_CONDITION)?;
            let t = evaluate_optimality(&z, cfg.rot_samples, &mut rng)?;
            let rec = TrialRecord {
                trial_index: trial,
                input: TrialInput::Matrix { z },
                hypothesis_margins: Vec::new(),
                eq_defect: t.attainment_defect,
                premises_hold: true,
                conclusion_margin: t.min_log_margin.min(t.min_sym_margin),
                violation: t.violation(),
                skipped_rotations: Some(t.skipped),
                input_hex: None,
            };
            Ok((rec, Some(t)))
        }
    }
}

/// Receives every trial record, in trial order.
pub type RecordSink<'a> = dyn FnMut(&TrialRecord) -> Result<()> + 'a;

/// Runs trials `range` of the campaign, handing every record to `sink` in
/// trial order.
pub fn run_trial_range(
    cfg: &CampaignConfig,
    range: Range<u64>,
    exec: Exec,
    mut sink: Option<&mut RecordSink<'_>>,
) -> Result<CampaignSummary> {
    cfg.validate()?;
    if range.end > cfg.trials || range.start > range.end {
        return Err(Error::arg(format!("trial range {range:?} outside 0..{}", cfg.trials)));
    }
    let started = Instant::now();
    let mut summary = CampaignSummary::empty(cfg);
    let mut start = range.start;
    while start < range.end {
        let len = (range.end - start).min(BATCH_SIZE);
        let batch = exec.map_range(len as usize, |i| run_trial(cfg, start + i as u64));
        for item in batch {
            let (rec, opt) = item?;
            if let Some(s) = sink.as_mut() {
                s(&rec)?;
            }
            summary.absorb(&rec, opt.as_ref());
        }
        start += len;
    }
    summary.wall_time = started.elapsed();
    Ok(summary)
}

/// Runs a whole campaign.
pub fn run_campaign(cfg: &CampaignConfig, exec: Exec) -> Result<CampaignSummary> {
    run_trial_range(cfg, 0..cfg.trials, exec, None)
}

fn expect_mode(cfg: &CampaignConfig, mode: Mode) -> Result<()> {
    if cfg.mode != mode {
        return Err(Error::arg(format!("expected a {} campaign, got {}", mode.name(), cfg.mode.name())));
    }
    Ok(())
}

/// n-entry generalisation; violations are findings, never errors.
pub fn run_conjecture_campaign(cfg: &CampaignConfig, exec: Exec) -> Result<CampaignSummary> {
    expect_mode(cfg, Mode::Conjecture)?;
    run_campaign(cfg, exec)
}

pub fn run_theorem3_campaign(cfg: &CampaignConfig, exec: Exec) -> Result<CampaignSummary> {
    expect_mode(cfg, Mode::Theorem3)?;
    run_campaign(cfg, exec)
}

pub fn run_optimality_campaign(cfg: &CampaignConfig, exec: Exec) -> Result<CampaignSummary> {
    expect_mode(cfg, Mode::Optimality)?;
    run_campaign(cfg, exec)
}

/// Result of re-evaluating a stored record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replay {
    pub record: TrialRecord,
    /// Every recomputed field equals the stored one bit for bit.
    pub identical: bool,
    pub report: Option<HypothesisReport>,
}

/// Re-evaluates a record. Tuple records are checked from their stored
/// inputs (the hex dump when present); matrix records are re-run from the
/// campaign seed and checked against the stored matrix.
pub fn replay(cfg: &CampaignConfig, rec: &TrialRecord) -> Result<Replay> {
    let input = match &rec.input_hex {
        Some(hex) => rec.input.from_hex(hex)?,
        None => rec.input.clone(),
    };
    let (fresh, report) = match &input {
        TrialInput::Tuples { y, a } => {
            let report = check_elem_sym(y, a, Tolerance::default())?;
            (tuple_record(rec.trial_index, y.clone(), a.clone())?, Some(report))
        }
        TrialInput::Matrix { .. } => (run_trial(cfg, rec.trial_index)?.0, None),
    };
    let same_bits = |x: &[f64], y: &[f64]| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits());
    let identical = fresh.input == input
        && same_bits(&fresh.hypothesis_margins, &rec.hypothesis_margins)
        && fresh.eq_defect.to_bits() == rec.eq_defect.to_bits()
        && fresh.conclusion_margin.to_bits() == rec.conclusion_margin.to_bits()
        && fresh.premises_hold == rec.premises_hold
        && fresh.violation == rec.violation;
    Ok(Replay { record: fresh, identical, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::check_tuple3;

    fn cfg(mode: Mode, n: usize, trials: u64) -> CampaignConfig {
        CampaignConfig::new(mode, n, trials, 7, 1.0).with_rot_samples(50)
    }

    #[test]
    fn config_validation() {
        assert!(cfg(Mode::Conjecture, 4, 0).validate().is_err());
        assert!(cfg(Mode::Conjecture, 1, 5).validate().is_err());
        assert!(cfg(Mode::Theorem3, 4, 5).validate().is_err());
        assert!(cfg(Mode::Optimality, 3, 5).with_rot_samples(0).validate().is_err());
        let mut bad = cfg(Mode::Conjecture, 3, 5);
        bad.spread = -1.0;
        assert!(bad.validate().is_err());
        assert!(run_theorem3_campaign(&cfg(Mode::Conjecture, 3, 5), Exec::Sequential).is_err());
    }

    #[test]
    fn theorem3_small_campaign_is_clean() {
        let s = run_theorem3_campaign(&cfg(Mode::Theorem3, 3, 20_000), Exec::default()).unwrap();
        assert!(s.is_clean(), "{:?}", s.violations);
        assert!(s.premise_rate >= 0.2, "{}", s.premise_rate);
        assert!(s.min_conclusion_margin_over_premise_holding.unwrap() >= -VIOLATION_TOL);
    }

    #[test]
    fn conjecture_three_entries_is_clean() {
        let s = run_conjecture_campaign(&cfg(Mode::Conjecture, 3, 20_000), Exec::default()).unwrap();
        assert!(s.is_clean());
        assert!(s.premises_hold_count > 0);
    }

    #[test]
    fn shards_recombine_and_policies_agree() {
        for c in [cfg(Mode::Conjecture, 4, 3000), cfg(Mode::Theorem3, 3, 3000), cfg(Mode::Optimality, 3, 6)] {
            let full = run_campaign(&c, Exec::Parallel).unwrap();
            let seq = run_campaign(&c, Exec::Sequential).unwrap();
            assert_eq!(serde_json::to_string(&full).unwrap(), serde_json::to_string(&seq).unwrap());
            let cut = c.trials / 3;
            let mut left = run_trial_range(&c, 0..cut, Exec::Sequential, None).unwrap();
            let right = run_trial_range(&c, cut..c.trials, Exec::Parallel, None).unwrap();
            left.merge(&right).unwrap();
            assert_eq!(serde_json::to_string(&left).unwrap(), serde_json::to_string(&full).unwrap());
        }
    }

    #[test]
    fn equality_case_has_zero_margin() {
        let a = PositiveTuple::new(vec![2.0, 0.5, 1.0]).unwrap();
        let rec = tuple_record(0, a.clone(), a).unwrap();
        assert_eq!(rec.conclusion_margin, 0.0);
        assert!(rec.premises_hold && !rec.violation);
    }

    #[test]
    fn relaxed_product_pair_is_filtered() {
        let y = PositiveTuple::new(vec![std::f64::consts::E, 1.0, 1.0]).unwrap();
        let a = PositiveTuple::new(vec![1.0, 1.0, (-2.0f64).exp()]).unwrap();
        let rec = tuple_record(0, y, a).unwrap();
        assert!(!rec.premises_hold);
        assert!(!rec.violation);
    }

    #[test]
    fn violation_records_replay() {
        // Drop the e2 line by hand to force a "violation" record.
        let y = PositiveTuple::from_logs(&[6.0, 0.0, -6.0]).unwrap();
        let a = PositiveTuple::from_logs(&[4.0, 4.0, -8.0]).unwrap();
        let r = check_tuple3(&y, &a, Tolerance::default()).unwrap();
        assert!(!is_violation(&r));
        let mut rec = tuple_record(3, y, a).unwrap();
        rec.input_hex = Some(rec.input.hex());
        let c = cfg(Mode::Conjecture, 3, 10);
        let back: TrialRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        let rep = replay(&c, &back).unwrap();
        assert!(rep.identical);
        assert_eq!(rep.report.unwrap().margins, rec.hypothesis_margins);
    }

    #[test]
    fn campaign_records_replay() {
        for c in [cfg(Mode::Conjecture, 5, 200), cfg(Mode::Optimality, 3, 3)] {
            let mut records = Vec::new();
            let mut sink = |r: &TrialRecord| {
                records.push(r.clone());
                Ok(())
            };
            run_trial_range(&c, 0..c.trials, Exec::Sequential, Some(&mut sink)).unwrap();
            assert_eq!(records.len() as u64, c.trials);
            for rec in &records {
                let json = serde_json::to_string(rec).unwrap();
                let back: TrialRecord = serde_json::from_str(&json).unwrap();
                assert!(replay(&c, &back).unwrap().identical);
            }
        }
    }

    #[test]
    fn hex_roundtrip() {
        let input = TrialInput::Tuples {
            y: PositiveTuple::new(vec![0.1, 1.0 / 3.0, 7.0]).unwrap(),
            a: PositiveTuple::new(vec![1.0, 2.0, 0.5]).unwrap(),
        };
        assert_eq!(input.from_hex(&input.hex()).unwrap(), input);
        let m = TrialInput::Matrix { z: Mat::from_rows3([[0.1, 0.2, 0.3], [1e-300, 2.0, 3.0], [-1.0, 0.0, 5.0]]) };
        assert_eq!(m.from_hex(&m.hex()).unwrap(), m);
        assert!(m.from_hex(&["zz".to_string()]).is_err());
    }

    #[test]
    fn summary_json_is_deterministic() {
        let c = cfg(Mode::Conjecture, 4, 2000);
        let a = serde_json::to_string(&run_campaign(&c, Exec::Parallel).unwrap()).unwrap();
        let b = serde_json::to_string(&run_campaign(&c, Exec::Parallel).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("wall_time"));
    }
}
