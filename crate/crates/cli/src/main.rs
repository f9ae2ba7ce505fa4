//! `ssli` command-line front end.
//!
//! Exit codes: 0 success, 1 theorem contradicted (or a proof ingredient or
//! pinned value failed to reproduce), 2 hypotheses do not hold, 3 conjecture
//! counterexample found, 64 and up for usage, input and domain errors.

mod input;
mod render;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use ssli::exec::{configure_threads, current_threads, threads_from_env, Exec};
use ssli::formulation::{
    check_2d, check_elem_sym, check_exp, check_exp_zero_sum, check_inverse_sum, check_means, check_squared,
    check_tuple3,
};
use ssli::lemma::{scan_grid, LemmaGrid};
use ssli::matlog::{
    check_charpol, check_frobenius, dev3, geodesic_dist_iso_sq, hencky, log_real_diagonalizable, log_spd, polar, Mat,
    SymMat, SYMMETRY_TOL,
};
use ssli::search::{
    pinned_counterexamples, run_trial_range, CampaignConfig, CampaignSummary, CsvSink, Mode, TrialRecord,
    PINNED_REL_TOL, VIOLATION_TOL,
};
use ssli::{Formulation, HypothesisReport, LogTuple, PositiveTuple, Tolerance, VERSION};

use input::Operand;
use render::{g6, g6_list, Table};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONTRADICTED: u8 = 1;
pub const EXIT_HYPOTHESES: u8 = 2;
pub const EXIT_FINDING: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_MALFORMED: u8 = 65;
pub const EXIT_UNREADABLE: u8 = 66;
pub const EXIT_INVALID: u8 = 67;
pub const EXIT_DOMAIN: u8 = 68;
pub const EXIT_IO: u8 = 74;

/// An error with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn usage(m: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, m)
    }

    pub fn malformed(m: impl Into<String>) -> Self {
        Self::new(EXIT_MALFORMED, m)
    }

    pub fn unreadable(m: impl Into<String>) -> Self {
        Self::new(EXIT_UNREADABLE, m)
    }

    pub fn invalid(m: impl Into<String>) -> Self {
        Self::new(EXIT_INVALID, m)
    }
}

impl From<ssli::Error> for Failure {
    fn from(e: ssli::Error) -> Self {
        let code = match e {
            ssli::Error::Argument(_) => EXIT_INVALID,
            ssli::Error::Domain(_) => EXIT_DOMAIN,
            ssli::Error::Rigidity { .. } => EXIT_CONTRADICTED,
            ssli::Error::Io(_) => EXIT_IO,
        };
        Failure::new(code, e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "ssli", version, about = "Check, scan and stress-test the sum-of-squared-logarithms inequality")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Check hypotheses and conclusion for two tuples or two SPD matrices.
    Verify {
        /// Inline JSON, a file path, or `-` for stdin: `[first, second]` or
        /// an object with keys y/a, x/d, z/c or p1/p2.
        #[arg(long)]
        input: String,
        /// Defaults to the formulation stored in the input, else tuple3 for
        /// triples, elem-sym for other lengths and charpol for matrices.
        #[arg(long, value_parser = parse_formulation)]
        formulation: Option<Formulation>,
        #[arg(long, default_value_t = 1e-12)]
        tol_ineq: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol_eq: f64,
    },
    /// Evaluate the angular slope and radial derivative on a polar grid.
    LemmaScan {
        #[arg(long, default_value_t = 0.01)]
        r_min: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 1000)]
        r_steps: usize,
        /// Number of angular intervals on [0, pi/3].
        #[arg(long, default_value_t = 100)]
        phi_steps: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Also compare the radial derivative with a central difference.
        #[arg(long)]
        fd: bool,
    },
    /// Evaluate the pinned counterexamples for weakened hypotheses.
    Counterexamples,
    /// Run a seeded random campaign.
    Sample {
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Tuple length (conjecture mode); theorem3 and optimality need 3.
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Standard deviation of the sampled log-coordinates.
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        /// Rotations per matrix in optimality mode.
        #[arg(long, default_value_t = 10_000)]
        rot_samples: u64,
        /// Stream one CSV row per trial to this file.
        #[arg(long)]
        csv: Option<String>,
        /// Worker threads; overrides SSLI_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = ExecArg::Parallel)]
        exec: ExecArg,
    },
    /// Matrix computations on one input matrix.
    Matrix {
        #[arg(value_enum)]
        action: MatrixAction,
        /// Inline JSON rows, a file path, or `-` for stdin.
        #[arg(long)]
        input: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Conjecture,
    Theorem3,
    Optimality,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExecArg {
    Sequential,
    Parallel,
}

#[derive(Clone, Copy, ValueEnum)]
enum MatrixAction {
    Log,
    Polar,
    Hencky,
    Geodesic,
    Dev3,
}

fn parse_formulation(s: &str) -> Result<Formulation, String> {
    let key = s.replace('-', "_");
    Formulation::ALL
        .into_iter()
        .find(|f| f.name() == key)
        .ok_or_else(|| {
            let names: Vec<String> = Formulation::ALL.iter().map(|f| f.name().replace('_', "-")).collect();
            format!("unknown formulation `{s}` (expected one of {})", names.join(", "))
        })
}

/// Effective configuration echoed by every run.
#[derive(Serialize)]
struct RunInfo {
    version: &'static str,
    command: &'static str,
    tolerances: Value,
    seed: Option<u64>,
    threads: usize,
}

impl RunInfo {
    fn line(&self) -> String {
        let tol = match &self.tolerances {
            Value::Object(m) => m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "),
            _ => String::new(),
        };
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        format!("ssli {} {} | tolerances {tol} | seed {seed} | threads {}", self.version, self.command, self.threads)
    }
}

/// What a command produced, ready for any output format.
struct Outcome {
    info: RunInfo,
    code: u8,
    status: String,
    result: Value,
    human: String,
    csv: Vec<Vec<String>>,
}

fn tol_json(t: Tolerance) -> Value {
    json!({ "ineq": t.ineq, "eq": t.eq })
}

/// Shortest round-trip decimal, in exponent form for very large or small values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn positive(v: &[f64]) -> Result<PositiveTuple, Failure> {
    Ok(PositiveTuple::new(v.to_vec())?)
}

fn logs(v: &[f64]) -> Result<LogTuple, Failure> {
    Ok(LogTuple::new(v.to_vec())?)
}

fn spd(rows: &[Vec<f64>]) -> Result<SymMat, Failure> {
    let m = Mat::from_rows(rows)?;
    let s = SymMat::try_from_mat(&m, SYMMETRY_TOL)?;
    s.spd_certificate()?;
    Ok(s)
}

fn run_check(f: Formulation, first: &Operand, second: &Operand, tol: Tolerance) -> Result<HypothesisReport, Failure> {
    let matrices = matches!(f, Formulation::CharPol | Formulation::FrobNorm);
    match (first, second) {
        (Operand::Tuple(p), Operand::Tuple(q)) if !matrices => Ok(match f {
            Formulation::Tuple3 => check_tuple3(&positive(p)?, &positive(q)?, tol)?,
            Formulation::ElemSym => check_elem_sym(&positive(p)?, &positive(q)?, tol)?,
            Formulation::InverseSum => check_inverse_sum(&positive(p)?, &positive(q)?, tol)?,
            Formulation::Means => check_means(&positive(p)?, &positive(q)?, tol)?,
            Formulation::Squared if p.len() == 2 => check_2d(&positive(p)?, &positive(q)?, tol)?,
            Formulation::Squared => check_squared(&positive(p)?, &positive(q)?, tol)?,
            Formulation::Exp => check_exp(&logs(p)?, &logs(q)?, tol)?,
            Formulation::ExpZeroSum => check_exp_zero_sum(&logs(p)?, &logs(q)?, tol)?,
            Formulation::CharPol | Formulation::FrobNorm => unreachable!(),
        }),
        (Operand::Matrix(p), Operand::Matrix(q)) if matrices => {
            let (p, q) = (spd(p)?, spd(q)?);
            Ok(if f == Formulation::CharPol { check_charpol(&p, &q, tol)? } else { check_frobenius(&p, &q, tol)? })
        }
        _ => Err(Failure::invalid(format!(
            "formulation {} needs two {}",
            f.name(),
            if matrices { "matrices" } else { "tuples" }
        ))),
    }
}

fn verify(
    source: &str,
    flag: Option<Formulation>,
    tol_ineq: f64,
    tol_eq: f64,
) -> Result<Outcome, Failure> {
    let tol = Tolerance::new(tol_ineq, tol_eq).map_err(|e| Failure::usage(e.to_string()))?;
    let parsed = input::verify_input(&input::parse_json(&input::read_source(source)?)?)?;
    let stored = match &parsed.formulation {
        Some(name) => Some(parse_formulation(name).map_err(Failure::malformed)?),
        None => None,
    };
    let f = flag.or(stored).unwrap_or(match &parsed.first {
        Operand::Matrix(_) => Formulation::CharPol,
        Operand::Tuple(t) if t.len() == 3 => Formulation::Tuple3,
        Operand::Tuple(_) => Formulation::ElemSym,
    });
    let report = run_check(f, &parsed.first, &parsed.second, tol)?;
    let (code, status) = match (report.hypotheses_hold, report.conclusion_holds) {
        (true, true) => (EXIT_OK, "hypotheses and conclusion hold"),
        (true, false) => (EXIT_CONTRADICTED, "THEOREM CONTRADICTED: hypotheses hold but the conclusion fails"),
        (false, _) => (EXIT_HYPOTHESES, "hypotheses do not hold"),
    };
    let (k1, k2) = match parsed.first {
        Operand::Matrix(_) => ("p1", "p2"),
        Operand::Tuple(_) => match f {
            Formulation::Exp | Formulation::ExpZeroSum => ("z", "c"),
            _ => ("y", "a"),
        },
    };
    let operand_json = |o: &Operand| match o {
        Operand::Tuple(t) => to_value(t),
        Operand::Matrix(m) => to_value(m),
    };
    let result = json!({
        "formulation": f.name(),
        k1: operand_json(&parsed.first),
        k2: operand_json(&parsed.second),
        "report": report,
    });

    let mut t = Table::default();
    t.row("formulation", f.name());
    for (i, (m, s)) in report.margins.iter().zip(&report.margin_scales).enumerate() {
        let ok = *m >= -tol.ineq * s;
        t.row(format!("hypothesis {}", i + 1), format!("margin {:>13}  {}", g6(*m), if ok { "holds" } else { "FAILS" }));
    }
    for (i, d) in report.equality_defects.iter().enumerate() {
        let ok = d.abs() <= tol.eq;
        t.row(format!("equality {}", i + 1), format!("defect {:>13}  {}", g6(*d), if ok { "holds" } else { "FAILS" }));
    }
    for (i, m) in report.derived_margins.iter().enumerate() {
        t.row(format!("derived {}", i + 1), format!("margin {:>13}", g6(*m)));
    }
    t.row(
        "conclusion",
        format!("margin {:>13}  {}", g6(report.conclusion_margin), if report.conclusion_holds { "holds" } else { "FAILS" }),
    );

    let mut header = vec!["formulation".to_string(), "hypotheses_hold".to_string()];
    let mut row = vec![f.name().to_string(), report.hypotheses_hold.to_string()];
    for (i, m) in report.margins.iter().enumerate() {
        header.push(format!("margin_{}", i + 1));
        row.push(num(*m));
    }
    for (i, d) in report.equality_defects.iter().enumerate() {
        header.push(format!("eq_defect_{}", i + 1));
        row.push(num(*d));
    }
    header.extend(["conclusion_margin".to_string(), "conclusion_holds".to_string()]);
    row.extend([num(report.conclusion_margin), report.conclusion_holds.to_string()]);

    Ok(Outcome {
        info: RunInfo { version: VERSION, command: "verify", tolerances: tol_json(tol), seed: None, threads: 1 },
        code,
        status: status.to_string(),
        result,
        human: t.render(),
        csv: vec![header, row],
    })
}

fn lemma_scan(grid: LemmaGrid, tol: f64, fd: bool) -> Result<Outcome, Failure> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Failure::usage(format!("tolerance must be finite and >= 0, got {tol}")));
    }
    grid.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let scan = scan_grid(&grid, fd, Exec::default())?;
    let holds = scan.claims_hold(tol);
    let mut t = Table::default();
    t.row("grid", format!("r in [{}, {}] x {} steps, phi in [0, pi/3] x {} intervals", grid.r_min, grid.r_max, grid.r_steps, grid.phi_steps));
    t.row("points", scan.points.to_string());
    let at = |e: &ssli::lemma::GridExtremum| format!("{:>13}  at r = {}, phi = {}", g6(e.value), g6(e.r), g6(e.phi));
    t.row("max angular slope", at(&scan.max_slope));
    t.row("min radial derivative", at(&scan.min_radial));
    if let Some(e) = &scan.max_fd_rel_err {
        t.row("max finite-difference error", at(e));
    }
    t.row("angular monotonicity failures", scan.angular_monotonicity_failures.to_string());
    let mut header = vec!["points", "max_slope", "max_slope_r", "max_slope_phi", "min_radial", "min_radial_r", "min_radial_phi"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    let mut row = vec![
        scan.points.to_string(),
        num(scan.max_slope.value),
        num(scan.max_slope.r),
        num(scan.max_slope.phi),
        num(scan.min_radial.value),
        num(scan.min_radial.r),
        num(scan.min_radial.phi),
    ];
    if let Some(e) = &scan.max_fd_rel_err {
        header.push("max_fd_rel_err".into());
        row.push(num(e.value));
    }
    header.push("claims_hold".into());
    row.push(holds.to_string());
    let mut result = to_value(&scan);
    result["claims_hold"] = json!(holds);
    Ok(Outcome {
        info: RunInfo {
            version: VERSION,
            command: "lemma-scan",
            tolerances: json!({ "claims": tol }),
            seed: None,
            threads: current_threads(),
        },
        code: if holds { EXIT_OK } else { EXIT_CONTRADICTED },
        status: if holds {
            "slope <= tol and radial derivative > -tol on the whole grid".into()
        } else {
            "LEMMA CLAIMS FAIL on the grid".into()
        },
        result,
        human: t.render(),
        csv: vec![header, row],
    })
}

fn counterexamples() -> Result<Outcome, Failure> {
    let all = pinned_counterexamples()?;
    let ok = all.iter().all(|e| e.matches);
    let mut human = String::new();
    let mut csv = vec![["example", "quantity", "value", "expected", "matches"].map(String::from).to_vec()];
    for ex in &all {
        let mut t = Table::default();
        t.row("example", format!("{}  [{}]", ex.name, if ex.matches { "matches" } else { "MISMATCH" }));
        t.row("", ex.description.clone());
        t.row("first", g6_list(&ex.y));
        t.row("second", g6_list(&ex.a));
        t.row("hypothesis margins", g6_list(&ex.report.margins));
        t.row("equality defects", g6_list(&ex.report.equality_defects));
        t.num("conclusion margin", ex.report.conclusion_margin);
        for v in &ex.values {
            t.row(v.name.clone(), format!("{:>13}  expected {}", g6(v.value), g6(v.expected)));
            csv.push(vec![ex.name.clone(), v.name.clone(), num(v.value), num(v.expected), v.matches().to_string()]);
        }
        for (name, value, expected) in &ex.flags {
            t.row(name.clone(), format!("{value}  expected {expected}"));
            csv.push(vec![ex.name.clone(), name.clone(), value.to_string(), expected.to_string(), (value == expected).to_string()]);
        }
        human.push_str(&t.render());
        human.push('\n');
    }
    Ok(Outcome {
        info: RunInfo {
            version: VERSION,
            command: "counterexamples",
            tolerances: json!({ "ineq": Tolerance::default().ineq, "eq": Tolerance::default().eq, "pinned_rel": PINNED_REL_TOL }),
            seed: None,
            threads: 1,
        },
        code: if ok { EXIT_OK } else { EXIT_CONTRADICTED },
        status: if ok { "every example matches".into() } else { "PINNED EXAMPLE MISMATCH".into() },
        result: json!({ "examples": all }),
        human,
        csv,
    })
}

#[allow(clippy::too_many_arguments)]
fn sample(
    mode: ModeArg,
    n: usize,
    trials: u64,
    seed: u64,
    spread: f64,
    rot_samples: u64,
    csv_path: Option<&str>,
    exec: ExecArg,
    stream_stdout: bool,
) -> Result<Outcome, Failure> {
    let mode = match mode {
        ModeArg::Conjecture => Mode::Conjecture,
        ModeArg::Theorem3 => Mode::Theorem3,
        ModeArg::Optimality => Mode::Optimality,
    };
    let cfg = CampaignConfig::new(mode, n, trials, seed, spread).with_rot_samples(rot_samples);
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let exec = match exec {
        ExecArg::Sequential => Exec::Sequential,
        ExecArg::Parallel => Exec::Parallel,
    };
    let started = Instant::now();
    let run = |out: Box<dyn Write>| -> Result<CampaignSummary, Failure> {
        let mut sink = CsvSink::new(out, cfg.mode, cfg.n)?;
        let mut f = |r: &TrialRecord| sink.write(r);
        let s = run_trial_range(&cfg, 0..cfg.trials, exec, Some(&mut f))?;
        sink.finish()?;
        Ok(s)
    };
    let summary = match (csv_path, stream_stdout) {
        (Some(p), _) => {
            let file = File::create(p).map_err(|e| Failure::new(EXIT_IO, format!("cannot create {p}: {e}")))?;
            run(Box::new(BufWriter::new(file)))?
        }
        (None, true) => run(Box::new(BufWriter::new(std::io::stdout())))?,
        (None, false) => run_trial_range(&cfg, 0..cfg.trials, exec, None)?,
    };
    let elapsed = started.elapsed();
    let (code, status) = match (summary.is_clean(), mode) {
        (true, _) => (EXIT_OK, "no violations".to_string()),
        (false, Mode::Conjecture) => {
            (EXIT_FINDING, format!("CONJECTURE COUNTEREXAMPLE FOUND: {} violating trials", summary.violations.len()))
        }
        (false, _) => {
            (EXIT_CONTRADICTED, format!("THEOREM CONTRADICTED: {} violating trials", summary.violations.len()))
        }
    };
    let mut t = Table::default();
    t.row("mode", mode.name());
    t.row("n", cfg.n.to_string());
    t.row("trials", summary.trials_run.to_string());
    t.num("spread", cfg.spread);
    t.row("sampler", summary.sampler.clone());
    t.row("premise-holding", format!("{} ({}%)", summary.premises_hold_count, g6(100.0 * summary.premise_rate)));
    if let Some(m) = summary.min_conclusion_margin_over_premise_holding {
        t.num("min conclusion margin", m);
    }
    if let Some(o) = &summary.optimality {
        t.row("rotations evaluated", o.rotations_evaluated.to_string());
        t.row("rotations skipped", format!("{} ({}%)", o.rotations_skipped, g6(100.0 * o.skip_rate)));
        t.row("low-coverage matrices", o.low_coverage_trials.to_string());
        t.num("max attainment defect", o.max_attainment_defect);
    }
    t.row("violations", summary.violations.len().to_string());
    for v in summary.violations.iter().take(10) {
        t.row(format!("  trial {}", v.trial_index), format!("conclusion margin {}", g6(v.conclusion_margin)));
    }
    t.row("wall time", format!("{:.3} s", elapsed.as_secs_f64()));
    Ok(Outcome {
        info: RunInfo {
            version: VERSION,
            command: "sample",
            tolerances: json!({ "ineq": summary.tolerance.ineq, "eq": summary.tolerance.eq, "violation": VIOLATION_TOL }),
            seed: Some(seed),
            threads: if exec.is_parallel() { current_threads() } else { 1 },
        },
        code,
        status,
        result: to_value(&summary),
        human: t.render(),
        csv: Vec::new(),
    })
}

fn matrix_cmd(action: MatrixAction, source: &str) -> Result<Outcome, Failure> {
    let rows = input::matrix(&input::parse_json(&input::read_source(source)?)?)?;
    let m = Mat::from_rows(&rows)?;
    let mut t = Table::default();
    let mut csv = Vec::new();
    let mat_csv = |csv: &mut Vec<Vec<String>>, name: &str, x: &Mat| {
        for (i, r) in x.rows().iter().enumerate() {
            let mut row = vec![name.to_string(), i.to_string()];
            row.extend(r.iter().map(|x| num(*x)));
            csv.push(row);
        }
    };
    let (name, result) = match action {
        MatrixAction::Log => {
            let l = match SymMat::try_from_mat(&m, SYMMETRY_TOL) {
                Ok(s) => *log_spd(&s)?.as_mat(),
                Err(_) => log_real_diagonalizable(&m)?,
            };
            t.matrix("log", &l);
            mat_csv(&mut csv, "log", &l);
            ("log", json!({ "log": l }))
        }
        MatrixAction::Polar => {
            let p = polar(&m)?;
            let (orth, rec) = (p.orthogonality_residual(), p.reconstruction_residual(&m));
            t.matrix("U", &p.u).matrix("H", p.h.as_mat());
            t.num("||U^T U - I||_F", orth).num("||U H - Z||_F / ||Z||_F", rec);
            mat_csv(&mut csv, "U", &p.u);
            mat_csv(&mut csv, "H", p.h.as_mat());
            csv.push(vec!["orthogonality_residual".into(), String::new(), num(orth)]);
            csv.push(vec!["reconstruction_residual".into(), String::new(), num(rec)]);
            ("polar", json!({ "u": p.u, "h": p.h, "orthogonality_residual": orth, "reconstruction_residual": rec }))
        }
        MatrixAction::Hencky => {
            let h = hencky(&m)?;
            let dev = dev3(h.as_mat()).ok().map(|d| d.frobenius_sq());
            t.matrix("log sqrt(F^T F)", h.as_mat());
            mat_csv(&mut csv, "hencky", h.as_mat());
            if let Some(d) = dev {
                t.num("||dev3 log sqrt(F^T F)||^2", d);
                csv.push(vec!["dev3_norm_sq".into(), String::new(), num(d)]);
            }
            ("hencky", json!({ "hencky": h, "dev3_norm_sq": dev }))
        }
        MatrixAction::Geodesic => {
            let d2 = geodesic_dist_iso_sq(&m)?;
            t.num("squared distance", d2).num("distance", d2.sqrt());
            csv.push(vec!["dist_sq".into(), String::new(), num(d2)]);
            ("geodesic", json!({ "dist_sq": d2, "dist": d2.sqrt() }))
        }
        MatrixAction::Dev3 => {
            let d = dev3(&m)?;
            t.matrix("dev3", &d);
            mat_csv(&mut csv, "dev3", &d);
            ("dev3", json!({ "dev3": d }))
        }
    };
    let mut result = result;
    result["action"] = json!(name);
    result["input"] = json!(m);
    Ok(Outcome {
        info: RunInfo { version: VERSION, command: "matrix", tolerances: json!({ "symmetry": SYMMETRY_TOL }), seed: None, threads: 1 },
        code: EXIT_OK,
        status: format!("{name} computed"),
        result,
        human: t.render(),
        csv,
    })
}

fn emit(format: Format, o: &Outcome) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::new(EXIT_IO, format!("cannot write output: {e}"));
    let mut out = std::io::stdout().lock();
    match format {
        Format::Human => {
            writeln!(out, "{}", o.info.line()).map_err(io)?;
            write!(out, "{}", o.human).map_err(io)?;
            writeln!(out, "status: {} (exit {})", o.status, o.code).map_err(io)?;
        }
        Format::Json => {
            let doc = json!({ "run": o.info, "status": o.status, "exit_code": o.code, "result": o.result });
            let text = serde_json::to_string_pretty(&doc).expect("serializable");
            writeln!(out, "{text}").map_err(io)?;
        }
        Format::Csv => {
            eprintln!("{}", o.info.line());
            eprint!("{}", o.human);
            eprintln!("status: {} (exit {})", o.status, o.code);
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
            for row in &o.csv {
                w.write_record(row).map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
            }
            w.flush().map_err(io)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let flag = match &cli.command {
        Command::Sample { threads, .. } => *threads,
        _ => None,
    };
    if let Some(t) = flag.or_else(threads_from_env) {
        if t == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        configure_threads(t);
    }
    match cli.command {
        Command::Verify { input, formulation, tol_ineq, tol_eq } => verify(&input, formulation, tol_ineq, tol_eq),
        Command::LemmaScan { r_min, r_max, r_steps, phi_steps, tol, fd } => {
            lemma_scan(LemmaGrid { r_min, r_max, r_steps, phi_steps }, tol, fd)
        }
        Command::Counterexamples => counterexamples(),
        Command::Sample { mode, n, trials, seed, spread, rot_samples, csv, threads: _, exec } => {
            sample(mode, n, trials, seed, spread, rot_samples, csv.as_deref(), exec, cli.format == Format::Csv)
        }
        Command::Matrix { action, input } => matrix_cmd(action, &input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.format;
    let outcome = run(cli).and_then(|o| emit(format, &o).map(|_| o.code));
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
