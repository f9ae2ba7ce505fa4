use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use ssli::matlog::{Mat, SymMat};
use ssli::search::{random_rotation, sample_theorem3_pair, trial_rng};

fn ssli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssli")).args(args).env("SSLI_THREADS", "1").output().unwrap()
}

fn ssli_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ssli"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

const E2_DROPPED: &str = r#"{"y": [403.4287934927351, 1, 0.0024787521766663585], "a": [54.598150033144236, 54.598150033144236, 0.00033546262790251185]}"#;

#[test]
fn verify_exit_codes() {
    let o = ssli(&["verify", "--formulation", "tuple3", "--input", E2_DROPPED]);
    assert_eq!(code(&o), 2, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAILS"));

    let o = ssli(&["verify", "--input", "[[2, 3, 0.5], [2, 3, 0.5]]", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let r = &json_of(&o)["result"]["report"];
    for m in r["margins"].as_array().unwrap() {
        assert_eq!(m.as_f64(), Some(0.0));
    }
    assert_eq!(r["conclusion_margin"].as_f64(), Some(0.0));

    // Loosening the equality tolerance admits a pair whose products differ;
    // the conclusion then fails and the run reports a contradiction.
    let relaxed = r#"{"y": [2.718281828459045, 1, 1], "a": [1, 1, 0.1353352832366127]}"#;
    let o = ssli(&["verify", "--input", relaxed]);
    assert_eq!(code(&o), 2);
    let o = ssli(&["verify", "--input", relaxed, "--tol-eq", "100"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("THEOREM CONTRADICTED"));
}

#[test]
fn verify_charpol_on_random_spd() {
    for t in 0..20 {
        let mut rng = trial_rng(11, t);
        let (y, a) = sample_theorem3_pair(&mut rng, 1.0).unwrap();
        let mut lift = |v: &[f64]| SymMat::diag(v).unwrap().congruence(&random_rotation(&mut rng));
        let (p1, p2) = (lift(y.values()), lift(a.values()));
        let input = serde_json::json!({ "p1": p1, "p2": p2 }).to_string();
        let wrong = ssli(&["verify", "--input", &input, "--formulation", "tuple3"]);
        let o = ssli(&["verify", "--input", &input, "--formulation", "charpol"]);
        let tuple = ssli(&["verify", "--input", &serde_json::json!({ "y": y, "a": a }).to_string()]);
        assert_eq!(code(&wrong), 67, "tuple formulation on matrices");
        assert_eq!(code(&o), code(&tuple), "{}", stdout(&o));
        assert!(code(&o) == 0 || code(&o) == 2);
    }
}

#[test]
fn input_errors_have_distinct_codes() {
    assert_eq!(code(&ssli(&["verify", "--input", "[1, 2"])), 65);
    assert_eq!(code(&ssli(&["verify", "--input", "/no/such/input.json"])), 66);
    assert_eq!(code(&ssli(&["verify", "--input", "[[1, 2, 3], [1, 2]]"])), 67);
    assert_eq!(code(&ssli(&["verify", "--input", "[[1, 2, -3], [1, 2, 3]]"])), 67);
    let not_spd = r#"{"p1": [[1, 2], [2, 1]], "p2": [[1, 0], [0, 1]]}"#;
    assert_eq!(code(&ssli(&["verify", "--input", not_spd])), 68);
    assert_eq!(code(&ssli(&["verify", "--input", "[[1, 2], [1, 2]]", "--bogus"])), 64);
    assert_eq!(code(&ssli(&["verify", "--input", "[[1, 2], [1, 2]]", "--formulation", "nope"])), 64);
    assert_eq!(code(&ssli(&[])), 64);
    assert_eq!(code(&ssli(&["--help"])), 0);
}

#[test]
fn input_from_file_and_stdin() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(E2_DROPPED.as_bytes()).unwrap();
    let path = f.path().to_str().unwrap();
    assert_eq!(code(&ssli(&["verify", "--input", path])), 2);
    assert_eq!(code(&ssli_stdin(&["verify", "--input", "-"], E2_DROPPED)), 2);
    let o = ssli_stdin(&["matrix", "geodesic", "--input", "-", "--format", "json"], "[[1,0,0],[0,1,0],[0,0,1]]");
    assert_eq!(json_of(&o)["result"]["dist_sq"].as_f64(), Some(0.0));
}

#[test]
fn lemma_scan_cases() {
    let o = ssli(&["lemma-scan", "--fd", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json_of(&o);
    assert_eq!(v["result"]["points"].as_u64(), Some(101_000));
    assert!(v["result"]["max_fd_rel_err"]["value"].as_f64().unwrap() < 1e-5);

    let o = ssli(&["lemma-scan", "--r-min", "1", "--r-max", "1", "--r-steps", "1", "--phi-steps", "0", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json_of(&o)["result"]["max_slope"]["value"].as_f64(), Some(0.0));

    assert_eq!(code(&ssli(&["lemma-scan", "--r-min", "0"])), 64);
    assert_eq!(code(&ssli(&["lemma-scan", "--r-steps", "0"])), 64);
}

#[test]
fn counterexamples_report_and_replay() {
    let o = ssli(&["counterexamples"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for shown in ["72", "96", "324", "482", "80.956", "81.81"] {
        assert!(text.contains(shown), "{shown} missing from\n{text}");
    }

    let o = ssli(&["counterexamples", "--format", "json"]);
    let doc = json_of(&o);
    let examples = doc["result"]["examples"].as_array().unwrap();
    assert_eq!(examples.len(), 5);
    for ex in examples {
        let r = ssli_stdin(&["verify", "--input", "-", "--format", "json"], &ex.to_string());
        let replayed = json_of(&r);
        assert_eq!(replayed["result"]["report"], ex["report"], "{}", ex["name"]);
        assert!([0, 2].contains(&code(&r)));
        // The output of verify is itself valid input.
        let again = ssli_stdin(&["verify", "--input", "-", "--format", "json"], &replayed["result"].to_string());
        assert_eq!(json_of(&again)["result"], replayed["result"]);
    }
}

#[test]
fn sample_campaigns() {
    let o = ssli(&["sample", "--mode", "theorem3", "--trials", "1000000", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let args = ["sample", "--mode", "conjecture", "--n", "5", "--trials", "100000", "--seed", "7", "--format", "json"];
    let (a, b) = (ssli(&args), ssli(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert_eq!(v["run"]["seed"].as_u64(), Some(7));
    assert_eq!(v["result"]["violations"].as_array().unwrap().len(), 0);

    let o = ssli(&["sample", "--mode", "optimality", "--trials", "3", "--rot-samples", "200", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert!(json_of(&o)["result"]["optimality"]["skip_rate"].as_f64().is_some());

    assert_eq!(code(&ssli(&["sample", "--mode", "theorem3", "--n", "4", "--trials", "10"])), 64);
    assert_eq!(code(&ssli(&["sample", "--mode", "conjecture", "--trials", "0"])), 64);
}

#[test]
fn sample_csv_stream() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trials.csv");
    let o = ssli(&["sample", "--mode", "conjecture", "--n", "4", "--trials", "500", "--seed", "3", "--csv", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("trial,premises_hold,margin_1,margin_2,margin_3,eq_defect,conclusion_margin,violation")
    );
    assert_eq!(lines.count(), 500);

    let o = ssli(&["sample", "--mode", "theorem3", "--trials", "20", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 21);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed 0"));
}

#[test]
fn matrix_actions() {
    let e = std::f64::consts::E;
    let input = serde_json::json!([[e * e, 0, 0], [0, e, 0], [0, 0, e.powi(-3)]]).to_string();
    let o = ssli(&["matrix", "log", "--input", &input, "--format", "json"]);
    assert_eq!(code(&o), 0);
    let l: Mat = serde_json::from_value(json_of(&o)["result"]["log"].clone()).unwrap();
    let want = Mat::diag(&[2.0, 1.0, -3.0]).unwrap();
    assert!((l - want).frobenius() < 1e-14);

    let mut rng = trial_rng(5, 0);
    for _ in 0..10 {
        let z = ssli::search::random_invertible(&mut rng, 1e3).unwrap();
        let o = ssli(&["matrix", "polar", "--input", &serde_json::to_string(&z).unwrap(), "--format", "json"]);
        assert_eq!(code(&o), 0);
        let r = &json_of(&o)["result"];
        assert!(r["orthogonality_residual"].as_f64().unwrap() <= 1e-10);
        assert!(r["reconstruction_residual"].as_f64().unwrap() <= 1e-10);
    }

    let o = ssli(&["matrix", "hencky", "--input", "[[2, 0, 0], [0, 1, 0], [0, 0, 0.5]]", "--format", "json"]);
    assert!((json_of(&o)["result"]["dev3_norm_sq"].as_f64().unwrap() - 2.0 * 2f64.ln().powi(2)).abs() < 1e-14);

    let o = ssli(&["matrix", "dev3", "--input", "[[3, 1, 0], [0, 0, 0], [0, 0, 0]]", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().next(), Some("dev3,0,2.0,1.0,0.0"));

    assert_eq!(code(&ssli(&["matrix", "log", "--input", "[[1, 2], [2, 1]]"])), 68);
    assert_eq!(code(&ssli(&["matrix", "geodesic", "--input", "[[-1, 0, 0], [0, 1, 0], [0, 0, 1]]"])), 68);
    assert_eq!(code(&ssli(&["matrix", "dev3", "--input", "[[1, 0], [0, 1]]"])), 67);
    assert_eq!(code(&ssli(&["matrix", "log", "--input", "[[1, 0, 0], [0, 1]]"])), 67);
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares JSON output with a stored file; `SSLI_UPDATE_GOLDEN=1`
/// rewrites the file instead.
fn check_golden(name: &str, args: &[&str]) {
    let o = ssli(args);
    let got = stdout(&o);
    let path = golden_dir().join(name);
    if std::env::var_os("SSLI_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(got, want, "{name} differs from golden output");
}

#[test]
fn golden_outputs() {
    check_golden("counterexamples.json", &["counterexamples", "--format", "json"]);
    check_golden("verify_e2_dropped.json", &["verify", "--input", E2_DROPPED, "--format", "json"]);
    check_golden(
        "verify_exp.json",
        &["verify", "--formulation", "exp", "--input", "[[1.5, 0, -1.5], [1, 0.5, -1.5]]", "--format", "json"],
    );
    check_golden("matrix_polar.json", &["matrix", "polar", "--input", "[[2, 1, 0], [0, 1, 0], [0, 0, 3]]", "--format", "json"]);
    check_golden(
        "lemma_scan_small.json",
        &["lemma-scan", "--r-min", "0.5", "--r-max", "2", "--r-steps", "4", "--phi-steps", "3", "--fd", "--format", "json"],
    );
}
