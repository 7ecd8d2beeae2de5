//! End-to-end runs of the `blowup` binary: exit codes, golden reports,
//! determinism across worker counts and the shipped scenarios.

use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden").join(format!("{name}.json"))
}

fn blowup(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup")).args(args).output().expect("spawn blowup")
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    blowup(&args)
}

fn report(out: &Path) -> Value {
    serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &TempDir, text: &str) -> PathBuf {
    let path = dir.path().join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Compares against the checked-in file; `BLOWUP_BLESS=1` rewrites it.
fn assert_golden(name: &str, out: &Path) {
    let actual = fs::read_to_string(out.join("report.json")).unwrap();
    let path = golden(name);
    if std::env::var_os("BLOWUP_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "report for {name} differs from {}", path.display());
}

#[test]
fn predict_matches_golden_and_closed_forms() {
    let tmp = TempDir::new().unwrap();
    let o = run("predict", &scenario("predict_power"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(tmp.path());
    assert_eq!(r["predictions"]["beta"], 1.0);
    assert!((r["predictions"]["psi_r"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-15);
    assert!((r["predictions"]["xi0"].as_f64().unwrap() - 0.70710678).abs() < 1e-8);
    assert_golden("predict_power", tmp.path());
    assert!(tmp.path().join("timing.json").exists());
}

#[test]
fn ko_check_matches_golden() {
    let tmp = TempDir::new().unwrap();
    let o = run("ko-check", &scenario("ko_grid"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(tmp.path());
    assert_eq!(r["fits"]["p=2,q=3"]["convergent"], true);
    assert_eq!(r["fits"]["p=2,q=1"]["convergent"], false);
    assert_golden("ko_grid", tmp.path());
    let csv = fs::read_to_string(tmp.path().join("ko.csv")).unwrap();
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn karamata_probe_reports_l1() {
    let tmp = TempDir::new().unwrap();
    let o = run("karamata-probe", &scenario("karamata_power"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(tmp.path());
    assert!((r["fits"]["limits"]["l1"].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert_golden("karamata_power", tmp.path());
}

#[test]
fn reports_are_identical_across_runs_and_job_counts() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(run("verify-first-order", &scenario("a2_exponent_grid"), a.path(), &["--jobs", "1"]).status.code(), Some(0));
    assert_eq!(run("verify-first-order", &scenario("a2_exponent_grid"), b.path(), &["--jobs", "4"]).status.code(), Some(0));
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 6);
    for name in names.iter().filter(|n| n.to_str() != Some("timing.json")) {
        let (x, y) = (fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        assert!(x == y, "{name:?} differs between --jobs 1 and --jobs 4");
    }
}

#[test]
fn shipped_first_order_scenarios_pass() {
    let tmp = TempDir::new().unwrap();
    let o = run("verify-first-order", &scenario("a1_exact_solution"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(tmp.path());
    let verdicts = r["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 3);
    assert!(verdicts.iter().all(|v| v["status"] == "PASS"));

    let tmp = TempDir::new().unwrap();
    let o = run("verify-first-order", &scenario("a4_composition"), tmp.path(), &["--jobs", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(tmp.path());
    assert_eq!(r["fits"]["p=2,alpha=0/composition"]["verdict"], "inconclusive_by_design");
    assert_eq!(r["fits"]["p=3,alpha=0/measured"]["verdict"], "proof");
    let csv = fs::read_to_string(tmp.path().join("adjudication.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn second_order_scenario_records_resolution() {
    let tmp = TempDir::new().unwrap();
    let o = run("verify-second-order", &scenario("second_order"), tmp.path(), &["--dump-phi"]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(tmp.path());
    let res = &r["fits"]["second_order/resolution"];
    assert!(res["finest_distance"].as_f64().unwrap() < 1e-6);
    assert_eq!(res["outside_hypothesis"], true);
    assert!(tmp.path().join("second_order_phi.csv").exists());
}

#[test]
fn verdict_failure_exits_2() {
    let tmp = TempDir::new().unwrap();
    // For p = 3, α = 0 the measured ξ follows the p numerator, not 2.
    let cfg = write_config(&tmp, "name = \"p3\"\n[problem]\np = 3.0\nnonlinearity = { sigma = 3.0 }\n");
    let out = tmp.path().join("out");
    let o = run("verify-first-order", &cfg, &out, &["--variant", "theorem"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&out)["outcome"], "fail");
    let o = run("verify-first-order", &cfg, &out, &["--variant", "proof"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&out)["variant"], "proof");
}

#[test]
fn execution_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "name = \"sub\"\n[predict]\np = 2.0\nalpha = 0.0\npower_q = 0.5\n");
    let out = tmp.path().join("out");
    let o = run("predict", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["outcome"], "error");
    assert!(r["errors"][0].as_str().unwrap().contains("no blow-up"));

    let cfg = write_config(&tmp, "name = \"typo\"\n[predict]\np = 2.0\nalpha = 0.0\npowerq = 3.0\n");
    let o = run("predict", &cfg, &out.join("typo"), &[]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("powerq") && stderr.contains("line 5"), "{stderr}");
    assert!(!out.join("typo").exists());

    let o = run("predict", &scenario("predict_power"), &out, &["--tolerance-overrides", "slope=1"]);
    assert_eq!(o.status.code(), Some(1));
}
