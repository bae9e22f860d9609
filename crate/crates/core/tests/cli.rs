use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use acsq::cli::{execute, Command as Cmd, ExperimentConfig, MatrixRecord, ResultRecord, SeriesRecord};
use proptest::prelude::*;
use tempfile::TempDir;

const BASE: &str = r#"schema = 1
name = "run"

[basis]
size = 6
grid_order = 80

[fiducial]
alpha = 2.0
beta = 1.0

[[parametrizations]]
name = "param1"

[[parametrizations]]
name = "param2"
"#;

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn acsq(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_acsq")).args(args).env_remove("ACSQ_GRID_ORDER_CAP").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn record(dir: &Path) -> ResultRecord {
    ResultRecord::from_json(&std::fs::read_to_string(dir.join("run.result.json")).unwrap()).unwrap()
}

#[test]
fn check_identity_passes_and_writes_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("size = 6\ngrid_order = 80", "size = 8\ngrid_order = 96"));
    let (code, stdout, _) = acsq(&["--config", cfg.to_str().unwrap(), "--command", "check-identity", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    let rec = record(dir.path());
    assert_eq!(rec.verdicts["param1"], "pass");
    assert!(rec.scalars["param1.identity_defect"].unwrap() < 1e-6);
    assert_eq!(rec.matrices[0].n, 8);
    let csv = std::fs::read_to_string(dir.path().join("run.table.csv")).unwrap();
    assert!(csv.starts_with("series,row,col,re,im"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("param2.resolution_of_identity")).count(), 64);
}

#[test]
fn malformed_expression_exits_with_config_status() {
    let dir = TempDir::new().unwrap();
    let body = format!("{BASE}\n[[observables]]\nlabel = \"bad\"\nkind = \"generic\"\nexprs = [\"q+*p\"]\n");
    let cfg = write_config(dir.path(), &body);
    let (code, _, stderr) = acsq(&["--config", cfg.to_str().unwrap(), "--command", "quantize", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("position 2"), "{stderr}");
    assert!(!dir.path().join("run.result.json").exists());
}

#[test]
fn unknown_keys_and_commands_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &BASE.replace("beta = 1.0", "beta = 1.0\ngamma = 3.0"));
    let (code, _, stderr) = acsq(&["--config", cfg.to_str().unwrap(), "--command", "quantize"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("gamma"), "{stderr}");
    let cfg = write_config(dir.path(), BASE);
    let (code, _, stderr) = acsq(&["--config", cfg.to_str().unwrap(), "--command", "plot"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown command"), "{stderr}");
}

#[test]
fn seedless_flag_takes_no_value() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = acsq(&["--config", cfg.to_str().unwrap(), "--command", "check-identity", "--out", out, "--seedless=1"]);
    assert_eq!(code, 2);
    let (code, _, _) = acsq(&["--config", cfg.to_str().unwrap(), "--command", "check-identity", "--out", out, "--seedless"]);
    assert_eq!(code, 0);
}

#[test]
fn divergence_is_a_result_not_a_failure() {
    let dir = TempDir::new().unwrap();
    let body = format!("{BASE}\n[[observables]]\nlabel = \"q5\"\nkind = \"p-independent\"\nexprs = [\"q^5\"]\n");
    let cfg = write_config(dir.path(), &body);
    let (code, stdout, _) = acsq(&["--config", cfg.to_str().unwrap(), "--command", "quantize", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(record(dir.path()).verdicts["param2/q5"], "divergent");
}

#[test]
fn grid_order_cap_is_applied_and_recorded() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = Command::new(env!("CARGO_BIN_EXE_acsq"))
        .args(["--config", cfg.to_str().unwrap(), "--command", "check-identity", "--out", dir.path().to_str().unwrap()])
        .env("ACSQ_GRID_ORDER_CAP", "48")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let rec = record(dir.path());
    assert_eq!(rec.grid_order_used, 48);
    assert_eq!(rec.config.basis.grid_order, 80);
}

#[test]
fn compare_parametrizations_reports_inequivalence() {
    let body = format!(
        "{BASE}\n[[observables]]\nlabel = \"bump\"\nkind = \"separable-gaussian-p\"\nexprs = [\"exp(-(ln(q)-1)^2)\"]\nprofile = {{ amplitude = 1.0, center = 0.0, width = 1.0 }}\n"
    );
    let cfg = ExperimentConfig::from_toml(&body).unwrap();
    let ex = execute(&cfg, Some(Cmd::CompareParametrizations), Path::new("."), None).unwrap();
    assert_eq!(ex.exit_code, 0);
    let rec = ex.record;
    assert_eq!(rec.verdicts["bump"], "inequivalent");
    assert!(rec.scalars["bump.difference"].unwrap() > 1e-3);
}

#[test]
fn records_are_deterministic_and_rerunnable() {
    let body = format!("{BASE}\n[[observables]]\nlabel = \"pq\"\nkind = \"linear-in-p\"\nexprs = [\"0\", \"q\"]\n");
    let cfg = ExperimentConfig::from_toml(&body).unwrap();
    let run = |c: &ExperimentConfig| {
        let mut r = execute(c, Some(Cmd::Quantize), Path::new("."), None).unwrap().record;
        r.wall_time_seconds = 0.0;
        r
    };
    let a = run(&cfg);
    let b = run(&cfg);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    // the echoed configuration re-runs the same command
    let again = run(&a.config);
    assert_eq!(a.to_json().unwrap(), again.to_json().unwrap());
    assert_eq!(a.command, "quantize");
}

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

proptest! {
    #[test]
    fn records_round_trip_bit_exactly(
        vals in prop::collection::vec(finite(), 1..12),
        n in 1usize..4,
        wall in 0.0f64..1e4,
    ) {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        let mut rec = ResultRecord::new("quantize", cfg, 80);
        let mut scalars = BTreeMap::new();
        for (k, v) in vals.iter().enumerate() {
            scalars.insert(format!("s{k}"), Some(*v));
        }
        scalars.insert("missing".into(), None);
        rec.scalars = scalars;
        let m = n * n;
        rec.matrices.push(MatrixRecord {
            name: "m".into(),
            n,
            re: (0..m).map(|k| vals[k % vals.len()]).collect(),
            im: (0..m).map(|k| -vals[(k + 1) % vals.len()]).collect(),
        });
        rec.series.push(SeriesRecord { name: "s".into(), x: vals.clone(), y: vals.iter().map(|v| v / 3.0).collect() });
        rec.wall_time_seconds = wall;
        let back = ResultRecord::from_json(&rec.to_json().unwrap()).unwrap();
        let bits = |r: &ResultRecord| -> Vec<u64> {
            r.scalars.values().flatten().chain(&r.matrices[0].re).chain(&r.matrices[0].im).chain(&r.series[0].y)
                .map(|v| v.to_bits()).collect()
        };
        prop_assert_eq!(bits(&rec), bits(&back));
        prop_assert_eq!(rec, back);
    }
}
