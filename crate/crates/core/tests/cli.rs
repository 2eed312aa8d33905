use std::path::Path;
use std::process::{Command, Output};

use navier_cpi::cli::{AnalyzeReport, FlowSummary, VerifyReport};
use navier_cpi::domain::{regular_part, DomainModel};
use navier_cpi::kmodel::universal_constants;
use navier_cpi::numerics::QuadratureSpec;
use navier_cpi::pseudoflow::Terminal;
use serde_json::json;

const BIN: &str = env!("CARGO_BIN_EXE_navier-cpi");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, value: &serde_json::Value) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_vec_pretty(value).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

/// Re-serializing the parsed report reproduces the file byte for byte.
fn round_trips<T: serde::Serialize + serde::de::DeserializeOwned>(path: &Path) -> T {
    let text = std::fs::read_to_string(path).unwrap();
    let value: T = serde_json::from_str(&text).unwrap();
    let again = serde_json::to_string_pretty(&value).unwrap() + "\n";
    assert_eq!(again, text, "{} does not round-trip", path.display());
    value
}

#[test]
fn analyze_two_points_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("analyze-two-points.json");
    let o = run(&["--config", cfg.to_str().unwrap(), "analyze"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: AnalyzeReport = round_trips(&dir.path().join("analysis.json"));
    assert_eq!(report.schema_version, 1);
    assert!(report.infinity.nondegeneracy.holds);
}

#[test]
fn analyze_without_records_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({ "schema-version": 1, "n": 5, "domain": { "backend": "unit-ball", "n": 5 }, "k": { "background": 1.0 } }),
    );
    let o = run(&["--config", &cfg, "analyze"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: AnalyzeReport = round_trips(&dir.path().join("analysis.json"));
    assert_eq!(report.infinity.elements().count(), 0);
}

#[test]
fn degenerate_interaction_matrix_exits_with_3() {
    // One point with β = n-4 whose diagonal entry c₂H(y,y) - c₁Σb vanishes.
    let n = 6;
    let d = DomainModel::unit_ball(n).unwrap();
    let c = universal_constants(n, 1.5, &QuadratureSpec::default()).unwrap();
    let y = vec![0.0; n];
    let h = regular_part(&d, &y, &y).unwrap();
    let b = c.c2_thm.value * h / (c.c1_thm.value * n as f64);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "schema-version": 1, "n": n,
            "domain": { "backend": "unit-ball", "n": n },
            "k": { "background": 1.0, "records": [{ "y": y, "beta": 2.0, "b": vec![b; n], "radius": 0.2, "value": 1.0 }] }
        }),
    );
    let o = run(&["--config", &cfg, "analyze"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let report: AnalyzeReport = round_trips(&dir.path().join("analysis.json"));
    assert_eq!(report.infinity.nondegeneracy.offending, Some(vec![0]));
}

#[test]
fn invalid_configs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        &json!({ "schema-version": 1, "n": 5, "domain": { "backend": "unit-ball", "n": 5 }, "k": { "background": 1.0, "slope": 2 } }),
    );
    assert_eq!(code(&run(&["--config", &unknown, "analyze"], dir.path())), 2);
    let version = write_config(
        dir.path(),
        &json!({ "schema-version": 9, "n": 5, "domain": { "backend": "unit-ball", "n": 5 }, "k": { "background": 1.0 } }),
    );
    assert_eq!(code(&run(&["--config", &version, "analyze"], dir.path())), 2);
    assert_eq!(code(&run(&["analyze"], dir.path())), 2);
    assert_eq!(code(&run(&["constants", "--n", "6", "--beta", "6"], dir.path())), 2);
    assert_eq!(code(&run(&["constants", "--n", "4", "--beta", "1"], dir.path())), 2);
}

#[test]
fn constants_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["constants", "--n", "7", "--beta", "2.5"];
    let (oa, ob) = (run(&args, a.path()), run(&args, b.path()));
    assert_eq!((code(&oa), code(&ob)), (0, 0));
    assert_eq!(oa.stdout, ob.stdout);
    let ja = std::fs::read(a.path().join("constants.json")).unwrap();
    assert_eq!(ja, std::fs::read(b.path().join("constants.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(v["schema-version"], 1);
}

#[test]
fn default_verification_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: VerifyReport = round_trips(&dir.path().join("verify.json"));
    assert!(report.all_passed && !report.expansion.is_empty() && !report.decrease.is_empty());
}

#[test]
fn flow_dichotomy_terminals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("flow-dichotomy.json");
    let o = run(&["--config", cfg.to_str().unwrap(), "--plots", "flow"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: FlowSummary = round_trips(&dir.path().join("flow-summary.json"));
    let terminal = |label: &str| summary.runs.iter().find(|r| r.label == label).unwrap().terminal.clone();
    assert_eq!(terminal("plus-point"), Terminal::CriticalPointAtInfinity { limit: vec![0] });
    assert!(matches!(terminal("minus-point"), Terminal::RegionExit { .. }));
    assert!(matches!(terminal("shared-patch"), Terminal::RegionExit { .. }));
    for (i, run) in summary.runs.iter().enumerate() {
        assert!(run.strictly_decreasing, "{}", run.label);
        let csv = std::fs::read_to_string(dir.path().join(&run.trajectory)).unwrap();
        assert_eq!(csv.lines().count(), run.samples + 1);
        assert!(csv.starts_with("s,J,alpha_1,"));
        assert!(dir.path().join(format!("trajectory-{i}.svg")).exists());
    }
}
