use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn mnolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnolab")).args(args).env_remove("MNOLAB_THREADS").output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_config_errors_with_code_2() {
    let smoke = config("smoke.json");
    let ok = mnolab(&["validate", "--config", s(&smoke)]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("construct:p2-h2-n3"));

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mnolab(&["validate", "--config", s(&dir.path().join("missing.json"))])), 2);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&mnolab(&["validate", "--config", s(&bad)])), 2);

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"operator": {"name": "kernel"}, "dims": [1, 1, 1], "typo": 1}"#).unwrap();
    assert_eq!(code(&mnolab(&["validate", "--config", s(&unknown)])), 2);

    assert_eq!(code(&mnolab(&["sweep"])), 2);
}

#[test]
fn sweep_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = mnolab(&["sweep", "--config", s(&config("smoke.json")), "--out", s(dir.path()), "--threads", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "key,kind,p,h,n,delta_w,delta_u,variant,n_alpha,complexity,nonzeros,sup_error,gen_error,gen_stderr,train_loss,status"
    );
    assert_eq!(lines.filter(|l| l.ends_with(",ok")).count(), 4);
    let sidecar: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(sidecar["complete"], true);

    let results = dir.path().join("results.csv");
    let fit = mnolab(&["fit", "--input", s(&results), "--model", "powerlaw"]);
    assert_eq!(code(&fit), 0, "{}", String::from_utf8_lossy(&fit.stderr));
    let fit: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["points"].as_array().unwrap().len(), 3);
    assert!(fit["exponent"].as_f64().unwrap() < 0.0);
}

#[test]
fn gen_data_then_train() {
    let dir = tempfile::tempdir().unwrap();
    let smoke = config("smoke.json");
    let gen = mnolab(&["gen-data", "--config", s(&smoke), "--out", s(dir.path()), "--n-alpha", "3"]);
    assert_eq!(code(&gen), 0, "{}", String::from_utf8_lossy(&gen.stderr));
    let csv = fs::read_to_string(dir.path().join("train.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "alpha_id,u_id,x_1,label");
    assert_eq!(csv.lines().count(), 1 + 3 * 2 * 4);

    let stem = dir.path().join("train");
    let train = mnolab(&["train", "--config", s(&smoke), "--out", s(dir.path()), "--data", s(&stem)]);
    assert_eq!(code(&train), 0, "{}", String::from_utf8_lossy(&train.stderr));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "step,loss");
    assert!(dir.path().join("model.json").exists());
}

#[test]
fn compare_agg_writes_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let out = mnolab(&["compare-agg", "--config", s(&config("smoke.json")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn bounds_writes_report_and_envelopes() {
    let dir = tempfile::tempdir().unwrap();
    let out = mnolab(&["bounds", "--config", s(&config("bounds.json")), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bounds.json")).unwrap()).unwrap();
    assert!(report["generalization"].is_object());
    assert_eq!(report["rate"].as_array().unwrap().len(), 4);
    let env = fs::read_to_string(dir.path().join("envelopes.csv")).unwrap();
    assert_eq!(env.lines().count(), 5);
}
