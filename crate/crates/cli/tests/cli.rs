use std::io::Write;
use std::process::{Command, Output};

fn latcrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latcrit")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gram_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn design_failure_exits_one() {
    let f = gram_file(r#"{"n": 2, "gram": [[1, 0], [0, 2]]}"#);
    let path = f.path().to_str().unwrap();
    let o = latcrit(&["design", "--gram", path, "--layer-norm", "1", "--t", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "4 != 2, FAILURE on the layer (x,x)=1");

    let o = latcrit(&["design", "--gram", path, "--layer-norm", "1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"]["type"], "designs");
    assert_eq!(v["outcome"]["data"][0]["lhs"], "4");
    assert_eq!(v["outcome"]["data"][0]["rhs"], "2");
}

#[test]
fn doubled_counterexample_fails_too() {
    let f = gram_file("2\n2 0\n0 4\n");
    let o = latcrit(&["fully-critical", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("NOT FULLY CRITICAL: the layer (x,x)=2"));
}

#[test]
fn hexagonal_design_passes() {
    let f = gram_file("2\n2 1\n1 2\n");
    let o = latcrit(&["design", f.path().to_str().unwrap(), "--bound", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn tables_dimension_four() {
    let o = latcrit(&["tables", "--dim", "4", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["outcome"]["data"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r["verdict"]["kind"] == "fully-critical"), "{rows:?}");
}

#[test]
fn ste10a_transcript() {
    let o = latcrit(&["fully-critical", "--name", "ste10a", "--bound", "60"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("the layer (x,x)=2 is empty"));
    assert!(out.contains("150 = 150, 2-DESIGN on the layer (x,x)=3"));
    assert!(out.contains("4118640000 = 4118640000, 2-DESIGN on the layer (x,x)=60"));
    assert!(out.contains("level 20"));
}

#[test]
fn json_report_round_trips() {
    let o = latcrit(&["fully-critical", "--name", "sta3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let r = latcrit::report::RunReport::from_json(&text).unwrap();
    assert_eq!(r.command, "fully-critical");
    assert_eq!(r.truncation.as_deref(), Some("B = 2"));
    assert_eq!(latcrit::report::RunReport::from_json(&r.to_json()).unwrap(), r);
}

#[test]
fn layers_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("layers.txt");
    let o = latcrit(&["layers", "--name", "sta2", "--bound", "2", "--dump-layers", dump.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1 4\n2 4\n");
    let d = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(d.lines().next(), Some("1 4"));
    assert_eq!(d.lines().count(), 10);
}

#[test]
fn analyze_reports_theta() {
    let o = latcrit(&["analyze", "--name", "sta2", "--bound", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("theta = 1 + 4*q^1/2 + 4*q^1 + 4*q^2  (exponents <= 2)"), "{}", stdout(&o));
}

#[test]
fn height_and_stationarity() {
    let o = latcrit(&["height", "--name", "sta3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["outcome"]["data"]["projected_residual"].as_f64().unwrap() < 1e-6);

    let f = gram_file("2\n1 0\n0 2\n");
    let o = latcrit(&["stationarity", f.path().to_str().unwrap(), "--radius", "30", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["outcome"]["data"]["residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn probe_single_form() {
    let o = latcrit(&["probe-conjecture", "--name", "stc12"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "stc12: fully critical");
}

#[test]
fn usage_errors() {
    assert_eq!(latcrit(&["fully-critical"]).status.code(), Some(2));
    assert_eq!(latcrit(&["fully-critical", "--name", "nope"]).status.code(), Some(2));
    assert_eq!(latcrit(&["tables", "--dim", "9"]).status.code(), Some(2));
    let f = gram_file("2\n1 2\n2 1\n");
    let o = latcrit(&["layers", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn thread_count_does_not_change_output() {
    let a = latcrit(&["fully-critical", "--name", "ste9", "--threads", "1"]);
    let b = latcrit(&["fully-critical", "--name", "ste9", "--threads", "3"]);
    assert_eq!(a.stdout, b.stdout);
}
