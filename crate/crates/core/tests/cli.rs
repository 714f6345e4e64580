use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firecontract")).args(args).output().expect("spawn firecontract")
}

fn ok(args: &[&str]) -> String {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn scene(dir: &Path, extra: &[&str]) -> String {
    let out = s(&dir.join("scene"));
    let mut args = vec!["synth", "scene", "--seed", "7", "--out", &out];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let rec = scene(dir.path(), &[]);
    let labels = format!("{rec}/labels.fgr");
    assert_eq!(bin(&["eval", "--bogus"]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
    let missing =
        bin(&["eval", "--scores", "nope.fgr", "--labels", &labels, "--contract", "occupancy/exact_f1/global"]);
    assert_eq!(missing.status.code(), Some(3));
    // a burned-area contract cannot score an occupancy grid
    let wrong = bin(&["eval", "--scores", &labels, "--labels", &labels, "--contract", "burned_area/rmse/test_events"]);
    assert_eq!(wrong.status.code(), Some(2), "{}", String::from_utf8_lossy(&wrong.stderr));
    let bad_rules = bin(&["sweep", "--record", &rec, "--rules", "strict,union"]);
    assert_eq!(bad_rules.status.code(), Some(1));
}

#[test]
fn eval_of_labels_against_themselves_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let rec = scene(dir.path(), &[]);
    let labels = format!("{rec}/labels.fgr");
    let csv = ok(&[
        "eval",
        "--scores",
        &labels,
        "--labels",
        &labels,
        "--contract",
        "occupancy/exact_f1/global",
        "--format",
        "csv",
    ]);
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("occupancy/exact_f1/exact/global,exact_f1,100.0000,100.0000,100.0000,"), "{row}");
}

#[test]
fn eval_reproduces_from_its_echo() {
    let dir = tempfile::tempdir().unwrap();
    let rec = scene(dir.path(), &["--displacement", "1,0", "--noise-sd", "0.1"]);
    let first = s(&dir.path().join("first.json"));
    ok(&[
        "eval",
        "--scores",
        &format!("{rec}/scores.fgr"),
        "--labels",
        &format!("{rec}/labels.fgr"),
        "--contract",
        "occupancy/union_f1/global",
        "--train",
        "0:4",
        "--val",
        "4:6",
        "--test",
        "6:8",
        "--out",
        &first,
    ]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&first).unwrap()).unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, report["run"].to_string()).unwrap();
    let second = s(&dir.path().join("second.json"));
    ok(&["eval", "--config", &s(&config), "--out", &second]);
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn sweep_on_a_displaced_scene_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let rec = scene(dir.path(), &["--displacement", "3,0", "--noise-sd", "0.1", "--false-alarm-rate", "0.02"]);
    let report: serde_json::Value = serde_json::from_str(&ok(&["sweep", "--record", &rec, "--tau", "0.7"])).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let f = |k: &str| row[k].as_f64().unwrap();
        assert!(f("strict_f1") <= f("tolerated_f1") && f("tolerated_f1") <= f("union_f1"), "{row}");
    }
    assert!(rows[0]["union_f1"].as_f64().unwrap() > 0.8);
}

#[test]
fn report_keeps_contracts_apart() {
    let dir = tempfile::tempdir().unwrap();
    let rec = scene(dir.path(), &["--displacement", "2,0"]);
    let reports = dir.path().join("reports");
    ok(&["sweep", "--record", &rec, "--backbone", "a", "--out", &s(&reports.join("a.json"))]);
    ok(&[
        "sweep",
        "--record",
        &rec,
        "--backbone",
        "b",
        "--rules",
        "strict,tolerated:1:0,union:1:1",
        "--out",
        &s(&reports.join("b.json")),
    ]);
    let md = ok(&["report", "--in", &s(&reports), "--format", "markdown"]);
    assert_eq!(md.matches("### Table").count(), 2, "{md}");
    let csv = ok(&["report", "--in", &s(&reports), "--format", "csv"]);
    assert!(csv.contains("tolerated(k=1,dt=0)") && csv.contains("tolerated(k=8,dt=0)"));

    let text = std::fs::read_to_string(reports.join("b.json")).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    json["rows"][2]["contracts"][1]["matching"] = serde_json::json!({"tolerated": {"k": 8, "dt": 0}});
    std::fs::write(reports.join("b.json"), json.to_string()).unwrap();
    assert_eq!(bin(&["report", "--in", &s(&reports)]).status.code(), Some(2));
}

#[test]
fn regret_on_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let sc = s(&dir.path().join("scenario"));
    ok(&["synth", "regret-scenario", "--seed", "1", "--out", &sc]);
    let out = ok(&[
        "regret",
        "--features",
        &format!("{sc}/features.fgr"),
        "--labels",
        &format!("{sc}/labels.fgr"),
        "--contract",
        &format!("{sc}/contract.json"),
        "--seeds",
        "1",
        "--epochs",
        "5",
        "--scopes",
        "global",
        "--train",
        "0:16",
        "--val",
        "16:23",
        "--test",
        "23:30",
        "--mode",
        "in-sample",
    ]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["mode"], "same_as_selection");
    assert!(rows[0]["seeds"][0]["delta"].as_f64().unwrap() >= 0.0);
}

#[test]
fn synth_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(&dir.path().join("t"));
    ok(&["synth", "events", "--seed", "3", "--events", "40", "--out", &out]);
    ok(&[
        "synth",
        "stations",
        "--seed",
        "3",
        "--stations",
        "4",
        "--times",
        "50",
        "--station-kind",
        "smoke",
        "--out",
        &out,
    ]);
    let names: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(names.iter().any(|n| n.ends_with(".csv")), "{names:?}");
}
