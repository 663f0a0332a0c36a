use std::fs;
use std::process::{Command, Output};

fn quadstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadstab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_report_trace_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let trace = dir.path().join("trace.jsonl");
    let dot = dir.path().join("graph.dot");
    let o = quadstab(&[
        "run",
        "--n",
        "8",
        "--dim",
        "2",
        "--seed",
        "1",
        "--max-rounds",
        "500",
        "--out",
        report.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let r = json(&report);
    assert_eq!(r["schema"], "quadstab.report/1");
    assert!(r["converged_round"].is_u64());
    assert!(r["violations"].as_object().unwrap().values().all(|v| v == 0));
    let lines = fs::read_to_string(&trace).unwrap();
    assert!(lines.lines().count() > 8);
    for line in lines.lines() {
        let e: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(["TIMEOUT", "DELIVER", "SEARCH_START", "SEARCH_END"].contains(&e["kind"].as_str().unwrap()));
    }
    let g = fs::read_to_string(&dot).unwrap();
    assert!(g.starts_with("digraph"));
    assert!(g.contains("kind=list") && g.contains("kind=quad"));
}

#[test]
fn reports_are_byte_identical_except_timing() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("r{i}.json"));
        let o = quadstab(&["run", "--n", "6", "--seed", "9", "--inflight", "6", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        let mut r = json(&out);
        r["wall_time_ms"] = 0.into();
        reports.push(serde_json::to_string(&r).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn single_node_converges_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = quadstab(&["run", "--n", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(json(&out)["converged_round"], 0);
}

#[test]
fn quad_only_start_converges() {
    let o = quadstab(&["run", "--n", "8", "--init", "quad-only"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("converged in round"));
}

#[test]
fn exit_codes() {
    assert_eq!(quadstab(&["run", "--n", "8", "--max-rounds", "1"]).status.code(), Some(4));
    assert_eq!(quadstab(&["run", "--n", "0"]).status.code(), Some(2));
    assert_eq!(quadstab(&["run", "--delta", "0"]).status.code(), Some(2));
    assert_eq!(quadstab(&["run", "--policy", "fifo"]).status.code(), Some(2));
    assert_eq!(quadstab(&["run", "--dim", "1"]).status.code(), Some(2));
}

#[test]
fn scenario_file_with_explicit_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    fs::write(
        &path,
        r#"{
            "schema": "quadstab.scenario/1",
            "dimension": 2,
            "bits": 8,
            "seed": 3,
            "nodes": [
                {"bits": 8, "axes": [25, 231]},
                {"bits": 8, "axes": [101, 153]},
                {"bits": 8, "axes": [153, 51]},
                {"bits": 8, "axes": [229, 205]}
            ],
            "placement": "uniform",
            "init_topology": "star",
            "init_inflight": 4
        }"#,
    )
    .unwrap();
    let snap = dir.path().join("snap.json");
    let o = quadstab(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--snapshot",
        snap.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&snap);
    assert_eq!(s["schema"], "quadstab.snapshot/1");
    assert_eq!(s["nodes"].as_array().unwrap().len(), 4);

    fs::write(&path, r#"{"schema": "quadstab.scenario/9", "dimension": 2, "seed": 1, "n": 3, "placement": "uniform", "init_topology": "line"}"#).unwrap();
    assert_eq!(quadstab(&["run", "--scenario", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = quadstab(&[
        "sweep",
        "--n",
        "4,8",
        "--dims",
        "2,3",
        "--seeds",
        "1..2",
        "--inits",
        "line,quad-only",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("n,dim,seed,init,policy"));
    assert_eq!(lines.count(), 16);
    assert!(!csv.contains("NON_CONVERGED"));
}

#[test]
fn empty_sweep_succeeds() {
    let o = quadstab(&["sweep", "--seeds", ""]);
    assert!(o.status.success());
}

#[test]
fn check_runs_selected_criteria() {
    let o = quadstab(&["check", "--only", "8"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("[PASS]  8"));
}
