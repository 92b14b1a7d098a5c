use std::path::Path;
use std::process::{Command, Output};

fn negosim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_negosim")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn gen(dir: &Path, name: &str, seed: &str) {
    ok(&negosim(
        &[
            "gen-scenario",
            "--issues",
            "3",
            "--values-per-issue",
            "4",
            "--reservation",
            "0.3",
            "--seed",
            seed,
            "--out",
            name,
        ],
        dir,
    ));
}

#[test]
fn gen_scenario_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "a.json", "7");
    gen(dir.path(), "b.json", "7");
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    gen(dir.path(), "c.json", "8");
    assert_ne!(a, std::fs::read(dir.path().join("c.json")).unwrap());
}

#[test]
fn session_report_equals_replayed_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "s.json", "7");
    let run = |trace: &str, models: &str| {
        ok(&negosim(
            &[
                "run-session",
                "--scenario",
                "s.json",
                "--agents",
                "herbt,frequency,random",
                "--seed",
                "11",
                "--trace-out",
                trace,
                "--models-out",
                models,
            ],
            d,
        ))
    };
    let inline = run("t.jsonl", "m.jsonl");
    let replayed = ok(&negosim(&["analyze", "metrics", "--scenario", "s.json", "--trace", "t.jsonl"], d));
    assert_eq!(inline, replayed);
    assert_eq!(inline, run("t2.jsonl", "m2.jsonl"));
    assert_eq!(std::fs::read(d.join("t.jsonl")).unwrap(), std::fs::read(d.join("t2.jsonl")).unwrap());

    let quality = ok(&negosim(
        &["analyze", "model-quality", "--scenario", "s.json", "--trace", "t.jsonl", "--models", "m.jsonl"],
        d,
    ));
    assert!(quality.starts_with("round,pearson,mae\n"));
    assert!(quality.lines().count() > 1);
}

#[test]
fn replay_against_another_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "s.json", "7");
    gen(d, "other.json", "9");
    ok(&negosim(
        &["run-session", "--scenario", "s.json", "--agents", "random,random,random", "--trace-out", "t.jsonl"],
        d,
    ));
    let out = negosim(&["analyze", "metrics", "--scenario", "other.json", "--trace", "t.jsonl"], d);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn json_agent_blocks_and_beta_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "s.json", "7");
    let agents =
        r#"[{"type":"herbt"},{"type":"time_dependent","e":0.2},{"type":"always_accept","opening":"herbt_bidding"}]"#;
    let out = ok(&negosim(&["run-session", "--scenario", "s.json", "--agents", agents, "--beta", "0.5"], d));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["agents"][1], "time_dependent");
    assert_eq!(v["per_agent"][2]["declines"], 0);
}

#[test]
fn two_baseline_tournament_writes_one_row_per_lineup() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen(d, "s.json", "7");
    std::fs::write(
        d.join("cfg.json"),
        r#"{"scenarios": [{"file": "s.json"}],
            "roster": [{"id": "freq", "strategy": {"type": "frequency"}},
                       {"id": "td", "strategy": {"type": "time_dependent", "e": 0.2}}],
            "repetitions": 1, "beta_grid": [1.0], "master_seed": 4}"#,
    )
    .unwrap();
    ok(&negosim(&["run-tournament", "--config", "cfg.json", "--out-dir", "out1", "--workers", "1"], d));
    ok(&negosim(&["run-tournament", "--config", "cfg.json", "--out-dir", "out4", "--workers", "4"], d));
    let sessions = std::fs::read_to_string(d.join("out1/sessions.csv")).unwrap();
    assert_eq!(sessions.lines().count(), 1 + 4);
    for name in
        ["beta_score.csv", "discount_sweep.csv", "acceptance.csv", "agreement_rate.csv", "ttest.csv", "sessions.csv"]
    {
        assert_eq!(
            std::fs::read(d.join("out1").join(name)).unwrap(),
            std::fs::read(d.join("out4").join(name)).unwrap(),
            "{name} depends on the worker count"
        );
    }
    let sweep = std::fs::read_to_string(d.join("out1/discount_sweep.csv")).unwrap();
    assert!(sweep.starts_with('#'));
}

#[test]
fn tournament_with_models_and_ablation_writes_extra_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("cfg.json"),
        r#"{"scenarios": [{"generate": {"issues": 2, "values_per_issue": 3, "reservation": 0.2}}],
            "roster": [{"id": "h", "strategy": {"type": "herbt"}},
                       {"id": "r", "strategy": {"type": "random"}}],
            "repetitions": 1, "beta_grid": [1.0], "master_seed": 4, "record_models": true,
            "require_agent": "h"}"#,
    )
    .unwrap();
    ok(&negosim(&["run-tournament", "--config", "cfg.json", "--out-dir", "out", "--ablation", "h"], d));
    let q = std::fs::read_to_string(d.join("out/model_quality.csv")).unwrap();
    assert!(q.lines().count() > 1);
    let ab = std::fs::read_to_string(d.join("out/ablation.csv")).unwrap();
    assert_eq!(ab.lines().count(), 3);
}

#[test]
fn ttest_on_a_two_column_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("p.csv"), "x,y\n1,0\n2,0\n3,0\n4,0\n").unwrap();
    let out = ok(&negosim(&["analyze", "ttest", "--input", "p.csv"], dir.path()));
    assert_eq!(out, "t,p,n\n3.87298,0.0304663,4\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(negosim(&["--no-such-flag"], d).status.code(), Some(1));
    assert_eq!(negosim(&["gen-scenario", "--issues", "x", "--values-per-issue", "2"], d).status.code(), Some(1));
    assert_eq!(negosim(&["--help"], d).status.code(), Some(0));

    std::fs::write(d.join("bad.json"), r#"{"scenarios": [], "roster": [], "repetitons": 1}"#).unwrap();
    let out = negosim(&["run-tournament", "--config", "bad.json", "--out-dir", "o"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("repetitons"));
    assert!(!d.join("o").exists());

    gen(d, "s.json", "7");
    let out = negosim(&["run-session", "--scenario", "s.json", "--agents", "herbt,random"], d);
    assert_eq!(out.status.code(), Some(1));

    // 12^9 outcomes exceed HerbT's enumeration cap.
    ok(&negosim(&["gen-scenario", "--issues", "9", "--values-per-issue", "12", "--out", "big.json"], d));
    let out = negosim(&["run-session", "--scenario", "big.json", "--agents", "herbt,random,random"], d);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
