//! End-to-end runs of the `vsss` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn vsss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsss")).args(args).env_remove("RUST_BACKTRACE").output().expect("run vsss")
}

fn ok(args: &[&str]) -> String {
    let out = vsss(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fail(args: &[&str]) -> String {
    let out = vsss(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SHORT: [&str; 2] = ["--set", "env.max_duration=20"];

#[test]
fn still_agent_has_undefined_steps_to_goal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let stdout = ok(&[SHORT[0], SHORT[1], "--out", s(&out), "rollout", "--agent", "still", "--episodes", "2"]);
    assert!(stdout.contains("undefined"), "{stdout}");
    let report = json(&out.join("report.json"));
    assert!(report["steps_to_goal_mean"].is_null());
    assert_eq!(report["episodes"], 2);
    assert_eq!(report["window"], 100);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["subcommand"], "rollout");
    assert_eq!(manifest["config"]["rollout"]["agent"], "still");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn chase_scores_on_empty_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let sets = ["--set", "env.with_opponents=false", "--set", "env.end_on_goal=true", "--set", "env.max_duration=30"];
    let mut args: Vec<&str> = sets.to_vec();
    args.extend(["--out", s(&out), "rollout", "--agent", "chase", "--episodes", "100"]);
    ok(&args);
    let report = json(&out.join("report.json"));
    assert!(report["scoring_episodes"].as_u64().unwrap() >= 95);
}

#[test]
fn replay_reproduces_reported_score_and_frame_count() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok(&["--seed", "3", "--set", "env.max_duration=40", "--out", s(&run), "rollout", "--agent", "goto-ball-goal", "--episodes", "2"]);
    let report = json(&run.join("report.json"));
    for ep in 0..2 {
        let frames = dir.path().join(format!("frames{ep}"));
        let log = run.join(format!("episode_{ep:03}.csv"));
        let stdout = ok(&["--out", s(&frames), "replay", "--log", s(&log), "--every", "100"]);
        let score = &report["per_episode"][ep]["final_score"];
        assert!(score["blue"].as_i64().unwrap() >= 1);
        let expected = format!("final score blue {} : {} yellow", score["blue"], score["yellow"]);
        assert!(stdout.contains(&expected), "{stdout} vs {expected}");
        let svgs = fs::read_dir(&frames).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg")).count();
        assert_eq!(svgs, 12);
    }
}

#[test]
fn metrics_recomputes_rollout_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok(&[SHORT[0], SHORT[1], "--seed", "5", "--out", s(&run), "rollout", "--agent", "random", "--episodes", "3"]);
    let m = dir.path().join("metrics");
    ok(&["--out", s(&m), "metrics", "--log", s(&run)]);
    assert_eq!(fs::read(run.join("report.json")).unwrap(), fs::read(m.join("report.json")).unwrap());
}

#[test]
fn manifest_reproduces_run() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&[SHORT[0], SHORT[1], "--seed", "9", "--out", s(&a), "rollout", "--agent", "random", "--episodes", "2"]);
    let manifest = a.join("manifest.json");
    ok(&["--config", s(&manifest), "--out", s(&b), "rollout"]);
    for f in ["report.json", "episode_000.csv", "episode_001.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn train_adaptor_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let err = fail(&["--out", s(&dir.path().join("x")), "train-adaptor", "--data", s(&empty)]);
    assert!(err.contains("empty.csv"), "{err}");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "t,v_d,w_d,v_obs,w_obs,vl_cmd,vr_cmd\n0,1,2,3,4,5,6\n0.1,1,oops,3,4,5,6\n").unwrap();
    let err = fail(&["--out", s(&dir.path().join("x")), "train-adaptor", "--data", s(&bad)]);
    assert!(err.contains("bad.csv") && err.contains("line: 3"), "{err}");

    let missing = dir.path().join("missing.csv");
    let err = fail(&["--out", s(&dir.path().join("x")), "train-adaptor", "--data", s(&missing)]);
    assert!(err.contains("missing.csv"), "{err}");
}

#[test]
fn train_adaptor_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("c");
    ok(&["--seed", "2", "--out", s(&data), "collect", "--synthetic", "3000"]);
    let csv = data.join("trajectories.csv");
    let t1 = dir.path().join("t1");
    let t2 = dir.path().join("t2");
    for t in [&t1, &t2] {
        ok(&["--seed", "4", "--set", "training.hidden=[16]", "--out", s(t), "train-adaptor", "--data", s(&csv), "--epochs", "3"]);
    }
    assert_eq!(fs::read(t1.join("model.vsmlp")).unwrap(), fs::read(t2.join("model.vsmlp")).unwrap());
    let history = fs::read_to_string(t1.join("loss_history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 4);
    assert!(history.starts_with("epoch,train,validation\n"));
}

#[test]
fn eval_adaptor_on_identity_plant_is_neutral() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("c");
    ok(&["--out", s(&data), "collect", "--synthetic", "20000"]);
    let model = dir.path().join("t");
    ok(&["--out", s(&model), "train-adaptor", "--data", s(&data.join("trajectories.csv"))]);
    let eval = dir.path().join("e");
    let stdout = ok(&["--out", s(&eval), "eval-adaptor", "--model", s(&model.join("model.vsmlp")), "--identity-plant", "--episodes", "12"]);
    assert!(stdout.contains("ratio adapted/unadapted"), "{stdout}");
    let report = json(&eval.join("eval_report.json"));
    let ratio = report["ratio"].as_f64().unwrap();
    assert!((0.8..1.25).contains(&ratio), "ratio {ratio}");
    assert_eq!(report["baseline"], report["unadapted"]);
    assert!(report["adapted_vs_baseline"]["p_value"].is_number());

    let bogus = dir.path().join("bogus.vsmlp");
    fs::write(&bogus, b"VSMLP9....").unwrap();
    let err = fail(&["--out", s(&eval), "eval-adaptor", "--model", s(&bogus)]);
    assert!(err.contains("bogus.vsmlp"), "{err}");
}

#[test]
fn bad_inputs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    fail(&["--out", out, "rollout", "--agent", "dqn"]);
    fail(&["--config", "/nonexistent/kit.toml", "--out", out, "rollout"]);
    fail(&["--set", "env.n_per_team=7", "--out", out, "rollout"]);
    fail(&["--out", out, "replay", "--log", "/nonexistent/log.csv"]);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    fail(&["--out", s(&blocker.join("sub")), SHORT[0], SHORT[1], "rollout", "--episodes", "1"]);
}

#[test]
fn serve_runs_a_bounded_session() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("serve");
    ok(&["--out", s(&out), "serve", "--command-port", "0", "--state-port", "0", "--rate", "0", "--frames", "50"]);
    let stats = json(&out.join("server_stats.json"));
    assert_eq!(stats["frames"], 50);
}
