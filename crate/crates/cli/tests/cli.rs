use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use swarmtopo::pipeline::ScenarioConfig;

fn tiny_config(dir: &Path) -> PathBuf {
    let mut cfg = ScenarioConfig::desk(2).unwrap();
    cfg.name = "tiny".into();
    cfg.n_agents = 30;
    cfg.n_landmarks = 5;
    cfg.duration = 80.0;
    cfg.subsample.target_size = 40;
    cfg.reference_spacing = 5.0;
    cfg.delta_spacing = 3.0;
    cfg.seeds = vec![4, 9];
    cfg.output_dir = dir.join("from-config");
    let path = dir.join("tiny.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    path
}

/// Runs the binary and returns (success, parsed stdout).
fn run(args: &[&str], env: Option<&Path>) -> (bool, Value) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_swarmtopo"));
    cmd.args(args).env_remove("SWARMTOPO_OUT");
    if let Some(dir) = env {
        cmd.env("SWARMTOPO_OUT", dir);
    }
    let out = cmd.output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let v: Value = serde_json::from_str(text.trim())
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {text}"));
    assert_eq!(v["ok"], Value::Bool(out.status.success()), "{v}");
    (out.status.success(), v)
}

fn ok(args: &[&str]) -> Value {
    let (success, v) = run(args, None);
    assert!(success, "{args:?} failed: {v}");
    v
}

#[test]
fn stages_chain_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let p = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let work = p("work");

    let sim = ok(&["simulate", "--config", cfg, "--seed", "4", "--out", &work]);
    let seed_dir = PathBuf::from(sim["dir"].as_str().unwrap());
    assert!(sim["events"].as_u64().unwrap() > 0);
    let events = seed_dir.join("events.csv");
    let communities = seed_dir.join("communities.json");

    let metric = ok(&[
        "metric", "--config", cfg, "--out", &work,
        "--events", events.to_str().unwrap(),
        "--communities", communities.to_str().unwrap(),
    ]);
    assert_eq!(metric["events"], sim["events"]);
    let distances = p("work/distances.csv");

    let sub = ok(&["subsample", "--config", cfg, "--seed", "4", "--out", &work, "--distances", &distances]);
    assert_eq!(sub["sample"], 40);
    let sample = p("work/sample_distances.csv");

    let pd = ok(&["persist", "--config", cfg, "--out", &work, "--distances", &sample]);
    assert!(pd["features"][0].as_u64().unwrap() >= 1);
    let diagram = pd["diagram"].as_str().unwrap().to_owned();

    let emb = ok(&["embed", "--config", cfg, "--out", &work, "--distances", &sample]);
    assert!(emb["stress"].as_f64().unwrap() >= 0.0);

    let b = ok(&["bottleneck", "--config", cfg, "--out", &work, &diagram, &diagram]);
    assert_eq!(b["distance"], 0.0);

    let landmark = ok(&["persist", "--config", cfg, "--out", &p("lm"), "--distances", &p("work/landmark_distances.csv")]);
    let other = landmark["diagram"].as_str().unwrap();
    let trained = ok(&["classify-train", "--config", cfg, "--out", &work, "--truth", "1", &diagram, other]);
    assert_eq!(trained["params"]["dim"], 1);

    let file = trained["file"].as_str().unwrap();
    let eval = ok(&["classify-eval", "--config", cfg, "--out", &work, "--params", file, &diagram]);
    assert_eq!(eval["dims"][1]["params"]["tau"], trained["params"]["tau"]);
    assert!(eval["dims"][0]["betti"].as_u64().unwrap() >= 1);
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let env_dir = tmp.path().join("env");

    let (success, v) = run(&["pipeline", "--config", cfg, "--seed", "9"], Some(&env_dir));
    assert!(success, "{v}");
    assert_eq!(v["seeds"], 1);
    assert!(env_dir.join("tiny/seed_9/report.json").is_file());
    assert!(env_dir.join("tiny/manifest.json").is_file());
    assert!(!tmp.path().join("from-config").exists());

    let flag_dir = tmp.path().join("flag");
    let (success, _) = run(&["simulate", "--config", cfg, "--out", flag_dir.to_str().unwrap()], Some(&env_dir));
    assert!(success);
    assert!(flag_dir.join("tiny/seed_4/events.csv").is_file());
}

#[test]
fn withheld_truth_leaves_positions_out() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("o");
    ok(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--withhold-truth"]);
    let dir = out.join("tiny/seed_4");
    let events = std::fs::read_to_string(dir.join("events.csv")).unwrap();
    assert!(events.lines().skip(1).all(|l| l.ends_with(",,")));
    let landmarks: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("landmarks.json")).unwrap()).unwrap();
    assert!(landmarks["positions"].is_null());
}

#[test]
fn failures_are_reported_as_json() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let (success, v) = run(&["simulate", "--config", missing.to_str().unwrap()], None);
    assert!(!success);
    assert_eq!(v["error"]["kind"], "io");

    let (success, v) = run(&["sweep", "--parameter", "n-landmarks", "--values", "5", "--out", tmp.path().to_str().unwrap()], None);
    assert!(!success);
    assert_eq!(v["error"]["kind"], "invalid_parameter");

    let (success, v) = run(&["frobnicate"], None);
    assert!(!success);
    assert_eq!(v["error"]["kind"], "usage");
}
