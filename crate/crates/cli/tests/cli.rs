use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("semicoarse-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semicoarse"))
        .args(args)
        .env("SEMICOARSE_OUT_DIR", dir)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bad_game_values() {
    let dir = scratch("bad");
    assert_eq!(code(&run(&dir, &["gen", "badgame", "--output", "bad.json"])), 0);
    let game = dir.join("bad.json");
    let g = game.to_str().unwrap();
    let solve = |kind: &str, objective: &str, out: &str| {
        let o = run(&dir, &["solve", "--game", g, "--kind", kind, "--objective", objective, "--output", out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        json(dir.join(out))["value"].as_f64().unwrap()
    };
    assert!(solve("semicoarse-ext", "indicator:1:M", "ext.json").abs() < 1e-8);
    assert!(solve("semicoarse", "indicator:1:M", "enum.json").abs() < 1e-8);
    assert!(solve("lyapunov", "indicator:1:M", "lyap.json").abs() < 1e-8);
    assert!(solve("cce", "indicator:1:M", "cce.json") >= 0.1);
    assert!((solve("ce", "ones", "ones.json") - 1.0).abs() < 1e-9);
}

#[test]
fn weighted_needs_weights() {
    let dir = scratch("weights");
    run(&dir, &["gen", "badgame", "--output", "bad.json"]);
    let g = dir.join("bad.json");
    let o = run(&dir, &["solve", "--game", g.to_str().unwrap(), "--kind", "weighted"]);
    assert_eq!(code(&o), 1);
    let o = run(&dir, &["solve", "--game", g.to_str().unwrap(), "--kind", "weighted", "--weights", "1,2;1,2,3"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn generated_sizes() {
    let dir = scratch("gen");
    assert_eq!(code(&run(&dir, &["gen", "bertrand", "--n", "10", "--costs", "0,0", "--demand", "linear"])), 0);
    let g = json(dir.join("game.json"));
    assert_eq!(g["actions"][0]["labels"].as_array().unwrap().len(), 11);
    assert_eq!(g["utilities"][0].as_array().unwrap().len(), 11);
    assert_eq!(g["utilities"][0][0].as_array().unwrap().len(), 11);
    assert_eq!(g["fingerprint"].as_str().unwrap().len(), 64);

    run(&dir, &["gen", "firstprice", "--n", "10", "--values", "10,10", "--gauge", "square", "--output", "fp.json"]);
    let g = json(dir.join("fp.json"));
    let values: Vec<f64> = g["actions"][0]["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(values.len(), 11);
    for (k, v) in values.iter().enumerate() {
        assert!((v - (k as f64 / 10.0).powi(2)).abs() < 1e-15);
    }
}

#[test]
fn usage_errors_exit_one() {
    let dir = scratch("usage");
    assert_eq!(code(&run(&dir, &["gen", "nonsense"])), 1);
    assert_eq!(code(&run(&dir, &["gen", "bertrand", "--costs", "0,x"])), 1);
    assert_eq!(code(&run(&dir, &["solve", "--game", "/nonexistent/game.json"])), 1);
    assert_eq!(code(&run(&dir, &["experiment", "fig1", "--n", "40"])), 1);
    assert_eq!(code(&run(&dir, &["--help"])), 0);
}

#[test]
fn lp_status_exit_codes() {
    let dir = scratch("status");
    fs::write(dir.join("inf.lp"), "Maximize\n obj: x\nSubject To\n c1: x >= 2\n c2: x <= 1\nEnd\n").unwrap();
    fs::write(dir.join("unb.lp"), "Maximize\n obj: x\nSubject To\n c1: x >= 1\nEnd\n").unwrap();
    fs::write(dir.join("ok.lp"), "Maximize\n obj: x + y\nSubject To\n c1: x + 2 y <= 4\n c2: 3 x + y <= 6\nEnd\n").unwrap();
    let solve = |f: &str| code(&run(&dir, &["solve", "--lp", dir.join(f).to_str().unwrap(), "--output", "lp.json"]));
    assert_eq!(solve("inf.lp"), 2);
    assert_eq!(solve("unb.lp"), 3);
    assert_eq!(solve("ok.lp"), 0);
    assert!((json(dir.join("lp.json"))["value"].as_f64().unwrap() - 2.8).abs() < 1e-9);
}

#[test]
fn dynamics_is_deterministic() {
    let a = scratch("dyn-a");
    let b = scratch("dyn-b");
    for dir in [&a, &b] {
        run(dir, &["gen", "random", "--sizes", "3,3", "--seed", "7", "--output", "g.json"]);
        let o = run(dir, &["dynamics", "--game", "g.json", "--rounds", "300", "--init", "random", "--seed", "3"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["g.json", "trajectory.csv", "regret.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("#trajectory v1 fingerprint="));
    assert_eq!(lines.next().unwrap(), "t,player,action,probability");
    assert_eq!(lines.count(), 300 * 6);
    let r = json(a.join("regret.json"));
    for p in r["players"].as_array().unwrap() {
        assert!(p["external"].is_number() && p["max_canonical"].is_number());
        assert!(p["max_canonical"].as_f64().unwrap() >= p["external"].as_f64().unwrap() - 1e-12);
    }
}

#[test]
fn mean_based_demo() {
    let dir = scratch("meanbased");
    let o = run(&dir, &["dynamics", "--meanbased-demo", "--rounds", "40000"]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("final x(a*) = 1.0000000000000000e0"), "{stdout}");
    assert_eq!(json(dir.join("regret.json"))["final_x_star"].as_f64(), Some(1.0));
}

#[test]
fn certify_outcomes() {
    let dir = scratch("certify");
    let o = run(&dir, &["certify", "bertrand", "--n", "8", "--costs", "0,0,0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(dir.join("verification.json"));
    assert_eq!(v["passed"], Value::Bool(true));
    assert_eq!(v["epsilon_1"].as_f64(), Some(24.0));
    assert!(v["min_slack"].as_f64().unwrap() >= -1e-9);

    let o = run(&dir, &["certify", "bertrand", "--n", "4", "--costs", "0,0", "--demand", "samples:1,1,0.2,0.2,0.2"]);
    assert_eq!(code(&o), 4);
    assert_eq!(code(&run(&dir, &["certify", "firstprice", "--n", "6", "--values", "6,6,6"])), 0);
}

#[test]
fn experiment_outputs() {
    let dir = scratch("fig");
    let o = run(&dir, &["experiment", "fig1", "--n", "6,8", "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(dir.join("fig1_n8.json"));
    assert!((s["semicoarse"]["objective_value"].as_f64().unwrap() - 2.0 / 64.0).abs() < 1e-9);
    let csv = fs::read_to_string(dir.join("fig1_n6_cce.csv")).unwrap();
    assert!(csv.starts_with("#heatmap v1 fingerprint="));
    assert_eq!(csv.lines().count(), 2 + 49);
}
