use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use permrl::io;
use permrl::{GameBuilder, MemorylessStrategy, Player};

fn permrl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permrl")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn pipeline_reports_restricted_sizes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["pipeline", "--scenario", "example1", "--n", "4", "--gamma", "0.9", "--seed", "7"];
    ok(&permrl(&[&args[..], &["--out-dir", "a"]].concat(), dir.path()));
    ok(&permrl(&[&args[..], &["--out-dir", "b"]].concat(), dir.path()));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["ghat_states"], 432);
    assert_eq!(summary["ghat_system_states"], 240);
    for file in ["summary.json", "q.csv", "v.csv", "convergence.csv", "ghat.json", "greedy.json", "state_map.json"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    let ghat = io::game_from_json(&fs::read_to_string(dir.path().join("a/ghat.json")).unwrap()).unwrap();
    assert_eq!(ghat.game.num_states(), 432);
}

#[test]
fn example3_pipeline_value() {
    let dir = tempfile::tempdir().unwrap();
    ok(&permrl(
        &["pipeline", "--scenario", "example3", "--n", "3", "--counter-max", "20", "--out-dir", "o"],
        dir.path(),
    ));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/summary.json")).unwrap()).unwrap();
    let v = summary["learn"]["max_v"].as_f64().unwrap();
    assert!((9.7..10.0).contains(&v), "{v}");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"scenario":"example1","n":2,"learn":{"seed":3,"max_iterations":50000},"seeds":[1,2],"out_dir":"runs"}"#,
    )
    .unwrap();
    ok(&permrl(&["pipeline", "--config", "cfg.json", "--n", "3", "--jobs", "2"], dir.path()));
    for seed in [1, 2] {
        let text = fs::read_to_string(dir.path().join(format!("runs/seed_{seed}/summary.json"))).unwrap();
        let summary: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(summary["ghat_states"], 120);
        assert_eq!(summary["seed"], seed);
    }
}

#[test]
fn empty_game_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.json"), "").unwrap();
    fs::write(dir.path().join("s.txt"), "phi1: true\n").unwrap();
    let out = permrl(&["synth", "--game", "g.json", "--spec", "s.txt", "--out", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty game file"));
}

#[test]
fn missing_file_is_io_error_and_unrealizable_is_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = permrl(&["synth", "--game", "nope.json", "--spec", "s.txt", "--out", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    ok(&permrl(&["build", "--n", "2", "--out", "g.json"], dir.path()));
    fs::write(dir.path().join("s.txt"), "phi0: false\n").unwrap();
    let out = permrl(&["synth", "--game", "g.json", "--spec", "s.txt", "--out", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn staged_commands_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| ok(&permrl(args, dir.path()));
    run(&["build", "--n", "2", "--out", "g.json", "--spec-out", "spec.txt"]);
    run(&["synth", "--game", "g.json", "--spec", "spec.txt", "--out", "mu.json"]);
    let report = run(&["verify", "--game", "g.json", "--spec", "spec.txt", "--strategy", "mu.json"]);
    assert!(report.contains("winning: yes") && report.contains("maximal: yes"), "{report}");

    // On a two-state game where s0 may loop (a0) or leave (a1), dropping a1
    // keeps the strategy winning but not maximal; dropping both is a dead end.
    let mut b = GameBuilder::new();
    let b1 = b.add_prop("b1");
    let b2 = b.add_prop("b2");
    let acts: Vec<_> = (0..3).map(|i| b.add_action(format!("a{i}"), Player::System)).collect();
    let s0 = b.add_state(Player::System, [b1]);
    let s1 = b.add_state(Player::System, [b2]);
    b.add_initial(s0);
    b.add_transition(s0, acts[0], s0);
    b.add_transition(s0, acts[1], s1);
    b.add_transition(s1, acts[2], s1);
    let g0 = b.build().unwrap();
    fs::write(dir.path().join("g0.json"), io::game_to_json(&g0)).unwrap();
    fs::write(dir.path().join("true.txt"), "phi1: true\n").unwrap();
    let mut mu = MemorylessStrategy::allow_all(&g0);
    mu.set(s0, [acts[0]]);
    fs::write(dir.path().join("shrunk.json"), io::strategy_to_json(&mu)).unwrap();
    let report = run(&[
        "verify",
        "--game",
        "g0.json",
        "--spec",
        "true.txt",
        "--strategy",
        "shrunk.json",
        "--witness-out",
        "w.json",
    ]);
    assert!(report.contains("winning: yes") && report.contains("maximal: no, witness strategy emitted"), "{report}");
    let witness = io::strategy_from_json(&fs::read_to_string(dir.path().join("w.json")).unwrap(), 2).unwrap();
    assert_eq!(witness.choice(s0), &[acts[1]]);

    mu.set(s0, []);
    fs::write(dir.path().join("broken.json"), io::strategy_to_json(&mu)).unwrap();
    let report = run(&["verify", "--game", "g0.json", "--spec", "true.txt", "--strategy", "broken.json"]);
    assert!(report.contains("winning: no (dead end"), "{report}");

    run(&["restrict", "--game", "g.json", "--strategy", "mu.json", "--out", "ghat.json", "--map-out", "map.json"]);
    run(&["learn", "--game", "ghat.json", "--diagonal", "2", "--out-dir", "learned", "--seed", "4"]);
    let v = fs::read_to_string(dir.path().join("learned/v.csv")).unwrap();
    assert!(v.starts_with("state,v\n"));
    let eval = run(&["eval", "--game", "ghat.json", "--strategy", "learned/greedy.json", "--diagonal", "2"]);
    assert!(eval.starts_with("state,lower,upper\n"));
    let log = fs::read_to_string(dir.path().join("learned/convergence.csv")).unwrap();
    assert!(log.starts_with("iteration,max_delta_v\n"));
}
