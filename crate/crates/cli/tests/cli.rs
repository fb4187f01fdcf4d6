use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dos-reroute"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SCENARIO: &str = r#"{
  "name": "small",
  "plant": {"generate": {"nodes": 3, "seed": 4}},
  "sparsity": {"beta_schedule": {"relative_log": {"points": 6, "low": 1e-4, "high": 10.0}}},
  "attack": {"top_count": 2}
}"#;

const NINE_BLOCK_TABLE: &str = r#"[
  {"i":0,"j":0,"q":1,"s":2,"values":[3.0,1.0]},
  {"i":3,"j":0,"q":2,"s":2,"values":[2.0,4.0]},
  {"i":1,"j":1,"q":3,"s":2,"values":[1.0,5.0]},
  {"i":2,"j":1,"q":4,"s":2,"values":[5.0,1.0]},
  {"i":3,"j":1,"q":5,"s":2,"values":[6.0,8.0]},
  {"i":0,"j":2,"q":6,"s":2,"values":[7.0,9.0]},
  {"i":0,"j":3,"q":7,"s":2,"values":[3.0,2.0]},
  {"i":1,"j":3,"q":8,"s":2,"values":[1.0,2.0]},
  {"i":3,"j":3,"q":9,"s":2,"values":[5.0,3.0]}
]"#;

#[test]
fn offline_then_online_steps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("s.json"), SCENARIO).unwrap();

    assert!(run(d, &["gen", "--nodes", "3", "--seed", "4", "--out", "plant.json"]).status.success());
    let sweep = run(d, &["sweep", "--plant", "plant.json", "--scenario", "s.json", "--format", "json", "--out", "sweep.json"]);
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));
    let csv = run(d, &["sweep", "--plant", "plant.json", "--scenario", "s.json"]);
    assert!(stdout(&csv).starts_with("beta,nnz_blocks,J_polished\n"));
    assert_eq!(stdout(&csv).lines().count(), 7);

    assert!(run(d, &["rank", "--plant", "plant.json", "--sweep", "sweep.json", "--out", "table.json"]).status.success());
    let table: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("table.json")).unwrap()).unwrap();
    let r1 = table.as_array().unwrap().len();
    assert!(r1 > 0);

    fs::write(d.join("attack.json"), format!("{{\"attacked_block\": {r1}}}")).unwrap();
    let o = run(d, &["reroute", "--table", "table.json", "--attack", "attack.json", "--out", "outcome.json"]);
    assert!(o.status.success());
    let grid = run(d, &["render", "--outcome", "outcome.json", "--plant", "plant.json"]);
    assert!(grid.status.success());
    assert_eq!(stdout(&grid).lines().count(), 3);
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("s.json"), SCENARIO).unwrap();
    let a = run(d, &["run", "--scenario", "s.json", "--out", "a"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(d, &["run", "--scenario", "s.json", "--out", "b"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).starts_with("scenario,j_before,j_attack,j_reroute,n_attacked,n_sacrificed,n_dropped,feasible\nsmall,"));
    for f in ["report.csv", "pattern_before.txt", "pattern_attack.svg", "pattern_reroute.txt", "outcome.json", "table.json"] {
        let x = fs::read(d.join("a").join(f)).unwrap();
        let y = fs::read(d.join("b").join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
    let attacked = fs::read_to_string(d.join("a/pattern_attack.txt")).unwrap();
    assert_eq!(attacked.matches('A').count(), 2);
}

#[test]
fn batch_seeds_run_together() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("s.json"), SCENARIO).unwrap();
    let o = run(d, &["run", "--scenario", "s.json", "--seed", "1", "--seed", "2", "--out", "batch"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("small-seed1,") && text.contains("small-seed2,"));
    assert!(d.join("batch/small-seed2/report.json").exists());
}

#[test]
fn nine_block_reroute_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("t.json"), NINE_BLOCK_TABLE).unwrap();
    fs::write(d.join("a.json"), r#"{"attacked_priorities": [3, 7, 8]}"#).unwrap();
    let o = run(d, &["reroute", "--table", "t.json", "--attack", "a.json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["sacrificed"], serde_json::json!([1, 2]));
    assert_eq!(v["rerouted"], serde_json::json!([7, 8]));
    assert_eq!(v["dropped"], serde_json::json!([3]));

    fs::write(d.join("big.json"), r#"{"attacked_priorities": [1, 2, 3, 4, 5]}"#).unwrap();
    assert_eq!(run(d, &["reroute", "--table", "t.json", "--attack", "big.json"]).status.code(), Some(2));
    assert_eq!(run(d, &["reroute", "--table", "missing.json", "--attack", "a.json"]).status.code(), Some(4));
    assert_eq!(run(d, &["render", "--pattern", "t.json", "--format", "png"]).status.code(), Some(4));
    fs::write(d.join("bad.json"), r#"{"attacked_block": 10}"#).unwrap();
    assert_eq!(run(d, &["reroute", "--table", "t.json", "--attack", "bad.json"]).status.code(), Some(4));
}

#[test]
fn synth_reports_unstabilizable_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // unstable first node, the only channel to it removed
    fs::write(
        d.join("plant.json"),
        r#"{"A": [[1.0, 0.0], [0.0, -1.0]], "B": [[1.0, 0.0], [0.0, 1.0]], "W": [[1.0, 0.0], [0.0, 1.0]],
            "Q": [[1.0, 0.0], [0.0, 1.0]], "R": [[1.0, 0.0], [0.0, 1.0]], "rowBlockSizes": [1, 1], "colBlockSizes": [1, 1]}"#,
    )
    .unwrap();
    fs::write(d.join("bad.txt"), "··\n·■\n").unwrap();
    fs::write(d.join("good.txt"), "■·\n·■\n").unwrap();
    assert_eq!(run(d, &["synth", "--plant", "plant.json", "--pattern", "bad.txt"]).status.code(), Some(3));
    let ok = run(d, &["synth", "--plant", "plant.json", "--pattern", "good.txt"]);
    assert!(ok.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(v["K"][0][1], 0.0);
    assert!(v["J"].as_f64().unwrap() > 0.0);
}
