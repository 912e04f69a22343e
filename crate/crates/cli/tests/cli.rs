use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use randql::envs::chain;
use randql::oracle::backward_induction;

fn randql(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randql"))
        .args(args)
        .env_remove("RANDQL_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
episodes = 30
seeds = [0, 1]
regret_mode = "exact"

[env]
name = "chain"
length = 4
horizon = 5

[[algorithms]]
name = "randql"

[[algorithms]]
name = "optql"
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn oracle_matches_library() {
    let o = randql(&["oracle", "--env", "chain", "--L", "5", "--H", "10", "--wrong", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let printed: f64 = stdout(&o).trim().parse().unwrap();
    let spec = chain(5, 10, 0.1, 0.05, 1.0).unwrap();
    assert_eq!(printed, backward_induction(&spec).v(0, 0));
}

#[test]
fn oracle_missing_flag_is_a_validation_error() {
    let o = randql(&["oracle", "--env", "chain", "--H", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--L"));
}

#[test]
fn missing_config_exits_one() {
    let o = randql(&["run", "--config", "missing.tomlish"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.tomlish"));
    assert!(stderr(&o).contains("No such file"));
}

#[test]
fn unknown_flag_prints_usage() {
    let o = randql(&["run", "--config", "x.toml", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn help_lists_every_algorithm() {
    let o = randql(&["run", "--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in [
        "randql",
        "sampled_randql",
        "staged_randql",
        "optql",
        "ucbvi",
        "greedy_ucbvi",
        "psrl",
        "rlsvi",
        "net_staged_randql",
        "adaptive_randql",
        "adaptive_staged_randql",
        "adaptive_ql",
    ] {
        assert!(text.contains(name), "{name} missing from help");
    }
}

#[test]
fn selftest_weights_passes() {
    let o = randql(&["selftest", "weights", "--samples", "200000"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn selftest_oracle_passes() {
    let o = randql(&["selftest", "oracle"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 20);
}

#[test]
fn run_is_deterministic_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let run = |extra: &[&str]| {
        let mut args = vec!["run", "--config", cfg];
        args.extend_from_slice(extra);
        let o = randql(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    let (a, b, c, d) = (out("a"), out("b"), out("c"), out("d"));
    run(&["--output", &a, "--workers", "1"]);
    run(&["--output", &b, "--workers", "3"]);
    run(&["--output", &c, "--seed", "9"]);
    run(&["--output", &d, "--seeds", "4..7", "--episodes", "10"]);
    let read = |d: &str, f: &str| std::fs::read(Path::new(d).join(f)).unwrap();
    assert_eq!(read(&a, "results.csv"), read(&b, "results.csv"));
    assert_eq!(read(&a, "aggregate.csv"), read(&b, "aggregate.csv"));
    assert_ne!(read(&a, "results.csv"), read(&c, "results.csv"));
    let text = String::from_utf8(read(&d, "results.csv")).unwrap();
    // 2 algorithms x 3 seeds x 10 episodes plus the header
    assert_eq!(text.lines().count(), 61);
    assert!(text
        .lines()
        .skip(1)
        .all(|l| ["4", "5", "6"].contains(&l.split(',').nth(1).unwrap())));
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let target = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_randql"))
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("RANDQL_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("results.csv").exists());
    assert!(target.join("manifest.json").exists());
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("\"optql\"", "\"adaptive_ql\""));
    let o = randql(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("adaptive_ql"));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = randql(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn sweep_labels_grid_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("sweep");
    let o = randql(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "n0=0.25,1",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let agg = std::fs::read_to_string(out.join("aggregate.csv")).unwrap();
    for label in ["randql/n0=0.25", "randql/n0=1", "optql/n0=0.25", "optql/n0=1"] {
        assert!(agg.contains(&format!("\n{label},")), "{label}");
    }
}
