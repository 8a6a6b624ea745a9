//! End-to-end runs of the `causal-gate` binary: exit codes, the one-line
//! stderr error format, the seed environment fallback, and smoke coverage
//! of every subcommand against generated fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_causal-gate"));
    // Keep tests hermetic even if the outer environment sets the seed.
    cmd.env_remove("CAUSAL_GATE_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_line(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).trim().to_string()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

/// One generated dataset shared by the tests that need real files.
struct Fixture {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    data: PathBuf,
}

impl Fixture {
    fn generate() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        let out = run(&[
            "synth",
            "gen",
            "--n",
            "4",
            "--rows",
            "600",
            "--seed",
            "5",
            "--out",
            data.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "synth gen failed: {}", stderr_line(&out));
        Fixture { dir, data }
    }

    fn arg(&self, file: &str) -> String {
        self.data.join(file).to_str().unwrap().to_string()
    }

    fn target(&self) -> String {
        // synth gen names nodes x0..x3; x1 always exists at n = 4.
        "x1".to_string()
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"][..], &["select", "--help"][..]] {
        let out = run(args);
        assert_eq!(code(&out), 0, "{args:?}");
        assert!(!stdout(&out).is_empty());
    }
}

#[test]
fn usage_errors_exit_one_with_single_line() {
    let out = run(&["select", "--csv", "x.csv", "--schema", "s.json"]);
    assert_eq!(code(&out), 1);
    let line = stderr_line(&out);
    assert!(line.starts_with("error[usage]: "), "{line}");
    assert_eq!(line.lines().count(), 1);

    let out = run(&["experiment", "nonsense", "--out", "/tmp/never"]);
    assert_eq!(code(&out), 1);
    assert!(stderr_line(&out).starts_with("error[usage]: "));

    let out = run(&["experiment"]);
    assert_eq!(code(&out), 1);
    assert!(stderr_line(&out).contains("preset"));
}

#[test]
fn data_errors_exit_two_with_kind() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    let schema = dir.path().join("schema.json");
    std::fs::write(&csv, "a,b\n1.0,2.0\n3.0,not_a_number\n").unwrap();
    std::fs::write(
        &schema,
        r#"{"columns":[{"name":"a","kind":"continuous"},{"name":"b","kind":"continuous"}]}"#,
    )
    .unwrap();
    let dag = dir.path().join("dag.json");
    std::fs::write(
        &dag,
        r#"{"dag":{"nodes":[{"name":"a","kind":"continuous"},{"name":"b","kind":"continuous"}],"edges":[["a","b"]]}}"#,
    )
    .unwrap();

    // Malformed CSV: exit 2 with the row and column in the message.
    let out = run(&[
        "score",
        "--csv",
        csv.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--dag",
        dag.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let line = stderr_line(&out);
    assert!(line.starts_with("error[data]: "), "{line}");
    assert!(line.contains("row 2") && line.contains('"') && line.contains('b'), "{line}");
    assert_eq!(line.lines().count(), 1);

    // Malformed dag file: runtime error, exit 2, graph kind.
    let good_csv = dir.path().join("good.csv");
    std::fs::write(&good_csv, "a,b\n1.0,2.0\n3.0,4.0\n").unwrap();
    let bad_dag = dir.path().join("broken.json");
    std::fs::write(&bad_dag, "{ not json").unwrap();
    let out = run(&[
        "score",
        "--csv",
        good_csv.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--dag",
        bad_dag.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let line = stderr_line(&out);
    assert!(line.starts_with("error[graph]: "), "{line}");
    assert_eq!(line.lines().count(), 1);

    // A missing input file is a clean single-line runtime error.
    let out = run(&[
        "score",
        "--csv",
        dir.path().join("absent.csv").to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--dag",
        dag.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr_line(&out).starts_with("error["));
}

#[test]
fn seed_env_fallback_and_invalid_value() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");

    let gen = |out_dir: &Path, env: Option<&str>, flag: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["synth", "gen", "--n", "3", "--rows", "50"]);
        if let Some(seed) = flag {
            cmd.args(["--seed", seed]);
        }
        cmd.args(["--out", out_dir.to_str().unwrap()]);
        if let Some(value) = env {
            cmd.env("CAUSAL_GATE_SEED", value);
        }
        cmd.output().unwrap()
    };

    // Env var stands in for --seed; the flag wins when both are present.
    assert_eq!(code(&gen(&a, Some("9"), None)), 0);
    assert_eq!(code(&gen(&b, None, Some("9"))), 0);
    assert_eq!(code(&gen(&c, Some("1234"), Some("9"))), 0);
    let data_a = std::fs::read(a.join("data.csv")).unwrap();
    let data_b = std::fs::read(b.join("data.csv")).unwrap();
    let data_c = std::fs::read(c.join("data.csv")).unwrap();
    assert_eq!(data_a, data_b);
    assert_eq!(data_a, data_c);

    // An unparseable env seed is a usage error.
    let out = gen(&dir.path().join("d"), Some("not-a-seed"), None);
    assert_eq!(code(&out), 1);
    let line = stderr_line(&out);
    assert!(line.starts_with("error[usage]: "), "{line}");
    assert!(line.contains("CAUSAL_GATE_SEED"));
}

#[test]
fn every_subcommand_accepts_seed() {
    // Parse-level check: --seed must not be rejected anywhere. Commands
    // with missing inputs still fail, but not with an "unexpected
    // argument" parse error.
    for args in [
        &["synth", "gen", "--seed", "1", "--out", "/tmp/x"][..],
        &["train", "--csv", "m.csv", "--schema", "s.json", "--target", "t", "--seed", "1", "--out", "/tmp/x"][..],
        &["score", "--csv", "m.csv", "--schema", "s.json", "--dag", "d.json", "--seed", "1"][..],
        &["select", "--csv", "m.csv", "--schema", "s.json", "--dag", "d.json", "--seed", "1"][..],
        &["rank", "--csv", "m.csv", "--schema", "s.json", "--dag", "d.json", "--seed", "1"][..],
        &["experiment", "robustness", "--seed", "1", "--out", "/tmp/x", "--dags", "0"][..],
        &["report", "--run", "/tmp/definitely-missing", "--seed", "1"][..],
    ] {
        let out = run(args);
        let line = stderr_line(&out);
        assert!(
            !line.contains("unexpected argument '--seed'"),
            "{args:?} rejected --seed: {line}"
        );
    }
}

#[test]
fn train_select_rank_score_pipeline() {
    let fx = Fixture::generate();
    let dir = tempfile::tempdir().unwrap();
    let pop = dir.path().join("pop");

    let out = run(&[
        "train",
        "--csv",
        &fx.arg("data.csv"),
        "--schema",
        &fx.arg("schema.json"),
        "--target",
        &fx.target(),
        "--models",
        "3",
        "--epochs",
        "2",
        "--seed",
        "5",
        "--out",
        pop.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    assert!(pop.join("manifest.json").is_file());
    assert!(pop.join("models/model_0000.json").is_file());

    let select_json = dir.path().join("selection.json");
    let out = run(&[
        "select",
        "--csv",
        &fx.arg("data.csv"),
        "--schema",
        &fx.arg("schema.json"),
        "--dag",
        &fx.arg("dag.json"),
        "--models",
        pop.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        select_json.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    assert!(stdout(&out).contains("selected model"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&select_json).unwrap()).unwrap();
    assert_eq!(report["n_models"], 3);

    let out = run(&[
        "rank",
        "--csv",
        &fx.arg("data.csv"),
        "--schema",
        &fx.arg("schema.json"),
        "--dag",
        &fx.arg("dag.json"),
        "--models",
        pop.to_str().unwrap(),
        "--kfolds",
        "2",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let text = stdout(&out);
    assert!(text.contains("rank,model_id,f,h,r"));
    // Header line plus one row per model.
    assert_eq!(text.lines().filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit())).count(), 3);

    let out = run(&[
        "score",
        "--csv",
        &fx.arg("data.csv"),
        "--schema",
        &fx.arg("schema.json"),
        "--dag",
        &fx.arg("dag.json"),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(value["log_likelihood"].is_number());
}

#[test]
fn select_with_external_predictions_and_lambda() {
    let fx = Fixture::generate();
    let dir = tempfile::tempdir().unwrap();

    // Row count must match data.csv (600 rows).
    let preds = dir.path().join("preds.csv");
    let mut text = String::from("model_id,row_index,prediction\n");
    for row in 0..600 {
        text.push_str(&format!("0,{row},{}\n", row as f64 / 600.0));
        text.push_str(&format!("3,{row},{}\n", 1.0 - row as f64 / 600.0));
    }
    std::fs::write(&preds, text).unwrap();

    let out = run(&[
        "select",
        "--csv",
        &fx.arg("data.csv"),
        "--schema",
        &fx.arg("schema.json"),
        "--dag",
        &fx.arg("dag.json"),
        "--preds",
        preds.to_str().unwrap(),
        "--target",
        &fx.target(),
        "--lambda",
        "0.5",
        "--gamma",
        "2",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    assert!(stdout(&out).contains("out of 2"));

    // --preds without --target is a usage error.
    let out = run(&[
        "select",
        "--csv",
        &fx.arg("data.csv"),
        "--schema",
        &fx.arg("schema.json"),
        "--dag",
        &fx.arg("dag.json"),
        "--preds",
        preds.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr_line(&out).starts_with("error[usage]: "));
}

#[test]
fn experiment_and_report_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = run(&[
        "experiment",
        "robustness",
        "--n",
        "3",
        "--dags",
        "1",
        "--models",
        "3",
        "--rows",
        "400",
        "--test-rows",
        "150",
        "--epochs",
        "1",
        "--seed",
        "7",
        "--workers",
        "1",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    for file in [
        "config_echo.json",
        "report.json",
        "report.csv",
        "scatter_sel_vs_test.csv",
    ] {
        assert!(run_dir.join(file).is_file(), "{file} missing");
    }

    let out = run(&["report", "--run", run_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    assert!(stdout(&out).contains("combined-score top decile"));

    // Replay from the echoed config reproduces the report byte for byte.
    let replay_dir = dir.path().join("replay");
    let out = run(&[
        "experiment",
        "--config",
        run_dir.join("config_echo.json").to_str().unwrap(),
        "--out",
        replay_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr_line(&out));
    let original = std::fs::read(run_dir.join("report.json")).unwrap();
    let replayed = std::fs::read(replay_dir.join("report.json")).unwrap();
    assert_eq!(original, replayed);
}
