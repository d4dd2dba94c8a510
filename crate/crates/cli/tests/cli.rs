//! Command-level behavior: exit codes, warnings, config resolution, and
//! the golden mask dump.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_factsum"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_mini_dataset(dir: &Path) -> PathBuf {
    let path = dir.join("mini.jsonl");
    let line = |id: &str, words: &[&str], summary: bool| {
        let tokens: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        let edges: Vec<(usize, usize, &str)> = (1..=tokens.len())
            .map(|i| if i == 1 { (0, 1, "root") } else { (1, i, "dep") })
            .collect();
        let sent = serde_json::json!({"tokens": tokens, "edges": edges});
        let summary_val = if summary {
            serde_json::json!([sent])
        } else {
            serde_json::json!([])
        };
        serde_json::json!({"id": id, "body": [sent], "summary": summary_val}).to_string()
    };
    let contents = format!(
        "{}\n{}\n",
        line("a", &["the", "cat", "sat"], true),
        line("b", &["dogs", "bark", "loud"], false),
    );
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn mask_dump_matches_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixtures().join("mask15.jsonl");
    let config = fixtures().join("mask15_config.json");
    let out = run_in(
        dir.path(),
        &[
            "mask",
            "--input",
            input.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--output",
            "mask.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let got = std::fs::read_to_string(dir.path().join("mask.txt")).unwrap();
    let golden = std::fs::read_to_string(fixtures().join("mask15_golden.txt")).unwrap();
    assert_eq!(got, golden);
}

#[test]
fn record_errors_are_isolated_and_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mixed.jsonl");
    std::fs::write(
        &data,
        concat!(
            r#"{"id":"good","body":[{"tokens":["x","y"],"edges":[[0,1,"root"],[1,2,"dep"]]}],"summary":[]}"#,
            "\n",
            "this is not json\n",
            r#"{"id":"cycle","body":[{"tokens":["x","y"],"edges":[[2,1,"dep"],[1,2,"dep"]]}],"summary":[]}"#,
            "\n",
        ),
    )
    .unwrap();
    let out = run_in(
        dir.path(),
        &["segment", "--input", data.to_str().unwrap(), "--output", "facts.jsonl"],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "names the bad line: {stderr}");
    assert!(stderr.contains("cycle"), "names the bad record: {stderr}");
    // the good record still made it through
    let facts = std::fs::read_to_string(dir.path().join("facts.jsonl")).unwrap();
    assert!(facts.contains("\"good\""));
}

#[test]
fn evaluate_scores_identity_summaries_at_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_mini_dataset(dir.path());
    // candidate == reference for record "a"
    let summary = serde_json::json!({
        "id": "a",
        "selected": [{"sentence": 0, "fact": 0, "tokens": ["the", "cat", "sat"], "line": "(0,0) the cat sat"}]
    });
    std::fs::write(dir.path().join("summaries.jsonl"), format!("{summary}\n")).unwrap();
    let out = run_in(
        dir.path(),
        &[
            "evaluate",
            "--input",
            data.to_str().unwrap(),
            "--summaries",
            "summaries.jsonl",
            "--output",
            "rouge.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("rouge.csv")).unwrap();
    let mean = csv.lines().last().unwrap();
    assert_eq!(mean, "MEAN,1,1,1,1,1,1,1,1,1");
}

#[test]
fn oracle_skips_records_without_summaries_and_deny_warnings_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_mini_dataset(dir.path());
    let seg = run_in(
        dir.path(),
        &["segment", "--input", data.to_str().unwrap(), "--output", "facts.jsonl"],
    );
    assert_eq!(seg.status.code(), Some(0));

    let ok = run_in(
        dir.path(),
        &[
            "oracle",
            "--input",
            data.to_str().unwrap(),
            "--facts",
            "facts.jsonl",
            "--mode",
            "fact",
            "--output",
            "labels.jsonl",
        ],
    );
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stderr).contains("no gold summary"));
    // only record "a" got labels
    let labels = std::fs::read_to_string(dir.path().join("labels.jsonl")).unwrap();
    assert_eq!(labels.lines().count(), 1);

    let denied = run_in(
        dir.path(),
        &[
            "oracle",
            "--input",
            data.to_str().unwrap(),
            "--facts",
            "facts.jsonl",
            "--mode",
            "fact",
            "--output",
            "labels2.jsonl",
            "--deny-warnings",
        ],
    );
    assert_eq!(denied.status.code(), Some(2));
}

#[test]
fn lead_baseline_summarizes_without_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_mini_dataset(dir.path());
    let out = run_in(
        dir.path(),
        &[
            "summarize",
            "--input",
            data.to_str().unwrap(),
            "--lead",
            "3",
            "--output",
            "lead.jsonl",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lead = std::fs::read_to_string(dir.path().join("lead.jsonl")).unwrap();
    assert_eq!(lead.lines().count(), 2);
    assert!(lead.contains("(0,-) the cat sat"));
}

#[test]
fn config_comes_from_the_environment_when_flag_is_absent() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_mini_dataset(dir.path());
    // a split-everywhere config that turns each token into a boundary
    let config = dir.path().join("agg.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "segmenter": {
                "split_labels": ["dep"],
                "min_unit_length": 1
            }
        })
        .to_string(),
    )
    .unwrap();

    let via_env = bin()
        .args(["segment", "--input", data.to_str().unwrap(), "--output", "env.jsonl"])
        .env("FACTSUM_CONFIG", &config)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(via_env.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&via_env.stdout);
    assert!(stdout.contains("6 facts"), "env config applied: {stdout}");

    // the flag overrides the environment back to defaults-ish behavior
    let default_cfg = dir.path().join("default.json");
    std::fs::write(&default_cfg, "{}").unwrap();
    let via_flag = bin()
        .args([
            "segment",
            "--input",
            data.to_str().unwrap(),
            "--output",
            "flag.jsonl",
            "--config",
            default_cfg.to_str().unwrap(),
        ])
        .env("FACTSUM_CONFIG", &config)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(via_flag.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&via_flag.stdout);
    assert!(stdout.contains("2 facts"), "flag config wins: {stdout}");
}

#[test]
fn every_run_appends_one_manifest_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_mini_dataset(dir.path());
    for _ in 0..2 {
        let out = run_in(
            dir.path(),
            &["stats", "--input", data.to_str().unwrap()],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let manifest = std::fs::read_to_string(dir.path().join("factsum_runs.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 2);
    for line in manifest.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["command"], "stats");
        assert_eq!(v["seed"], 42);
        assert!(v["config"]["segmenter"].is_object());
        assert!(v["wall_clock_ms"].is_number());
    }
}

#[test]
fn missing_required_arguments_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["segment"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_honors_ablation_flags_and_checkpoint_cadence() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_mini_dataset(dir.path());
    let seg = run_in(
        dir.path(),
        &["segment", "--input", data.to_str().unwrap(), "--output", "facts.jsonl"],
    );
    assert_eq!(seg.status.code(), Some(0));
    let oracle = run_in(
        dir.path(),
        &[
            "oracle",
            "--input",
            data.to_str().unwrap(),
            "--facts",
            "facts.jsonl",
            "--mode",
            "fact",
            "--output",
            "labels.jsonl",
        ],
    );
    assert_eq!(oracle.status.code(), Some(0));
    let train = run_in(
        dir.path(),
        &[
            "train",
            "--input",
            data.to_str().unwrap(),
            "--labels",
            "labels.jsonl",
            "--output",
            "model.json",
            "--curve",
            "curve.csv",
            "--d-model",
            "8",
            "--n-layers",
            "1",
            "--d-ff",
            "12",
            "--steps",
            "6",
            "--batch-size",
            "2",
            "--checkpoint-every",
            "3",
            "--no-position",
            "--no-segment",
            "--classifier-mode",
            "s+f",
            "--word-scope",
            "within-fact",
            "--min-unit-length",
            "1",
        ],
    );
    assert_eq!(train.status.code(), Some(0), "{}", String::from_utf8_lossy(&train.stderr));
    // cadence checkpoints plus final model
    assert!(dir.path().join("model.json.step3").exists());
    assert!(dir.path().join("model.json.step6").exists());
    let model = std::fs::read_to_string(dir.path().join("model.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&model).unwrap();
    assert_eq!(v["config"]["use_position"], false);
    assert_eq!(v["config"]["use_segment"], false);
    assert_eq!(v["config"]["classifier_mode"], "s+f");
    assert_eq!(v["config"]["word_scope"], "within_fact");
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("step,lr,loss\n"));
    assert_eq!(curve.lines().count(), 7);

    // the trained model summarizes under its stored configuration
    let sum = run_in(
        dir.path(),
        &[
            "summarize",
            "--input",
            data.to_str().unwrap(),
            "--model",
            "model.json",
            "--output",
            "summaries.jsonl",
            "--k",
            "1",
            "--min-unit-length",
            "1",
        ],
    );
    assert_eq!(sum.status.code(), Some(0), "{}", String::from_utf8_lossy(&sum.stderr));
}

#[test]
fn stats_reports_the_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_mini_dataset(dir.path());
    let out = run_in(
        dir.path(),
        &["stats", "--input", data.to_str().unwrap(), "--output", "stats.csv"],
    );
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("granularity"));
    assert!(stdout.contains("sentence"));
    assert!(stdout.contains("fact"));
    let csv = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
    assert!(csv.starts_with("granularity,num,len\n"));
}
