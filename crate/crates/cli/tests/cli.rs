//! End-to-end exercises of the `zggp` binary: exit codes, artifacts and
//! manifests.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn zggp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zggp"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn unknown_flags_and_games_exit_one_with_usage_text() {
    let dir = TempDir::new().unwrap();
    let out = zggp(&["generate", "--no-such-flag"], dir.path());
    assert_exit(&out, 1);
    assert!(!out.stderr.is_empty());

    let out = zggp(
        &[
            "generate", "--game", "chess", "--plays", "1", "--out", "x.bin",
        ],
        dir.path(),
    );
    assert_exit(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("chess"), "{stderr}");

    let out = zggp(&["frobnicate"], dir.path());
    assert_exit(&out, 1);

    let out = zggp(&["eval", "--game", "tictactoe", "--games", "7"], dir.path());
    assert_exit(&out, 1);
}

#[test]
fn missing_input_files_exit_two() {
    let dir = TempDir::new().unwrap();
    let out = zggp(
        &[
            "train",
            "--dataset",
            "absent.bin",
            "--arch",
            "attention",
            "--out",
            "m.bin",
        ],
        dir.path(),
    );
    assert_exit(&out, 2);
}

#[test]
fn gradcheck_passes_and_prints_the_error() {
    let dir = TempDir::new().unwrap();
    let out = zggp(
        &[
            "gradcheck",
            "--arch",
            "conv",
            "--game",
            "connect4",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max relative error"), "{stdout}");

    let out = zggp(
        &[
            "gradcheck",
            "--arch",
            "attention",
            "--game",
            "tictactoe",
            "--pos",
            "learned",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
}

#[test]
fn full_pipeline_writes_artifacts_and_manifests() {
    let dir = TempDir::new().unwrap();
    let out = zggp(
        &[
            "generate",
            "--game",
            "tictactoe",
            "--plays",
            "16",
            "--iterations",
            "60",
            "--out",
            "data.bin",
            "--workers",
            "2",
            "--seed",
            "7",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    assert!(dir.path().join("data.bin").exists());
    let manifest = fs::read_to_string(dir.path().join("data.bin.manifest")).unwrap();
    for key in [
        "subcommand = generate",
        "game = tictactoe",
        "plays = 16",
        "seed = 7",
    ] {
        assert!(
            manifest.contains(key),
            "manifest missing `{key}`:\n{manifest}"
        );
    }

    let out = zggp(
        &[
            "train",
            "--dataset",
            "data.bin",
            "--arch",
            "attention",
            "--preset",
            "small",
            "--epochs",
            "2",
            "--out",
            "model.bin",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    assert!(dir.path().join("model.bin").exists());
    let manifest = fs::read_to_string(dir.path().join("model.bin.manifest")).unwrap();
    assert!(manifest.contains("arch = attention"), "{manifest}");

    let out = zggp(
        &[
            "eval",
            "--game",
            "tictactoe",
            "--model",
            "model.bin",
            "--iterations",
            "40",
            "--games",
            "4",
            "--seed",
            "11",
            "--out",
            "report",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let table = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(table.contains('%'), "{table}");
    let jsonl = fs::read_to_string(dir.path().join("report.jsonl")).unwrap();
    let record: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    for key in [
        "label", "game", "wins", "draws", "losses", "n", "p", "ci95", "agent_a", "agent_b",
    ] {
        assert!(
            record.get(key).is_some(),
            "record missing `{key}`: {record}"
        );
    }
    assert_eq!(record["n"], 4);
    assert!(dir.path().join("report.txt.manifest").exists());

    let out = zggp(
        &[
            "play",
            "--game",
            "tictactoe",
            "--agent-a",
            "value:model.bin:40",
            "--agent-b",
            "uct:40",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let trace = String::from_utf8_lossy(&out.stdout);
    assert!(trace.contains("ply"), "{trace}");
    assert!(trace.contains("result:"), "{trace}");
}

#[test]
fn permuted_condition_runs_from_the_cli() {
    let dir = TempDir::new().unwrap();
    let out = zggp(
        &[
            "generate",
            "--game",
            "tictactoe",
            "--plays",
            "8",
            "--iterations",
            "50",
            "--out",
            "perm.bin",
            "--seed",
            "3",
            "--permute-seed",
            "12",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let manifest = fs::read_to_string(dir.path().join("perm.bin.manifest")).unwrap();
    assert!(manifest.contains("permute_seed = 12"), "{manifest}");

    let out = zggp(
        &[
            "train",
            "--dataset",
            "perm.bin",
            "--arch",
            "conv",
            "--epochs",
            "1",
            "--out",
            "perm_model.bin",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);

    let out = zggp(
        &[
            "eval",
            "--game",
            "tictactoe",
            "--model",
            "perm_model.bin",
            "--iterations",
            "30",
            "--games",
            "2",
            "--permute-seed",
            "12",
            "--out",
            "perm_report",
        ],
        dir.path(),
    );
    assert_exit(&out, 0);
    let jsonl = fs::read_to_string(dir.path().join("perm_report.jsonl")).unwrap();
    assert!(jsonl.contains("\"n\":2"), "{jsonl}");
}

#[test]
fn generate_is_reproducible_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    for (out_name, workers) in [("a.bin", "1"), ("b.bin", "4")] {
        let out = zggp(
            &[
                "generate",
                "--game",
                "tictactoe",
                "--plays",
                "10",
                "--iterations",
                "40",
                "--out",
                out_name,
                "--workers",
                workers,
                "--seed",
                "21",
            ],
            dir.path(),
        );
        assert_exit(&out, 0);
    }
    assert_eq!(
        fs::read(dir.path().join("a.bin")).unwrap(),
        fs::read(dir.path().join("b.bin")).unwrap()
    );
}
