//! End-to-end tests driving the `ecl` binary over a temp workspace.

use std::path::Path;
use std::process::{Command, Output};

use ecl_core::dataset::SchemaKind;
use ecl_core::fixtures;
use ecl_core::jsonl;

fn ecl() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ecl"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn ecl");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_raw_corpus(path: &Path, n: usize) {
    let records = fixtures::synthetic_raw_records(n, SchemaKind::MmluPro, 5);
    jsonl::write_jsonl(path, &records).unwrap();
}

#[test]
fn full_offline_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let raw = root.join("raw.jsonl");
    write_raw_corpus(&raw, 40);

    // standardize
    let std_path = root.join("std.jsonl");
    let out = run_ok(ecl()
        .args(["standardize", "--schema", "mmlu-pro", "--out"])
        .arg(&std_path)
        .arg("--in")
        .arg(&raw));
    assert!(stdout(&out).contains("standardized 40 instances"));

    // rollouts (adversarial, deterministic replay debater)
    let rolled = root.join("rolled.jsonl");
    run_ok(ecl()
        .args(["rollouts", "--setting", "adversarial", "--backend", "replay", "--counts", "3", "--seed", "3"])
        .arg("--in")
        .arg(&std_path)
        .arg("--out")
        .arg(&rolled));
    assert!(rolled.with_extension("manifest.json").exists());

    // split
    let split_dir = root.join("split");
    let out = run_ok(ecl()
        .args(["split", "--history", "12", "--seed", "7", "--out-dir"])
        .arg(&split_dir)
        .arg("--in")
        .arg(&rolled));
    assert!(stdout(&out).contains("history=12 train=25 test=3"));
    let manifest = std::fs::read_to_string(split_dir.join("split_manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 7"));

    // build-episodes over the test split
    let episodes = root.join("episodes.jsonl");
    let out = run_ok(ecl()
        .args([
            "build-episodes",
            "--peers",
            "4",
            "--history-length",
            "5",
            "--setting",
            "adversarial",
            "--variant",
            "ma-outcome",
            "--seed",
            "11",
        ])
        .arg("--instances")
        .arg(split_dir.join("test.jsonl"))
        .arg("--history-pool")
        .arg(split_dir.join("history.jsonl"))
        .arg("--out")
        .arg(&episodes));
    assert!(stdout(&out).contains("built 3 episodes"));

    // perturb
    let flipped = root.join("episodes_flip.jsonl");
    run_ok(ecl()
        .args(["perturb", "--mode", "flip"])
        .arg("--in")
        .arg(&episodes)
        .arg("--out")
        .arg(&flipped));

    // render --dump
    let prompts_dir = root.join("prompts");
    let out = run_ok(ecl()
        .args(["render", "--method", "ecl-e", "--stage", "1", "--dump", "--out-dir"])
        .arg(&prompts_dir)
        .arg("--episodes")
        .arg(&episodes));
    assert!(stdout(&out).contains("rendered 3 prompts"));
    assert_eq!(std::fs::read_dir(&prompts_dir).unwrap().count(), 3);

    // run against the pristine episodes (oracle replay)
    let run_dir = root.join("run_normal");
    let out = run_ok(ecl()
        .args(["run", "--method", "ecl-e", "--backend", "replay", "--jobs", "2", "--seed", "11", "--out-dir"])
        .arg(&run_dir)
        .arg("--episodes")
        .arg(&episodes));
    let line = stdout(&out);
    assert!(line.contains("accuracy=1.0000"), "{line}");
    assert!(line.contains("prr=1.0000"), "{line}");
    for name in ["results.jsonl", "calls.jsonl", "report.md", "report.csv", "report.json", "manifest.json"] {
        assert!(run_dir.join(name).exists(), "missing {name}");
    }

    // run with the flip perturbation applied at run time
    let run_flip = root.join("run_flip");
    let out = run_ok(ecl()
        .args(["run", "--method", "ecl-e", "--perturb", "flip", "--backend", "replay", "--jobs", "2", "--seed", "11", "--out-dir"])
        .arg(&run_flip)
        .arg("--episodes")
        .arg(&episodes));
    let line = stdout(&out);
    assert!(line.contains("accuracy=0.0000"), "{line}");
    assert!(line.contains("prr=1.0000"), "{line}");

    // export-rl
    let rl = root.join("rl.jsonl");
    let out = run_ok(ecl()
        .args(["export-rl", "--scheme", "ecl-e"])
        .arg("--run-dir")
        .arg(&run_dir)
        .arg("--out")
        .arg(&rl));
    assert!(stdout(&out).contains("exported 6 rl records"));

    // combined report with a baseline delta
    let combined = root.join("combined.md");
    run_ok(ecl()
        .arg("report")
        .arg("--runs")
        .arg(&run_flip)
        .arg("--baseline")
        .arg(&run_dir)
        .arg("--out")
        .arg(&combined));
    let text = std::fs::read_to_string(&combined).unwrap();
    assert!(text.contains("ECL (E)"), "{text}");
    assert!(text.contains("-1.0000"), "flip delta missing: {text}");
}

#[test]
fn natural_rollouts_via_scripted_flags() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let raw = root.join("raw.jsonl");
    write_raw_corpus(&raw, 6);
    let std_path = root.join("std.jsonl");
    run_ok(ecl()
        .args(["standardize", "--schema", "mmlu-pro"])
        .arg("--in")
        .arg(&raw)
        .arg("--out")
        .arg(&std_path));

    let rolled = root.join("natural.jsonl");
    run_ok(ecl()
        .args([
            "rollouts",
            "--setting",
            "natural",
            "--backend",
            "scripted",
            "--strong-accuracy",
            "1.0",
            "--weak-accuracy",
            "0.0",
            "--weak-sources",
            "2",
            "--counts",
            "3",
            "--seed",
            "9",
        ])
        .arg("--in")
        .arg(&std_path)
        .arg("--out")
        .arg(&rolled));
    let filled: Vec<ecl_core::model::QaInstance> = jsonl::read_jsonl(&rolled).unwrap();
    assert_eq!(filled.len(), 6);
    for inst in &filled {
        // Perfect mock strong peer: the designation coincides with truth.
        assert_eq!(inst.pseudo_gt_option, Some(inst.gt_option));
        assert_eq!(inst.gt_reasoning.len(), 3);
        assert!(inst.wrong_reasoning.contains_key("weak-1"));
        assert!(inst.wrong_reasoning.contains_key("weak-2"));
    }
}

#[test]
fn split_is_idempotent_given_same_seed() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let raw = root.join("raw.jsonl");
    write_raw_corpus(&raw, 30);
    let std_path = root.join("std.jsonl");
    run_ok(ecl()
        .args(["standardize", "--schema", "mmlu-pro"])
        .arg("--in")
        .arg(&raw)
        .arg("--out")
        .arg(&std_path));

    let d1 = root.join("s1");
    let d2 = root.join("s2");
    for d in [&d1, &d2] {
        run_ok(ecl()
            .args(["split", "--history", "10", "--seed", "21", "--out-dir"])
            .arg(d)
            .arg("--in")
            .arg(&std_path));
    }
    for name in ["history.jsonl", "train.jsonl", "test.jsonl"] {
        assert_eq!(
            std::fs::read(d1.join(name)).unwrap(),
            std::fs::read(d2.join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn sweep_produces_grid() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let corpus = fixtures::synthetic_corpus(30, 6, 3);
    let (pool, rest) = corpus.split_at(20);
    let pool_path = root.join("pool.jsonl");
    let test_path = root.join("test.jsonl");
    jsonl::write_jsonl(&pool_path, pool).unwrap();
    jsonl::write_jsonl(&test_path, rest).unwrap();

    let out_dir = root.join("sweep");
    let out = run_ok(ecl()
        .args([
            "sweep",
            "--peers",
            "2,3",
            "--history-lengths",
            "2,5",
            "--setting",
            "adversarial",
            "--variant",
            "ma-outcome",
            "--method",
            "ecl-e",
            "--backend",
            "replay",
            "--seed",
            "5",
            "--limit",
            "4",
        ])
        .arg("--instances")
        .arg(&test_path)
        .arg("--history-pool")
        .arg(&pool_path)
        .arg("--out-dir")
        .arg(&out_dir));
    assert!(stdout(&out).contains("4 cells"));
    let grid = std::fs::read_to_string(out_dir.join("sweep.md")).unwrap();
    assert!(grid.contains("| P=2 |") && grid.contains("T=5"), "{grid}");
    assert!(out_dir.join("p3_t5/report.json").exists());
}

#[test]
fn usage_errors_exit_2_and_domain_errors_exit_1() {
    // Unknown subcommand.
    let out = ecl().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Missing required flag.
    let out = ecl().args(["split", "--history", "5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Domain error: nonexistent input file.
    let out = ecl()
        .args(["split", "--history", "5", "--seed", "1", "--in", "/nonexistent.jsonl", "--out-dir", "/tmp/ecl-nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Invalid stage.
    let out = ecl()
        .args(["render", "--method", "ecl-e", "--stage", "2", "--dump", "--episodes", "/nonexistent.jsonl"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_config_escape_hatch_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let corpus = fixtures::synthetic_corpus(26, 6, 3);
    let (pool, rest) = corpus.split_at(20);
    let episodes: Vec<_> = rest
        .iter()
        .map(|inst| {
            ecl_core::dataset::build_episode(
                inst,
                pool,
                &ecl_core::dataset::EpisodeSpec {
                    num_peers: 2,
                    history_length: 3,
                    setting: ecl_core::model::Setting::Adversarial,
                    variant: ecl_core::model::Variant::MaOutcome,
                    seed: 2,
                    peer_pool: None,
                },
            )
            .unwrap()
        })
        .collect();
    let episodes_path = root.join("episodes.jsonl");
    jsonl::write_jsonl(&episodes_path, &episodes).unwrap();

    // Config says method sa + scripted accuracy 0.0; the flag overrides the
    // accuracy, so the run must come out perfect.
    let config = serde_json::json!({
        "episodes_path": episodes_path,
        "method": {"method": "sa"},
        "perturbation": "none",
        "backend": {"kind": "scripted", "scripted_accuracy": 0.0},
        "seed": 4,
        "output_dir": root.join("run_cfg"),
    });
    let config_path = root.join("run.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let out = run_ok(ecl()
        .args(["run", "--scripted-accuracy", "1.0"])
        .arg("--config")
        .arg(&config_path));
    let line = stdout(&out);
    assert!(line.contains("method=sa"), "{line}");
    assert!(line.contains("accuracy=1.0000"), "{line}");
}
