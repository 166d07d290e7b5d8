//! Integration tests for the CLI and the on-disk interfaces: exit codes,
//! phase sequencing through checkpoints, sweeps, and the rho trend readout.

use std::path::Path;
use std::process::{Command, Output};

use hybrid_distill::harness::config::ExperimentConfig;
use hybrid_distill::harness::pipeline::{run_all, RunReport};

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-distill"))
}

fn run_cli(args: &[&str]) -> Output {
    binary().args(args).output().expect("spawn hybrid-distill")
}

fn tiny_overrides(dir: &Path) -> Vec<String> {
    let mut args = vec!["--out".to_string(), dir.display().to_string()];
    for kv in [
        "samples_per_class=40",
        "teacher_epochs=15",
        "teacher_hidden=16",
        "feature_dim=8",
        "gen_hidden=16",
        "disc_hidden=16",
        "gan_epochs=5",
        "synthetic_per_class=25",
        "histogram_samples_per_class=25",
        "student_epochs=10",
        "student_hidden=8",
    ] {
        args.push("--set".to_string());
        args.push(kv.to_string());
    }
    args
}

#[test]
fn verify_theory_passes_and_exits_zero() {
    let out = run_cli(&["verify-theory", "--trials", "2000", "--seed", "7"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.matches("[PASS]").count(), 6, "stdout:\n{}", stdout);
    assert!(!stdout.contains("[FAIL]"));
}

#[test]
fn missing_config_file_exits_one_with_path() {
    let out = run_cli(&[
        "run-all",
        "--config",
        "/nonexistent/toy.cfg",
        "--out",
        "/tmp/never-used",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/nonexistent/toy.cfg"), "stderr: {}", stderr);
}

#[test]
fn unknown_flag_and_subcommand_exit_one_with_usage() {
    let out = run_cli(&["run-all", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run_cli(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run_cli(&["run-all", "--out", "/tmp/x", "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));
}

#[test]
fn divergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["run-all".into()];
    args.extend(tiny_overrides(dir.path()));
    args.push("--set".into());
    args.push("teacher_lr=1e12".into());
    let out = binary().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn phases_chain_through_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();

    // Distill before any artifacts exist: clean failure naming the gap.
    let mut args: Vec<String> = vec!["distill".into()];
    args.extend(tiny_overrides(dir.path()));
    let out = binary().args(&args).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("teacher"));

    for (phase, expected) in [
        ("pretrain-teacher", vec!["teacher.bin", "collected.csv", "original_test.csv"]),
        ("train-gan", vec!["generator.bin", "discriminator.bin"]),
        ("distill", vec!["synthetic.csv", "student.bin", "report.json"]),
    ] {
        let mut args: Vec<String> = vec![phase.into()];
        args.extend(tiny_overrides(dir.path()));
        let out = binary().args(&args).output().unwrap();
        assert!(
            out.status.success(),
            "{} failed: {}",
            phase,
            String::from_utf8_lossy(&out.stderr)
        );
        for name in expected {
            assert!(dir.path().join(name).exists(), "{} missing after {}", name, phase);
        }
    }

    // The teacher checkpoint is untouched by the downstream phases.
    let teacher_after_all = std::fs::read(dir.path().join("teacher.bin")).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["pretrain-teacher".into()];
    args.extend(tiny_overrides(dir2.path()));
    assert!(binary().args(&args).output().unwrap().status.success());
    let teacher_fresh = std::fs::read(dir2.path().join("teacher.bin")).unwrap();
    assert_eq!(teacher_after_all, teacher_fresh);

    // The report subcommand reads the finished run.
    let out = run_cli(&["report", "--out", &dir.path().display().to_string()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("student accuracy"), "stdout: {}", stdout);
}

#[test]
fn config_file_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        master_seed: 321,
        samples_per_class: 40,
        teacher_epochs: 12,
        teacher_hidden: 16,
        feature_dim: 8,
        gen_hidden: 16,
        disc_hidden: 16,
        gan_epochs: 4,
        synthetic_per_class: 25,
        histogram_samples_per_class: 25,
        student_epochs: 8,
        student_hidden: 8,
        ..ExperimentConfig::default()
    };
    let cfg_path = dir.path().join("toy.cfg");
    std::fs::write(&cfg_path, config.to_text()).unwrap();

    let out_dir = dir.path().join("run");
    let out = run_cli(&[
        "run-all",
        "--config",
        &cfg_path.display().to_string(),
        "--out",
        &out_dir.display().to_string(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // The config snapshot written to the run directory parses back to the
    // exact same configuration.
    let snapshot = std::fs::read_to_string(out_dir.join("config.txt")).unwrap();
    assert_eq!(ExperimentConfig::from_text(&snapshot).unwrap(), config);

    let report: RunReport =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report.master_seed, 321);
}

#[test]
fn inflation_sweep_reports_monotone_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["sweep-inflation".into()];
    args.extend(tiny_overrides(dir.path()));
    args.push("--factors".into());
    args.push("1,2,4".into());
    let out = binary().args(&args).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let points: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("inflation_sweep.json")).unwrap(),
    )
    .unwrap();
    let points = points.as_array().unwrap();
    assert_eq!(points.len(), 3);
    let alphas: Vec<f64> = points.iter().map(|p| p["alpha"].as_f64().unwrap()).collect();
    assert!(alphas.windows(2).all(|w| w[0] <= w[1]), "alphas {:?}", alphas);
}

#[test]
fn ablate_writes_all_variants() {
    let dir = tempfile::tempdir().unwrap();
    let mut args: Vec<String> = vec!["ablate".into()];
    args.extend(tiny_overrides(dir.path()));
    let out = binary().args(&args).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ablation.json")).unwrap())
            .unwrap();
    let names: Vec<&str> = report["variants"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, vec!["full", "wo_blend", "wo_trans", "wo_reg"]);
    assert!(report["baseline_accuracy"].as_f64().unwrap() > 0.0);
    for name in names {
        assert!(dir.path().join(name).join("report.json").exists());
    }
}

#[test]
fn rho_sweep_trend_is_reported() {
    // Desk-scale readout of the collected-data-quantity sweep: student
    // accuracy per rho is reported, not asserted (the trend is an
    // image-scale empirical claim).
    let mut line = String::from("rho sweep (student / baseline):");
    for rho in [0.1, 0.5, 1.0] {
        // A long-tail profile cannot be satisfied at rho = 1.0 (the head
        // class would need more examples than exist); sweep uniformly.
        let config = ExperimentConfig {
            master_seed: 11,
            samples_per_class: 60,
            rho,
            imbalance_ratio: 1.0,
            teacher_epochs: 20,
            teacher_hidden: 16,
            feature_dim: 8,
            gen_hidden: 16,
            disc_hidden: 16,
            gan_epochs: 10,
            synthetic_per_class: 40,
            histogram_samples_per_class: 40,
            student_epochs: 20,
            student_hidden: 8,
            ..ExperimentConfig::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let report = run_all(&config, dir.path()).unwrap();
        line.push_str(&format!(
            "  rho={:.1}: {:.4}/{:.4}",
            rho, report.student_accuracy, report.baseline_accuracy
        ));
    }
    println!("{}", line);
}
