//! End-to-end harness workflows, exercised in-process.

mod common;

use std::fs;
use std::path::Path;

use skillmaze_cli::ablate::{cmd_ablate, AblateAxis};
use skillmaze_cli::config::{read_config, read_run_dir_config};
use skillmaze_cli::diag::{diag_runs, seed_report, DiagOptions};
use skillmaze_cli::manifest::read_manifest;
use skillmaze_cli::runs::{
    cmd_finetune, cmd_pretrain, return_curve, FinetuneSpec, SkillChoice,
    EVAL_TRAJECTORIES_PER_SKILL,
};
use skillmaze_cli::svg::plot_directory;
use skillmaze_core::env::{read_trajectories, DownstreamTask};

fn quick_diag() -> DiagOptions {
    DiagOptions { grid: 10, mine_steps: 40, seed: 17 }
}

#[test]
fn pretraining_lays_out_a_self_describing_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = common::write_tiny_config(dir.path(), &[]);
    let cfg = read_config(&config_path).unwrap();
    let manifest = cmd_pretrain(&cfg).unwrap();

    assert_eq!(manifest.runs.len(), 1);
    assert_eq!(manifest.runs[0].seed, 5);
    assert_eq!(manifest.runs[0].frames, 120);
    let stored = read_manifest(&cfg.out).unwrap();
    assert_eq!(stored.config_hash, manifest.config_hash);
    assert_eq!(stored.command, "pretrain");

    // The stored config round-trips to the effective one.
    assert_eq!(read_run_dir_config(&cfg.out).unwrap(), cfg);

    let seed_dir = cfg.out.join("seed-5");
    for file in ["metrics.jsonl", "trajectories.csv", "checkpoint.json"] {
        assert!(seed_dir.join(file).is_file(), "missing {file}");
    }

    // 20 noise-free trajectories per skill, one row per step.
    let rows = read_trajectories(&seed_dir.join("trajectories.csv")).unwrap();
    assert_eq!(rows.len(), 2 * EVAL_TRAJECTORIES_PER_SKILL * 10);
    let episodes: std::collections::BTreeSet<u64> =
        rows.iter().map(|r| r.episode_id).collect();
    assert_eq!(episodes.len(), 2 * EVAL_TRAJECTORIES_PER_SKILL);
    for row in &rows {
        let expected_skill = (row.episode_id as usize) / EVAL_TRAJECTORIES_PER_SKILL;
        assert_eq!(row.skill, expected_skill);
    }
}

#[test]
fn rerunning_the_same_config_reproduces_every_artifact_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = common::write_tiny_config(dir.path(), &[]);
    let cfg = read_config(&config_path).unwrap();

    let read_all = |seed_dir: &Path| {
        (
            fs::read(seed_dir.join("metrics.jsonl")).unwrap(),
            fs::read(seed_dir.join("trajectories.csv")).unwrap(),
            fs::read(seed_dir.join("checkpoint.json")).unwrap(),
        )
    };
    cmd_pretrain(&cfg).unwrap();
    let first = read_all(&cfg.out.join("seed-5"));
    cmd_pretrain(&cfg).unwrap();
    let second = read_all(&cfg.out.join("seed-5"));
    assert!(first.0 == second.0, "metrics differ between identical runs");
    assert!(first.1 == second.1, "trajectories differ between identical runs");
    assert!(first.2 == second.2, "checkpoints differ between identical runs");
}

#[test]
fn plotting_renders_one_deterministic_svg_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = common::write_tiny_config(dir.path(), &[]);
    let cfg = read_config(&config_path).unwrap();
    cmd_pretrain(&cfg).unwrap();

    let written = plot_directory(&cfg.out).unwrap();
    assert_eq!(written.len(), 1);
    let svg = fs::read_to_string(&written[0]).unwrap();
    assert_eq!(
        svg.matches("<polyline").count(),
        2 * EVAL_TRAJECTORIES_PER_SKILL,
        "one polyline per evaluation episode"
    );
    let again = plot_directory(&cfg.out).unwrap();
    assert_eq!(svg, fs::read_to_string(&again[0]).unwrap());

    // Pointing at the seed directory itself also works (config in parent).
    let from_seed = plot_directory(&cfg.out.join("seed-5")).unwrap();
    assert_eq!(from_seed.len(), 1);
}

#[test]
fn diag_populates_every_measurement_field() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = common::write_tiny_config(dir.path(), &[]);
    let cfg = read_config(&config_path).unwrap();
    cmd_pretrain(&cfg).unwrap();

    let report = seed_report(&cfg.out.join("seed-5"), &cfg, &quick_diag()).unwrap();
    assert!((0.0..=1.0).contains(&report.coverage));
    assert!(report.coverage > 0.0, "the start cell alone is visited");
    let log_m = (2.0f64).ln();
    assert!(report.binned_mi >= 0.0 && report.binned_mi <= log_m + 1e-9);
    assert!(report.binned_mi <= report.state_entropy_binned + 1e-9);
    assert!(report.mine_mi.is_finite());
    assert!(report.particle_entropy >= 0.0);
    assert_eq!(report.assumption1_ok, report.state_entropy_binned > log_m);
    assert_eq!(report.per_skill_cell_histograms.len(), 2);
    assert!(report.theorem_checks.bound_margin >= 0.0);
    // This run trained an encoder, so the identity runs on its features.
    assert!(report.theorem_checks.identity_gap < 1e-9);

    let rows = diag_runs(&[cfg.out.clone()], &quick_diag()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].method, "becl");
    assert!(cfg.out.join("seed-5").join("diag.json").is_file());
}

#[test]
fn finetuning_from_a_checkpoint_writes_return_curves() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = common::write_tiny_config(dir.path(), &[]);
    let mut cfg = read_config(&config_path).unwrap();
    cmd_pretrain(&cfg).unwrap();
    let checkpoint = cfg.out.join("seed-5").join("checkpoint.json");

    cfg.out = dir.path().join("finetune");
    let request = FinetuneSpec {
        checkpoint: Some(checkpoint.clone()),
        task: DownstreamTask::dense([0.9, 0.9]),
        skill: SkillChoice::All,
    };
    let manifest = cmd_finetune(&cfg, &request).unwrap();
    assert_eq!(manifest.runs.len(), 2, "one run per skill");
    for run in &manifest.runs {
        let run_dir = cfg.out.join(&run.path);
        let curve = return_curve(&run_dir.join("metrics.jsonl")).unwrap();
        assert_eq!(curve.len(), 6, "six finetuning episodes of ten steps");
        assert!(curve.iter().all(|p| p.episodic_return.is_finite()));
        let json = fs::read_to_string(run_dir.join("curve.json")).unwrap();
        assert!(json.contains("episodic_return"));
    }

    // Scratch baseline: no checkpoint, fixed skill.
    cfg.out = dir.path().join("scratch");
    let scratch = FinetuneSpec {
        checkpoint: None,
        task: DownstreamTask::dense([0.9, 0.9]),
        skill: SkillChoice::Fixed(0),
    };
    let manifest = cmd_finetune(&cfg, &scratch).unwrap();
    assert_eq!(manifest.runs.len(), 1);
    assert_eq!(manifest.runs[0].path, "seed-5-skill-0");

    // A method mismatch between checkpoint and config is rejected.
    cfg.out = dir.path().join("mismatch");
    cfg.reward_method = skillmaze_core::skills::RewardMethod::Diayn;
    let bad = FinetuneSpec {
        checkpoint: Some(checkpoint),
        task: DownstreamTask::dense([0.9, 0.9]),
        skill: SkillChoice::Fixed(0),
    };
    let e = cmd_finetune(&cfg, &bad).unwrap_err().to_string();
    assert!(e.contains("pretrained with"), "{e}");
}

#[test]
fn random_skill_choice_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = common::write_tiny_config(dir.path(), &[("reward_method", "entropy")]);
    let mut cfg = read_config(&config_path).unwrap();

    cfg.out = dir.path().join("ft-a");
    let request = FinetuneSpec {
        checkpoint: None,
        task: DownstreamTask::dense([0.9, 0.9]),
        skill: SkillChoice::Random,
    };
    let a = cmd_finetune(&cfg, &request).unwrap();
    cfg.out = dir.path().join("ft-b");
    let b = cmd_finetune(&cfg, &request).unwrap();
    assert_eq!(a.runs[0].path, b.runs[0].path, "same seed draws the same skill");
}

#[test]
fn ablation_sweeps_write_cells_and_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = common::write_tiny_config(dir.path(), &[("reward_method", "entropy")]);
    let cfg = read_config(&config_path).unwrap();

    let cells = cmd_ablate(&cfg, AblateAxis::SkillDim, &[2.0, 3.0], 10).unwrap();
    assert_eq!(cells.len(), 2, "two values, one seed each");
    for cell in &cells {
        assert!(cell.coverage > 0.0 && cell.coverage <= 1.0);
        assert!(cell.binned_mi >= 0.0);
    }
    for label in ["skill_dim-2", "skill_dim-3"] {
        assert!(cfg.out.join(label).join("seed-5").join("trajectories.csv").is_file());
    }
    let csv = fs::read_to_string(cfg.out.join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "header plus two cells");
    assert!(csv.starts_with("axis,value,seed,coverage,binned_mi"));
    let manifest = read_manifest(&cfg.out).unwrap();
    assert_eq!(manifest.command, "ablate");
    assert_eq!(manifest.runs.len(), 2);
}
