//! Measurement reports over run directories, plus the synthetic
//! verification suite that needs no run at all.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use skillmaze_core::diagnostics::{
    binned_mi, binned_state_entropy, contrastive_bound_check, coverage, decomposition_check,
    mine_estimate, negative_limit_check, particle_entropy, random_block_joint,
    random_uniform_skill_joint, random_unit_features, reachable_cells, vmf_entropy,
    DiagnosticReport, MineConfig, OccupancyGrid, TheoremChecks, VmfKde,
};
use skillmaze_core::env::read_trajectories;
use skillmaze_core::nn::{load_checkpoint_with_meta, Mlp, MlpSpec, Tensor};
use skillmaze_core::skills::RewardMethod;

use crate::config::{load_layout, read_run_dir_config, RunConfig, CONFIG_FILE};
use crate::{err, Result};

/// Knobs for report computation.
#[derive(Debug, Clone)]
pub struct DiagOptions {
    /// Occupancy cells per side.
    pub grid: usize,
    /// Training steps for the neural MI estimate.
    pub mine_steps: usize,
    /// Seed for the synthetic checks and the neural estimator; fixed across
    /// runs so reports stay comparable.
    pub seed: u64,
}

impl Default for DiagOptions {
    fn default() -> Self {
        Self { grid: 10, mine_steps: 1500, seed: 17 }
    }
}

/// Contrastive temperature used by the synthetic checks.
const SYNTHETIC_KAPPA: f64 = 0.5;

/// Two-route evaluation gap of the kernel entropy estimate: the max-shifted
/// estimator against a direct unshifted evaluation of the same definition.
fn identity_gap_on(features: &Tensor, eval: &Tensor, kappa: f64) -> Result<f64> {
    let kde = VmfKde::new(kappa, features.clone())?;
    let route_shifted = -vmf_entropy(&kde, eval)? - kde.log_normalizer();
    let u = 1.0 / kappa;
    let m = features.rows() as f64;
    let mut mean_direct = 0.0;
    for i in 0..eval.rows() {
        let row = eval.row(i);
        let sum: f64 = (0..features.rows())
            .map(|j| {
                let dot: f64 = row.iter().zip(features.row(j)).map(|(a, b)| a * b).sum();
                (u * dot).exp()
            })
            .sum();
        mean_direct += (sum / m).ln();
    }
    mean_direct /= eval.rows() as f64;
    Ok((route_shifted - mean_direct).abs())
}

/// Runs the synthetic verification suite: contrastive bound margins over
/// random joints, the kernel-entropy identity, the decomposition identities,
/// and the negative-set limit.
pub fn synthetic_checks(seed: u64) -> Result<TheoremChecks> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut bound_margin = f64::INFINITY;
    for _ in 0..8 {
        let joint = random_uniform_skill_joint(3, 4, &mut rng)?;
        let features = random_unit_features(4, 8, &mut rng)?;
        let report =
            contrastive_bound_check(&joint, &features, SYNTHETIC_KAPPA, 0, &mut rng)?;
        bound_margin = bound_margin.min(report.margin);
    }

    let features = random_unit_features(200, 16, &mut rng)?;
    let eval = random_unit_features(120, 16, &mut rng)?;
    let identity_gap = identity_gap_on(&features, &eval, SYNTHETIC_KAPPA)?;

    let mut decomposition_violation: f64 = 0.0;
    for _ in 0..8 {
        let joint = random_block_joint(4, 3, &mut rng)?;
        let report = decomposition_check(&joint)?;
        decomposition_violation = decomposition_violation.max(report.max_violation);
    }

    let anchors = random_unit_features(64, 16, &mut rng)?;
    let positives = random_unit_features(64, 16, &mut rng)?;
    let pool = random_unit_features(2048, 16, &mut rng)?;
    let limit = negative_limit_check(
        &anchors,
        &positives,
        &pool,
        SYNTHETIC_KAPPA,
        &[8, 64, 512, 2048],
    )?;

    Ok(TheoremChecks {
        bound_margin,
        identity_gap,
        decomposition_violation,
        limit_gaps: limit.gaps,
    })
}

/// Restores the run's encoder and embeds `states`, when the run trained one.
fn becl_features(
    seed_dir: &Path,
    cfg: &RunConfig,
    states: &Tensor,
) -> Result<Option<Tensor>> {
    if cfg.reward_method != RewardMethod::Becl {
        return Ok(None);
    }
    let path = seed_dir.join("checkpoint.json");
    if !path.is_file() {
        return Ok(None);
    }
    let (tensors, _) = load_checkpoint_with_meta(&path)?;
    let t = &cfg.train;
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let mut encoder = Mlp::new(
        MlpSpec::with_unit_norm(vec![2, t.hidden_dim, t.hidden_dim, t.feature_dim]),
        &mut rng,
    )?;
    encoder.load_from(&tensors, "encoder.")?;
    Ok(Some(encoder.forward(states)?))
}

/// Computes the full report for one seed directory (occupancy measurements
/// from `trajectories.csv`, a neural MI estimate, and the theory checks).
pub fn seed_report(
    seed_dir: &Path,
    cfg: &RunConfig,
    options: &DiagOptions,
) -> Result<DiagnosticReport> {
    let spec = load_layout(&cfg.layout)?;
    let rows = read_trajectories(&seed_dir.join("trajectories.csv"))?;
    let m = cfg.train.skill_dim;

    let mut grid = OccupancyGrid::new(options.grid, m, spec.bounds)?;
    for row in &rows {
        grid.add_state([row.x, row.y], row.skill)?;
    }
    let reachable = reachable_cells(&spec, options.grid)?;
    let coverage_value = coverage(&grid, &reachable)?;
    let (mi, state_entropy) = if grid.total() == 0 {
        (0.0, 0.0)
    } else {
        (binned_mi(&grid)?, binned_state_entropy(&grid)?)
    };
    let assumption1_ok = state_entropy > (m as f64).ln();

    // Noise-free evaluation repeats trajectories verbatim, so collapse exact
    // duplicates before measuring spread: 20 copies of one point say nothing
    // more than the point itself.
    let mut unique: BTreeSet<(u64, u64)> = BTreeSet::new();
    for row in &rows {
        unique.insert((row.x.to_bits(), row.y.to_bits()));
    }
    let unique_states: Vec<Vec<f64>> = unique
        .iter()
        .map(|&(x, y)| vec![f64::from_bits(x), f64::from_bits(y)])
        .collect();
    let particle = if unique_states.len() >= 2 {
        let k = cfg.train.knn_k.min(unique_states.len() - 1);
        particle_entropy(&Tensor::from_rows(&unique_states)?, k)?
    } else {
        0.0
    };

    let mine = if rows.len() >= 2 {
        let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
        let take: Vec<usize> = if rows.len() > 4000 {
            rand::seq::index::sample(&mut rng, rows.len(), 4000).into_vec()
        } else {
            (0..rows.len()).collect()
        };
        let xs_rows: Vec<Vec<f64>> = take.iter().map(|&i| vec![rows[i].x, rows[i].y]).collect();
        let ys_rows: Vec<Vec<f64>> = take
            .iter()
            .map(|&i| {
                let mut one_hot = vec![0.0; m];
                one_hot[rows[i].skill] = 1.0;
                one_hot
            })
            .collect();
        let mut net = Mlp::new(MlpSpec::new(vec![2 + m, 32, 32, 1]), &mut rng)?;
        let config = MineConfig { train_steps: options.mine_steps, ..MineConfig::default() };
        mine_estimate(
            &mut net,
            &Tensor::from_rows(&xs_rows)?,
            &Tensor::from_rows(&ys_rows)?,
            &config,
            &mut rng,
        )?
    } else {
        0.0
    };

    let mut checks = synthetic_checks(options.seed)?;
    if unique_states.len() >= 2 {
        let states = Tensor::from_rows(&unique_states)?;
        if let Some(features) = becl_features(seed_dir, cfg, &states)? {
            checks.identity_gap = identity_gap_on(&features, &features, cfg.train.kappa)?;
        }
    }

    Ok(DiagnosticReport {
        coverage: coverage_value,
        binned_mi: mi,
        mine_mi: mine,
        particle_entropy: particle,
        state_entropy_binned: state_entropy,
        assumption1_ok,
        per_skill_cell_histograms: grid.per_skill_histograms(),
        theorem_checks: checks,
    })
}

/// One table row: where the numbers came from plus the report itself.
#[derive(Debug, Clone)]
pub struct RunReportRow {
    pub run: String,
    pub seed_path: String,
    pub method: String,
    pub report: DiagnosticReport,
}

/// Seed directories under a run root (or the root itself when it holds
/// trajectories directly), in sorted order.
fn seed_dirs(run_dir: &Path) -> Result<Vec<PathBuf>> {
    if run_dir.join("trajectories.csv").is_file() {
        return Ok(vec![run_dir.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = Vec::new();
    for entry in fs::read_dir(run_dir)? {
        let path = entry?.path();
        if path.is_dir() && path.join("trajectories.csv").is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(err(format!("no trajectories.csv under {}", run_dir.display())));
    }
    Ok(dirs)
}

/// Computes reports for every seed of every run directory, writing
/// `diag.json` next to each `trajectories.csv`.
pub fn diag_runs(run_dirs: &[PathBuf], options: &DiagOptions) -> Result<Vec<RunReportRow>> {
    let mut rows = Vec::new();
    for run_dir in run_dirs {
        let cfg = if run_dir.join(CONFIG_FILE).is_file() {
            read_run_dir_config(run_dir)?
        } else if let Some(parent) = run_dir.parent().filter(|p| p.join(CONFIG_FILE).is_file())
        {
            read_run_dir_config(parent)?
        } else {
            return Err(err(format!(
                "no {CONFIG_FILE} in {} or its parent",
                run_dir.display()
            )));
        };
        for seed_dir in seed_dirs(run_dir)? {
            let report = seed_report(&seed_dir, &cfg, options)?;
            fs::write(seed_dir.join("diag.json"), serde_json::to_string_pretty(&report)?)?;
            rows.push(RunReportRow {
                run: run_dir.display().to_string(),
                seed_path: seed_dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| seed_dir.display().to_string()),
                method: cfg.reward_method.name().into(),
                report: report.clone(),
            });
        }
    }
    Ok(rows)
}

/// Renders the comparison table shown on stdout.
pub fn format_table(rows: &[RunReportRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<16} {:<8} {:>9} {:>10} {:>9} {:>10} {:>8}",
        "run", "seed", "method", "coverage", "binned_mi", "mine_mi", "particle", "H>log m"
    );
    for row in rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "{:<28} {:<16} {:<8} {:>9.4} {:>10.4} {:>9.4} {:>10.4} {:>8}",
            row.run,
            row.seed_path,
            row.method,
            r.coverage,
            r.binned_mi,
            r.mine_mi,
            r.particle_entropy,
            if r.assumption1_ok { "yes" } else { "no" }
        );
    }
    out
}
