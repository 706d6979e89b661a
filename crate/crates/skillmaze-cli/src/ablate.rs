//! Hyperparameter sweeps: one pretraining run per value per seed, with an
//! aggregated coverage / mutual-information table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use skillmaze_core::diagnostics::{binned_mi, coverage, reachable_cells, OccupancyGrid};
use skillmaze_core::env::read_trajectories;

use crate::config::{config_hash, load_layout, RunConfig};
use crate::manifest::{write_manifest, ManifestRun, RunManifest};
use crate::runs::cmd_pretrain;
use crate::{err, Result};

/// Which hyperparameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblateAxis {
    SkillDim,
    Temperature,
}

impl AblateAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "skill_dim" => Ok(Self::SkillDim),
            "temperature" => Ok(Self::Temperature),
            other => Err(err(format!(
                "--axis takes 'skill_dim' or 'temperature', got '{other}'"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::SkillDim => "skill_dim",
            Self::Temperature => "temperature",
        }
    }

    /// Validates one sweep value and renders its directory label.
    fn check(self, value: f64) -> Result<String> {
        match self {
            Self::SkillDim => {
                if value.fract() != 0.0 || value < 2.0 {
                    return Err(err(format!(
                        "skill_dim sweep values must be integers >= 2, got {value}"
                    )));
                }
                Ok(format!("skill_dim-{}", value as usize))
            }
            Self::Temperature => {
                if !value.is_finite() || value <= 0.0 {
                    return Err(err(format!(
                        "temperature sweep values must be positive, got {value}"
                    )));
                }
                Ok(format!("temperature-{value}"))
            }
        }
    }

    fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            Self::SkillDim => cfg.train.skill_dim = value as usize,
            Self::Temperature => cfg.train.kappa = value,
        }
    }
}

/// One measured sweep cell.
#[derive(Debug, Clone)]
pub struct AblationCell {
    pub value: f64,
    pub seed: u64,
    pub coverage: f64,
    pub binned_mi: f64,
}

/// Occupancy measurements for one finished seed directory.
fn measure_cell(seed_dir: &Path, cfg: &RunConfig, grid_side: usize) -> Result<(f64, f64)> {
    let spec = load_layout(&cfg.layout)?;
    let rows = read_trajectories(&seed_dir.join("trajectories.csv"))?;
    let mut grid = OccupancyGrid::new(grid_side, cfg.train.skill_dim, spec.bounds)?;
    for row in &rows {
        grid.add_state([row.x, row.y], row.skill)?;
    }
    let reachable = reachable_cells(&spec, grid_side)?;
    let cov = coverage(&grid, &reachable)?;
    let mi = if grid.total() == 0 { 0.0 } else { binned_mi(&grid)? };
    Ok((cov, mi))
}

/// Pretrains every `(value, seed)` cell under `cfg.out/<axis>-<value>/` and
/// writes `ablation.csv` plus a manifest at the sweep root.
pub fn cmd_ablate(
    cfg: &RunConfig,
    axis: AblateAxis,
    values: &[f64],
    grid_side: usize,
) -> Result<Vec<AblationCell>> {
    if values.is_empty() {
        return Err(err("--values must list at least one value"));
    }
    for &v in values {
        axis.check(v)?;
    }
    fs::create_dir_all(&cfg.out)?;

    let mut cells = Vec::new();
    let mut manifest_runs = Vec::new();
    for &value in values {
        let label = axis.check(value)?;
        let mut sub = cfg.clone();
        axis.apply(&mut sub, value);
        sub.out = cfg.out.join(&label);
        let manifest = cmd_pretrain(&sub)?;
        for run in &manifest.runs {
            let seed_dir = sub.out.join(&run.path);
            let (cov, mi) = measure_cell(&seed_dir, &sub, grid_side)?;
            cells.push(AblationCell { value, seed: run.seed, coverage: cov, binned_mi: mi });
            manifest_runs.push(ManifestRun {
                seed: run.seed,
                path: format!("{label}/{}", run.path),
                wall_seconds: run.wall_seconds,
                frames: run.frames,
            });
        }
    }

    let mut csv = String::from("axis,value,seed,coverage,binned_mi\n");
    for cell in &cells {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            axis.name(),
            cell.value,
            cell.seed,
            cell.coverage,
            cell.binned_mi
        );
    }
    fs::write(cfg.out.join("ablation.csv"), csv)?;

    write_manifest(
        &cfg.out,
        &RunManifest {
            config_hash: config_hash(cfg),
            version: env!("CARGO_PKG_VERSION").into(),
            command: "ablate".into(),
            runs: manifest_runs,
        },
    )?;
    Ok(cells)
}

/// Renders the aggregated sweep table, one row per cell plus per-value means.
pub fn format_ablation_table(axis: AblateAxis, cells: &[AblationCell]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<14} {:>10} {:>6} {:>9} {:>10}",
        "axis", "value", "seed", "coverage", "binned_mi"
    );
    for cell in cells {
        let _ = writeln!(
            out,
            "{:<14} {:>10} {:>6} {:>9.4} {:>10.4}",
            axis.name(),
            cell.value,
            cell.seed,
            cell.coverage,
            cell.binned_mi
        );
    }
    let mut values: Vec<f64> = Vec::new();
    for cell in cells {
        if !values.contains(&cell.value) {
            values.push(cell.value);
        }
    }
    for value in values {
        let group: Vec<&AblationCell> = cells.iter().filter(|c| c.value == value).collect();
        let n = group.len() as f64;
        let mean_cov = group.iter().map(|c| c.coverage).sum::<f64>() / n;
        let mean_mi = group.iter().map(|c| c.binned_mi).sum::<f64>() / n;
        let _ = writeln!(
            out,
            "{:<14} {:>10} {:>6} {:>9.4} {:>10.4}",
            axis.name(),
            value,
            "mean",
            mean_cov,
            mean_mi
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_names_parse_and_round_trip() {
        assert_eq!(AblateAxis::parse("skill_dim").unwrap(), AblateAxis::SkillDim);
        assert_eq!(AblateAxis::parse("temperature").unwrap(), AblateAxis::Temperature);
        assert!(AblateAxis::parse("widths").is_err());
    }

    #[test]
    fn sweep_values_are_validated_per_axis() {
        assert!(AblateAxis::SkillDim.check(1.0).is_err());
        assert!(AblateAxis::SkillDim.check(2.5).is_err());
        assert_eq!(AblateAxis::SkillDim.check(20.0).unwrap(), "skill_dim-20");
        assert!(AblateAxis::Temperature.check(0.0).is_err());
        assert_eq!(AblateAxis::Temperature.check(0.01).unwrap(), "temperature-0.01");
    }

    #[test]
    fn table_appends_per_value_means() {
        let cells = vec![
            AblationCell { value: 4.0, seed: 1, coverage: 0.5, binned_mi: 1.0 },
            AblationCell { value: 4.0, seed: 2, coverage: 0.7, binned_mi: 1.2 },
            AblationCell { value: 10.0, seed: 1, coverage: 0.8, binned_mi: 2.0 },
        ];
        let table = format_ablation_table(AblateAxis::SkillDim, &cells);
        // Header + three cells + two means.
        assert_eq!(table.lines().count(), 6);
        assert!(table.contains("mean"));
        assert!(table.contains("0.6000"), "mean coverage of the 4-skill cells");
    }
}
