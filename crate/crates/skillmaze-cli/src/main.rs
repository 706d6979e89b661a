//! `skillmaze` binary: argument parsing and dispatch over the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use skillmaze_cli::ablate::{cmd_ablate, format_ablation_table, AblateAxis};
use skillmaze_cli::config::{load_layout, read_config, Overrides, RunConfig};
use skillmaze_cli::diag::{diag_runs, format_table, synthetic_checks, DiagOptions};
use skillmaze_cli::runs::{cmd_finetune, cmd_pretrain, FinetuneSpec, SkillChoice};
use skillmaze_cli::svg::plot_directory;
use skillmaze_cli::{err, Result};
use skillmaze_core::env::DownstreamTask;

#[derive(Parser)]
#[command(
    name = "skillmaze",
    version,
    about = "Unsupervised skill-discovery experiments in 2D mazes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand: the configuration file plus targeted
/// overrides applied on top of it.
#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Run configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replace the config's seed list with this one seed (for diag: the
    /// synthetic-suite seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Intrinsic reward method: becl, diayn, or entropy.
    #[arg(long)]
    reward_method: Option<String>,
    /// Contrastive temperature.
    #[arg(long)]
    kappa: Option<f64>,
    /// Number of skills.
    #[arg(long)]
    skill_dim: Option<usize>,
    /// Maze layout: builtin name (bottleneck, tree) or a layout file.
    #[arg(long)]
    layout: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            reward_method: self.reward_method.clone(),
            kappa: self.kappa,
            skill_dim: self.skill_dim,
            layout: self.layout.clone(),
            out: self.out.clone(),
        }
    }

    /// Loads the config file (required) and applies the overrides.
    fn load(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| err("--config is required for this subcommand"))?;
        let mut cfg = read_config(path)?;
        self.overrides().apply(&mut cfg)?;
        Ok(cfg)
    }

    /// Loads the config if given, else the defaults; applies overrides.
    fn load_or_default(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => RunConfig::default(),
        };
        self.overrides().apply(&mut cfg)?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain skills with an intrinsic reward, one run per seed.
    Pretrain {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Finetune on a goal task, from a pretrained checkpoint or from scratch.
    Finetune {
        #[command(flatten)]
        common: CommonArgs,
        /// Pretrained checkpoint; omit for the from-scratch baseline.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Goal as "x,y"; defaults to the lower-left corner goal.
        #[arg(long)]
        goal: Option<String>,
        /// Reward shaping: dense or sparse.
        #[arg(long, default_value = "dense")]
        task: String,
        /// Radius of the sparse goal region.
        #[arg(long, default_value_t = skillmaze_core::env::SPARSE_RADIUS)]
        radius: f64,
        /// Skill to condition on: an index, "all", or "random".
        #[arg(long, default_value = "random")]
        skill: String,
    },
    /// Sweep one hyperparameter; aggregate coverage and mutual information.
    Ablate {
        #[command(flatten)]
        common: CommonArgs,
        /// Swept axis: skill_dim or temperature.
        #[arg(long)]
        axis: String,
        /// Comma-separated sweep values, e.g. "1,0.5,0.1,0.01".
        #[arg(long)]
        values: String,
        /// Occupancy cells per side for the aggregated table.
        #[arg(long, default_value_t = 10)]
        grid: usize,
    },
    /// Render trajectory SVGs for finished runs.
    Plot {
        #[command(flatten)]
        common: CommonArgs,
        /// Run directories (default: the config's output directory).
        #[arg(long)]
        run: Vec<PathBuf>,
    },
    /// Measurement reports over runs, or the synthetic verification suite.
    Diag {
        #[command(flatten)]
        common: CommonArgs,
        /// Run directories (default: the config's output directory).
        #[arg(long)]
        run: Vec<PathBuf>,
        /// Run only the synthetic theory checks (no run directory needed).
        #[arg(long)]
        synthetic: bool,
        /// Occupancy cells per side.
        #[arg(long, default_value_t = 10)]
        grid: usize,
        /// Training steps for the neural MI estimate.
        #[arg(long, default_value_t = 1500)]
        mine_steps: usize,
    },
}

fn parse_goal(text: &str) -> Result<[f64; 2]> {
    let (x, y) = text
        .split_once(',')
        .ok_or_else(|| err(format!("--goal takes \"x,y\", got '{text}'")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| err(format!("--goal coordinate '{}' is not a number", s.trim())))
    };
    Ok([parse(x)?, parse(y)?])
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Pretrain { common } => {
            let cfg = common.load()?;
            let manifest = cmd_pretrain(&cfg)?;
            println!("pretrained {} seed(s) into {}", manifest.runs.len(), cfg.out.display());
            for run in &manifest.runs {
                println!(
                    "  seed {} -> {} ({:.1}s, {} frames)",
                    run.seed, run.path, run.wall_seconds, run.frames
                );
            }
        }
        Command::Finetune { common, checkpoint, goal, task, radius, skill } => {
            let cfg = common.load()?;
            let spec = load_layout(&cfg.layout)?;
            let goal = match goal {
                Some(text) => parse_goal(&text)?,
                None => DownstreamTask::corner_goals(&spec)[0],
            };
            let mut downstream = match task.as_str() {
                "dense" => DownstreamTask::dense(goal),
                "sparse" => DownstreamTask::sparse(goal),
                other => return Err(err(format!("--task takes dense or sparse, got '{other}'"))),
            };
            downstream.radius = radius;
            let request = FinetuneSpec {
                checkpoint,
                task: downstream,
                skill: SkillChoice::parse(&skill)?,
            };
            let manifest = cmd_finetune(&cfg, &request)?;
            println!("finetuned {} run(s) into {}", manifest.runs.len(), cfg.out.display());
            for run in &manifest.runs {
                println!("  {} ({:.1}s)", run.path, run.wall_seconds);
            }
        }
        Command::Ablate { common, axis, values, grid } => {
            let cfg = common.load()?;
            let axis = AblateAxis::parse(&axis)?;
            let parsed: Result<Vec<f64>> = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| err(format!("--values entry '{}' is not a number", v.trim())))
                })
                .collect();
            let cells = cmd_ablate(&cfg, axis, &parsed?, grid)?;
            print!("{}", format_ablation_table(axis, &cells));
            println!("table written to {}", cfg.out.join("ablation.csv").display());
        }
        Command::Plot { common, run } => {
            let dirs = if run.is_empty() {
                vec![common.load()?.out]
            } else {
                run
            };
            for dir in dirs {
                for path in plot_directory(&dir)? {
                    println!("{}", path.display());
                }
            }
        }
        Command::Diag { common, run, synthetic, grid, mine_steps } => {
            let options = DiagOptions {
                grid,
                mine_steps,
                seed: common.seed.unwrap_or_else(|| DiagOptions::default().seed),
            };
            if synthetic {
                let checks = synthetic_checks(options.seed)?;
                let json = serde_json::to_string_pretty(&checks)?;
                if let Some(out) = &common.out {
                    std::fs::create_dir_all(out)?;
                    std::fs::write(out.join("theorem_checks.json"), &json)?;
                }
                println!("{json}");
            } else {
                let dirs = if run.is_empty() {
                    vec![common.load_or_default()?.out]
                } else {
                    run
                };
                let rows = diag_runs(&dirs, &options)?;
                print!("{}", format_table(&rows));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
