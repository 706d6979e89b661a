//! Pretraining and finetuning orchestration: one self-describing directory
//! per run, holding the config copy, metrics stream, checkpoint, and
//! evaluation trajectories.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use skillmaze_core::agent::{read_metrics, Agent, MetricsRecord};
use skillmaze_core::env::{write_trajectories, DownstreamTask, Maze, Transition};
use skillmaze_core::nn::{load_checkpoint_with_meta, save_checkpoint_with_meta, Tensor};

use crate::config::{config_hash, load_layout, serialize_config, RunConfig, CONFIG_FILE};
use crate::manifest::{write_manifest, ManifestRun, RunManifest};
use crate::{err, Result};

/// Evaluation rollouts recorded per skill after pretraining.
pub const EVAL_TRAJECTORIES_PER_SKILL: usize = 20;

/// Rolls noise-free evaluation episodes: `per_skill` per skill, episodes
/// numbered sequentially by (skill, repeat).
pub fn eval_trajectories(
    agent: &mut Agent,
    maze: &mut Maze,
    per_skill: usize,
) -> Result<Vec<Transition>> {
    let m = agent.config().skill_dim;
    let mut all = Vec::with_capacity(m * per_skill * agent.config().episode_length);
    for skill in 0..m {
        for repeat in 0..per_skill {
            let episode = (skill * per_skill + repeat) as u64;
            all.extend(agent.run_episode(maze, skill, episode, None, false)?);
        }
    }
    Ok(all)
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join(CONFIG_FILE), serialize_config(cfg))?;
    Ok(())
}

/// Pretrains one seed into `cfg.seed_dir(seed)`; returns (dir, seconds).
pub fn pretrain_seed(cfg: &RunConfig, seed: u64) -> Result<(PathBuf, f64)> {
    let dir = cfg.seed_dir(seed);
    fs::create_dir_all(&dir)?;
    let mut agent = Agent::new(cfg.train_for_seed(seed), cfg.reward_method)?;
    let mut maze = Maze::new(load_layout(&cfg.layout)?)?;

    let start = Instant::now();
    let mut metrics = BufWriter::new(File::create(dir.join("metrics.jsonl"))?);
    agent.pretrain(&mut maze, &mut metrics)?;
    metrics.flush()?;
    let seconds = start.elapsed().as_secs_f64();

    let eval = eval_trajectories(&mut agent, &mut maze, EVAL_TRAJECTORIES_PER_SKILL)?;
    write_trajectories(&dir.join("trajectories.csv"), &eval)?;

    let entries = agent.checkpoint_entries();
    let params: Vec<(String, &Tensor)> =
        entries.iter().map(|(k, v)| (k.clone(), v)).collect();
    let meta = checkpoint_meta(cfg, seed, agent.frames());
    save_checkpoint_with_meta(&dir.join("checkpoint.json"), &params, &meta)?;
    Ok((dir, seconds))
}

fn checkpoint_meta(cfg: &RunConfig, seed: u64, frames: usize) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("config_hash".into(), config_hash(cfg)),
        ("seed".into(), seed.to_string()),
        ("reward_method".into(), cfg.reward_method.name().into()),
        ("frames".into(), frames.to_string()),
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
    ])
}

/// Runs pretraining for every configured seed and writes the manifest.
pub fn cmd_pretrain(cfg: &RunConfig) -> Result<RunManifest> {
    cfg.validate()?;
    prepare_out_dir(cfg)?;
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let (_, wall_seconds) = pretrain_seed(cfg, seed)?;
        runs.push(ManifestRun {
            seed,
            path: format!("seed-{seed}"),
            wall_seconds,
            frames: cfg.train.pretrain_frames,
        });
    }
    let manifest = RunManifest {
        config_hash: config_hash(cfg),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "pretrain".into(),
        runs,
    };
    write_manifest(&cfg.out, &manifest)?;
    Ok(manifest)
}

/// Which skill(s) to finetune.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkillChoice {
    Fixed(usize),
    /// One seed-deterministic draw.
    Random,
    /// Every skill, one run each.
    All,
}

impl SkillChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "all" => Ok(Self::All),
            other => other
                .parse::<usize>()
                .map(Self::Fixed)
                .map_err(|_| err(format!("--skill takes an index, 'all', or 'random', got '{other}'"))),
        }
    }

    fn resolve(self, skill_dim: usize, seed: u64) -> Result<Vec<usize>> {
        match self {
            Self::Fixed(z) if z < skill_dim => Ok(vec![z]),
            Self::Fixed(z) => {
                Err(err(format!("skill {z} out of range for skill_dim {skill_dim}")))
            }
            Self::Random => {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                Ok(vec![rng.gen_range(0..skill_dim)])
            }
            Self::All => Ok((0..skill_dim).collect()),
        }
    }
}

/// Finetuning request: optional pretrained checkpoint (scratch baseline
/// without), downstream task, and skill selection.
#[derive(Debug, Clone)]
pub struct FinetuneSpec {
    pub checkpoint: Option<PathBuf>,
    pub task: DownstreamTask,
    pub skill: SkillChoice,
}

/// One point of a return curve.
#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub frame: usize,
    pub episode: u64,
    pub episodic_return: f64,
}

/// Extracts the episode-return curve from a metrics stream.
pub fn return_curve(metrics_path: &Path) -> Result<Vec<CurvePoint>> {
    let mut curve = Vec::new();
    for record in read_metrics(metrics_path)? {
        if let MetricsRecord::Episode { frame, episode, episodic_return: Some(r), .. } = record
        {
            curve.push(CurvePoint { frame, episode, episodic_return: r });
        }
    }
    Ok(curve)
}

/// Finetunes (per seed, per selected skill) into
/// `out/seed-<seed>-skill-<z>/`, writing metrics and a return-curve JSON.
pub fn cmd_finetune(cfg: &RunConfig, spec: &FinetuneSpec) -> Result<RunManifest> {
    cfg.validate()?;
    prepare_out_dir(cfg)?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        for skill in spec.skill.resolve(cfg.train.skill_dim, seed)? {
            let rel = format!("seed-{seed}-skill-{skill}");
            let dir = cfg.out.join(&rel);
            fs::create_dir_all(&dir)?;
            let mut agent = Agent::new(cfg.train_for_seed(seed), cfg.reward_method)?;
            if let Some(path) = &spec.checkpoint {
                let (tensors, meta) = load_checkpoint_with_meta(path)?;
                if let Some(method) = meta.get("reward_method") {
                    if method != cfg.reward_method.name() {
                        return Err(err(format!(
                            "checkpoint was pretrained with '{method}' but the config \
                             says '{}'",
                            cfg.reward_method.name()
                        )));
                    }
                }
                agent.load_entries(&tensors)?;
            }
            let mut maze = Maze::new(load_layout(&cfg.layout)?)?;
            let start = Instant::now();
            let mut metrics = BufWriter::new(File::create(dir.join("metrics.jsonl"))?);
            agent.finetune(&mut maze, &spec.task, skill, &mut metrics)?;
            metrics.flush()?;
            let wall_seconds = start.elapsed().as_secs_f64();

            let curve = return_curve(&dir.join("metrics.jsonl"))?;
            fs::write(dir.join("curve.json"), serde_json::to_string_pretty(&curve)?)?;
            runs.push(ManifestRun {
                seed,
                path: rel,
                wall_seconds,
                frames: cfg.train.finetune_frames,
            });
        }
    }
    let manifest = RunManifest {
        config_hash: config_hash(cfg),
        version: env!("CARGO_PKG_VERSION").into(),
        command: "finetune".into(),
        runs,
    };
    write_manifest(&cfg.out, &manifest)?;
    Ok(manifest)
}
