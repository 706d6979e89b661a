//! Plain-text run configuration: `key = value` lines with strict
//! unknown-key rejection, stable serialization, and a content hash.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use skillmaze_core::agent::TrainConfig;
use skillmaze_core::env::{parse_layout, builtin_layout, MazeSpec};
use skillmaze_core::skills::{PairMode, RewardMethod};

use crate::{err, Result};

/// Name of the configuration copy written into every run directory.
pub const CONFIG_FILE: &str = "config.txt";

/// A full experiment description: training hyperparameters plus the run
/// surface (method, maze, output directory, seeds).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub reward_method: RewardMethod,
    /// Builtin layout name (`bottleneck`, `tree`) or a path to a layout file.
    pub layout: String,
    pub out: PathBuf,
    /// One pretraining run per seed; each seed owns a subdirectory.
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            reward_method: RewardMethod::Becl,
            layout: "bottleneck".into(),
            out: PathBuf::from("runs/run"),
            seeds: vec![1],
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(err("seeds must list at least one seed"));
        }
        let unique: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            return Err(err("seeds contains duplicates; each seed owns one directory"));
        }
        load_layout(&self.layout)?;
        Ok(())
    }

    /// The per-seed training configuration (the seed overrides `rng_seed`).
    pub fn train_for_seed(&self, seed: u64) -> TrainConfig {
        let mut t = self.train.clone();
        t.rng_seed = seed;
        t
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.out.join(format!("seed-{seed}"))
    }
}

/// Resolves a layout string: builtin name first, then a layout file path.
pub fn load_layout(layout: &str) -> Result<MazeSpec> {
    if let Ok(spec) = builtin_layout(layout) {
        return Ok(spec);
    }
    let path = Path::new(layout);
    if path.is_file() {
        return Ok(parse_layout(&fs::read_to_string(path)?)?);
    }
    Err(err(format!(
        "layout '{layout}' is neither a builtin (bottleneck, tree) nor a readable file"
    )))
}

/// Parses configuration text. Every key is optional (defaults apply), but
/// unknown and duplicate keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("config line {}: expected 'key = value', got {:?}", lineno + 1, line)))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(err(format!("config line {}: duplicate key '{key}'", lineno + 1)));
        }
        apply_key(&mut cfg, key, value)
            .map_err(|e| err(format!("config line {}: {e}", lineno + 1)))?;
    }
    Ok(cfg)
}

/// Reads and parses `path`.
pub fn read_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| err(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Reads the configuration copy stored in a run directory.
pub fn read_run_dir_config(dir: &Path) -> Result<RunConfig> {
    read_config(&dir.join(CONFIG_FILE))
}

fn apply_key(cfg: &mut RunConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    let bad = |what: &str| format!("key '{key}': invalid {what} {value:?}");
    macro_rules! num {
        ($field:expr, $ty:ty) => {{
            $field = value.parse::<$ty>().map_err(|_| bad("number"))?;
        }};
    }
    match key {
        "reward_method" => {
            cfg.reward_method = RewardMethod::parse(value)
                .ok_or_else(|| bad("method (becl, diayn, entropy)"))?;
        }
        "layout" => cfg.layout = value.to_string(),
        "out" => cfg.out = PathBuf::from(value),
        "seeds" => {
            let seeds: std::result::Result<Vec<u64>, _> =
                value.split(',').map(|s| s.trim().parse::<u64>()).collect();
            cfg.seeds = seeds.map_err(|_| bad("seed list (e.g. 1,2,3)"))?;
        }
        "pair_mode" => {
            cfg.train.pair_mode = PairMode::parse(value)
                .ok_or_else(|| bad("pair mode (cross_trajectory, same_trajectory_far)"))?;
        }
        "discount" => num!(cfg.train.discount, f64),
        "n_step" => num!(cfg.train.n_step, usize),
        "batch_size" => num!(cfg.train.batch_size, usize),
        "seed_frames" => num!(cfg.train.seed_frames, usize),
        "update_frequency" => num!(cfg.train.update_frequency, usize),
        "pretrain_frames" => num!(cfg.train.pretrain_frames, usize),
        "finetune_frames" => num!(cfg.train.finetune_frames, usize),
        "learning_rate" => num!(cfg.train.learning_rate, f64),
        "skill_dim" => num!(cfg.train.skill_dim, usize),
        "kappa" => num!(cfg.train.kappa, f64),
        "hidden_dim" => num!(cfg.train.hidden_dim, usize),
        "feature_dim" => num!(cfg.train.feature_dim, usize),
        "disc_hidden_dim" => num!(cfg.train.disc_hidden_dim, usize),
        "buffer_capacity" => num!(cfg.train.buffer_capacity, usize),
        "episode_length" => num!(cfg.train.episode_length, usize),
        "exploration_stddev" => num!(cfg.train.exploration_stddev, f64),
        "stddev_clip" => num!(cfg.train.stddev_clip, f64),
        "ema_rate" => num!(cfg.train.ema_rate, f64),
        "knn_k" => num!(cfg.train.knn_k, usize),
        "min_pair_gap" => num!(cfg.train.min_pair_gap, usize),
        _ => return Err(format!("unknown key '{key}'")),
    }
    Ok(())
}

/// Renders the full schema in a fixed order; `parse_config` inverts it.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let t = &cfg.train;
    let seeds: Vec<String> = cfg.seeds.iter().map(|s| s.to_string()).collect();
    let mut out = String::from("# skillmaze run configuration\n");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("reward_method", cfg.reward_method.name().into());
    kv("layout", cfg.layout.clone());
    kv("out", cfg.out.display().to_string());
    kv("seeds", seeds.join(","));
    kv("discount", t.discount.to_string());
    kv("n_step", t.n_step.to_string());
    kv("batch_size", t.batch_size.to_string());
    kv("seed_frames", t.seed_frames.to_string());
    kv("update_frequency", t.update_frequency.to_string());
    kv("pretrain_frames", t.pretrain_frames.to_string());
    kv("finetune_frames", t.finetune_frames.to_string());
    kv("learning_rate", t.learning_rate.to_string());
    kv("skill_dim", t.skill_dim.to_string());
    kv("kappa", t.kappa.to_string());
    kv("hidden_dim", t.hidden_dim.to_string());
    kv("feature_dim", t.feature_dim.to_string());
    kv("disc_hidden_dim", t.disc_hidden_dim.to_string());
    kv("buffer_capacity", t.buffer_capacity.to_string());
    kv("episode_length", t.episode_length.to_string());
    kv("exploration_stddev", t.exploration_stddev.to_string());
    kv("stddev_clip", t.stddev_clip.to_string());
    kv("ema_rate", t.ema_rate.to_string());
    kv("knn_k", t.knn_k.to_string());
    kv("pair_mode", t.pair_mode.name().into());
    kv("min_pair_gap", t.min_pair_gap.to_string());
    out
}

/// SHA-256 of the canonical serialization, as lowercase hex.
pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(serialize_config(cfg).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Command-line overrides applied on top of a loaded configuration.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub reward_method: Option<String>,
    pub kappa: Option<f64>,
    pub skill_dim: Option<usize>,
    pub layout: Option<String>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(method) = &self.reward_method {
            cfg.reward_method = RewardMethod::parse(method)
                .ok_or_else(|| err(format!("unknown reward method '{method}'")))?;
        }
        if let Some(kappa) = self.kappa {
            cfg.train.kappa = kappa;
        }
        if let Some(skill_dim) = self.skill_dim {
            cfg.train.skill_dim = skill_dim;
        }
        if let Some(layout) = &self.layout {
            cfg.layout = layout.clone();
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_yields_the_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn serialization_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.reward_method = RewardMethod::Diayn;
        cfg.layout = "tree".into();
        cfg.seeds = vec![3, 5, 8];
        cfg.train.kappa = 0.25;
        cfg.train.pair_mode = PairMode::SameTrajectoryFar;
        cfg.train.min_pair_gap = 20;
        let back = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_line_number() {
        let e = parse_config("kappa = 0.5\nkapa = 0.1\n").unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("kapa"), "{e}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let e = parse_config("kappa = 0.5\nkappa = 0.1\n").unwrap_err().to_string();
        assert!(e.contains("duplicate") && e.contains("kappa"), "{e}");
    }

    #[test]
    fn malformed_values_name_the_key() {
        let e = parse_config("skill_dim = lots\n").unwrap_err().to_string();
        assert!(e.contains("skill_dim") && e.contains("lots"), "{e}");
        let e = parse_config("seeds = 1,two\n").unwrap_err().to_string();
        assert!(e.contains("seed list"), "{e}");
        let e = parse_config("just a line\n").unwrap_err().to_string();
        assert!(e.contains("key = value"), "{e}");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = parse_config("# a comment\n\n  kappa = 0.25  \n").unwrap();
        assert_eq!(cfg.train.kappa, 0.25);
    }

    #[test]
    fn rng_seed_is_not_a_config_key() {
        // Seeds come from the seed list; a per-run rng_seed would be
        // silently overridden, so the key is rejected outright.
        assert!(parse_config("rng_seed = 7\n").is_err());
    }

    #[test]
    fn overrides_apply_on_top() {
        let mut cfg = RunConfig::default();
        let ov = Overrides {
            seed: Some(9),
            reward_method: Some("entropy".into()),
            kappa: Some(0.1),
            skill_dim: Some(4),
            layout: Some("tree".into()),
            out: Some(PathBuf::from("elsewhere")),
        };
        ov.apply(&mut cfg).unwrap();
        assert_eq!(cfg.seeds, vec![9]);
        assert_eq!(cfg.reward_method, RewardMethod::Entropy);
        assert_eq!(cfg.train.kappa, 0.1);
        assert_eq!(cfg.train.skill_dim, 4);
        assert_eq!(cfg.layout, "tree");
        assert_eq!(cfg.out, PathBuf::from("elsewhere"));
        assert!(Overrides { reward_method: Some("nope".into()), ..Default::default() }
            .apply(&mut cfg)
            .is_err());
    }

    #[test]
    fn validation_checks_seeds_and_layout() {
        let mut cfg = RunConfig::default();
        cfg.seeds = vec![];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![1, 1];
        assert!(cfg.validate().is_err());
        cfg.seeds = vec![1];
        cfg.layout = "no-such-layout".into();
        assert!(cfg.validate().is_err());
        cfg.layout = "tree".into();
        cfg.validate().unwrap();
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.train.kappa = 0.25;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
