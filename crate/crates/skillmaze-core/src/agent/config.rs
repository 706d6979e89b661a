//! Training hyperparameters.

use serde::{Deserialize, Serialize};

use crate::skills::PairMode;
use crate::{Error, Result};

/// Hyperparameters for pretraining and finetuning.
///
/// `batch_size` counts contrastive pairs per update: the encoder sees
/// `2 * batch_size` states (both pair halves) and the critic updates on
/// `batch_size` n-step segments seeded at the first half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Discount factor γ.
    pub discount: f64,
    /// Horizon of n-step returns.
    pub n_step: usize,
    /// Contrastive pairs (and critic segments) per update.
    pub batch_size: usize,
    /// Frames collected before any parameter update.
    pub seed_frames: usize,
    /// One update every this many frames (after seeding).
    pub update_frequency: usize,
    /// Total environment frames of pretraining.
    pub pretrain_frames: usize,
    /// Total environment frames of finetuning.
    pub finetune_frames: usize,
    /// Adam learning rate for every optimizer.
    pub learning_rate: f64,
    /// Number of discrete skills m.
    pub skill_dim: usize,
    /// Contrastive temperature κ.
    pub kappa: f64,
    /// Hidden width of actor, critic, and encoder MLPs.
    pub hidden_dim: usize,
    /// Encoder output dimension (features live on the unit sphere).
    pub feature_dim: usize,
    /// Hidden width of the skill discriminator.
    pub disc_hidden_dim: usize,
    /// Replay capacity in transitions; evicted episode-at-a-time, oldest
    /// first.
    pub buffer_capacity: usize,
    /// Fixed episode length; the skill is resampled every episode.
    pub episode_length: usize,
    /// Gaussian exploration noise stddev.
    pub exploration_stddev: f64,
    /// Noise samples are clipped to this magnitude before being added.
    pub stddev_clip: f64,
    /// Critic target EMA rate τ.
    pub ema_rate: f64,
    /// Neighbor count for the entropy reward.
    pub knn_k: usize,
    /// How positive pairs are drawn from the buffer.
    pub pair_mode: PairMode,
    /// Minimum step gap for same-trajectory pairs.
    pub min_pair_gap: usize,
    /// Seed for every random choice in a run.
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            discount: 0.99,
            n_step: 3,
            batch_size: 256,
            seed_frames: 4000,
            update_frequency: 2,
            pretrain_frames: 125_000,
            finetune_frames: 100_000,
            learning_rate: 1e-4,
            skill_dim: 10,
            kappa: 0.5,
            hidden_dim: 256,
            feature_dim: 16,
            disc_hidden_dim: 256,
            buffer_capacity: 100_000,
            episode_length: 50,
            exploration_stddev: 0.2,
            stddev_clip: 0.3,
            ema_rate: 0.01,
            knn_k: 12,
            pair_mode: PairMode::CrossTrajectory,
            min_pair_gap: 25,
            rng_seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return bad(format!("discount must lie in (0, 1), got {}", self.discount));
        }
        if self.n_step < 1 {
            return bad("n_step must be >= 1".into());
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size must be >= 2, got {}", self.batch_size));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad(format!("kappa must lie in (0, 1], got {}", self.kappa));
        }
        if self.skill_dim == 0 {
            return bad("skill_dim must be >= 1".into());
        }
        if self.episode_length < 2 {
            return bad(format!("episode_length must be >= 2, got {}", self.episode_length));
        }
        if self.buffer_capacity < self.episode_length {
            return bad(format!(
                "buffer_capacity {} cannot hold one episode of {} steps",
                self.buffer_capacity, self.episode_length
            ));
        }
        if self.seed_frames < 2 * self.episode_length {
            return bad(format!(
                "seed_frames {} is below two episodes ({}); no positive pair can exist \
                 at the first update",
                self.seed_frames,
                2 * self.episode_length
            ));
        }
        if self.update_frequency == 0 {
            return bad("update_frequency must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.hidden_dim == 0 || self.feature_dim == 0 || self.disc_hidden_dim == 0 {
            return bad("network widths must be >= 1".into());
        }
        if !(self.exploration_stddev >= 0.0 && self.exploration_stddev.is_finite()) {
            return bad(format!(
                "exploration_stddev must be >= 0, got {}",
                self.exploration_stddev
            ));
        }
        if !(self.stddev_clip > 0.0 && self.stddev_clip.is_finite()) {
            return bad(format!("stddev_clip must be > 0, got {}", self.stddev_clip));
        }
        if !(self.ema_rate > 0.0 && self.ema_rate <= 1.0) {
            return bad(format!("ema_rate must lie in (0, 1], got {}", self.ema_rate));
        }
        if self.knn_k == 0 {
            return bad("knn_k must be >= 1".into());
        }
        if self.knn_k > self.batch_size {
            return bad(format!(
                "knn_k {} exceeds batch_size {}; the entropy reward has only batch_size \
                 reference states",
                self.knn_k, self.batch_size
            ));
        }
        if self.pair_mode == PairMode::SameTrajectoryFar
            && self.min_pair_gap >= self.episode_length
        {
            return bad(format!(
                "min_pair_gap {} leaves no valid pair in {}-step episodes",
                self.min_pair_gap, self.episode_length
            ));
        }
        Ok(())
    }
}
