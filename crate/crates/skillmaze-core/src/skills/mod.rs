//! Skill spaces and intrinsic reward methods.
//!
//! Three reward methods are provided:
//!
//! - [`becl`]: contrastive rewards — two states from the same skill are a
//!   positive pair, states from other skills are negatives, and the reward
//!   is the softmax ratio of positive-pair similarity against the masked
//!   denominator. The mean negative log reward is exactly the training loss.
//! - [`diayn`]: discriminator rewards `log q(z|s) - log p(z)` from a softmax
//!   classifier trained to recognize skills from states.
//! - [`entropy`]: skill-agnostic particle-entropy rewards from k-nearest-
//!   neighbor distances.

pub mod becl;
pub mod diayn;
pub mod entropy;
mod skill_space;

pub use becl::{
    becl_loss, becl_loss_graph, becl_reward, becl_reward_queries, negative_mask, BeclTerms,
};
pub use diayn::{diayn_loss, diayn_loss_graph, diayn_reward, log_softmax_pick, reward_from_log_prob};
pub use entropy::entropy_reward;
pub use skill_space::{PairMode, SkillSpace};

use serde::{Deserialize, Serialize};

/// Which intrinsic reward drives pretraining.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMethod {
    Becl,
    Diayn,
    Entropy,
}

impl RewardMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "becl" => Some(Self::Becl),
            "diayn" => Some(Self::Diayn),
            "entropy" => Some(Self::Entropy),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Becl => "becl",
            Self::Diayn => "diayn",
            Self::Entropy => "entropy",
        }
    }
}

/// A paired contrastive batch: `anchors[i]` and `positives[i]` are two states
/// produced by `skills[i]`; every state with a different skill serves as a
/// negative for row `i`.
#[derive(Debug, Clone)]
pub struct ContrastiveBatch {
    /// Anchor states, one per pair.
    pub anchors: Vec<[f64; 2]>,
    /// Positive states, aligned with `anchors`.
    pub positives: Vec<[f64; 2]>,
    /// Skill index per pair.
    pub skills: Vec<usize>,
}

impl ContrastiveBatch {
    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Anchor states as a `B x 2` tensor (encoder input).
    pub fn anchor_tensor(&self) -> crate::nn::Tensor {
        rows_tensor(&self.anchors)
    }

    /// Positive states as a `B x 2` tensor (encoder input).
    pub fn positive_tensor(&self) -> crate::nn::Tensor {
        rows_tensor(&self.positives)
    }

    /// Structural validation: aligned lengths and at least two distinct skills.
    pub fn validate(&self) -> crate::Result<()> {
        if self.anchors.len() != self.positives.len() || self.anchors.len() != self.skills.len() {
            return Err(crate::Error::Shape {
                op: "contrastive_batch",
                details: format!(
                    "{} anchors, {} positives, {} skills",
                    self.anchors.len(),
                    self.positives.len(),
                    self.skills.len()
                ),
            });
        }
        if self.anchors.is_empty() {
            return Err(crate::Error::Degenerate {
                op: "contrastive_batch",
                details: "empty batch".into(),
            });
        }
        let first = self.skills[0];
        if self.skills.iter().all(|&z| z == first) {
            return Err(crate::Error::Degenerate {
                op: "contrastive_batch",
                details: "all pairs share one skill; no negatives exist".into(),
            });
        }
        Ok(())
    }
}

fn rows_tensor(points: &[[f64; 2]]) -> crate::nn::Tensor {
    let data: Vec<f64> = points.iter().flat_map(|p| p.iter().copied()).collect();
    crate::nn::Tensor::from_vec(points.len(), 2, data).expect("point rows are well-formed")
}
