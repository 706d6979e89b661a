//! Newline-delimited JSON metrics records.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

/// One line of the metrics stream.
///
/// `Update` records are emitted once per gradient update; `Episode` records
/// once per completed episode. During pretraining rewards are intrinsic and
/// `episodic_return` is absent; during finetuning it is the episode's summed
/// extrinsic reward and the intrinsic fields are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricsRecord {
    Update {
        frame: usize,
        episode: u64,
        update_index: u64,
        loss_critic: f64,
        loss_actor: f64,
        /// Representation loss after this update's encoder/discriminator
        /// step (0 for the entropy method, which learns no representation).
        loss_repr: f64,
        /// Same loss evaluated before the step (None for entropy).
        #[serde(skip_serializing_if = "Option::is_none")]
        loss_repr_pre: Option<f64>,
        /// Mean over this update's anchor rewards (pretraining only).
        #[serde(skip_serializing_if = "Option::is_none")]
        mean_intrinsic_reward: Option<f64>,
        /// Mean extrinsic reward over the batch (finetuning only).
        #[serde(skip_serializing_if = "Option::is_none")]
        mean_extrinsic_reward: Option<f64>,
        /// Extremes over every reward emitted in this update (anchors and
        /// n-step query states alike).
        #[serde(skip_serializing_if = "Option::is_none")]
        reward_min: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        reward_max: Option<f64>,
        /// |mean(−log anchor_reward) − loss_repr| (contrastive method only).
        #[serde(skip_serializing_if = "Option::is_none")]
        reward_loss_gap: Option<f64>,
        /// Mean anchor reward per skill; None for skills absent from the
        /// batch (pretraining only).
        #[serde(skip_serializing_if = "Option::is_none")]
        per_skill_mean_reward: Option<Vec<Option<f64>>>,
    },
    Episode {
        frame: usize,
        episode: u64,
        skill: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        episodic_return: Option<f64>,
    },
}

/// Appends one record as a JSON line.
pub fn write_record(out: &mut dyn Write, record: &MetricsRecord) -> Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Reads a whole metrics stream back.
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
