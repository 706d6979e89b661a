//! Contrastive skill objective: loss, per-anchor intrinsic reward, and the
//! differentiable graph used for encoder updates.
//!
//! Conventions shared by every function here, for a batch of `B` feature
//! pairs (`anchors`, `positives`, `skills`):
//!
//! * The score between two feature rows `u`, `v` is `exp(u·v / kappa)`.
//! * The denominator for anchor `i` contains its own positive score plus the
//!   scores of every batch entry (anchor or positive column) whose skill
//!   differs from `skills[i]`. Same-skill entries other than the designated
//!   positive are masked out, and so is the anchor itself.
//! * `loss = mean_i −log(positive_i / denominator_i)`; the per-anchor ratio
//!   is the intrinsic reward and always lies strictly inside (0, 1) because
//!   at least one negative exists.
//!
//! Two deliberately different arithmetic routes are provided: [`becl_loss`]
//! works in log space (shifted log-sum-exp), while [`becl_reward`] and
//! [`becl_reward_queries`] form the exponential ratio directly. Their
//! agreement (`mean(−log r) == loss`) is a standing invariant checked in
//! tests and during training.

use crate::nn::{Tape, Tensor, TensorId};
use crate::{Error, Result};

/// Ids of the loss scalar and the per-anchor log-ratio column built by
/// [`becl_loss_graph`].
#[derive(Debug, Clone, Copy)]
pub struct BeclTerms {
    /// 1×1 loss node; call `backward` on this.
    pub loss: TensorId,
    /// B×1 node holding `log(reward_i)` per anchor.
    pub log_ratio: TensorId,
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !kappa.is_finite() || kappa <= 0.0 {
        return Err(Error::Config(format!(
            "temperature kappa must be finite and positive, got {kappa}"
        )));
    }
    Ok(())
}

fn check_batch_shapes(anchors: &Tensor, positives: &Tensor, skills: &[usize]) -> Result<()> {
    if anchors.rows() != positives.rows() || anchors.cols() != positives.cols() {
        return Err(Error::Shape {
            op: "becl",
            details: format!(
                "anchors are {}x{} but positives are {}x{}",
                anchors.rows(),
                anchors.cols(),
                positives.rows(),
                positives.cols()
            ),
        });
    }
    if anchors.rows() != skills.len() {
        return Err(Error::Shape {
            op: "becl",
            details: format!(
                "{} feature pairs but {} skill labels",
                anchors.rows(),
                skills.len()
            ),
        });
    }
    if anchors.rows() == 0 {
        return Err(Error::Degenerate {
            op: "becl",
            details: "empty batch".into(),
        });
    }
    anchors.check_finite("becl anchors")?;
    positives.check_finite("becl positives")?;
    Ok(())
}

fn check_two_skills(skills: &[usize]) -> Result<()> {
    let first = skills[0];
    if skills.iter().all(|&z| z == first) {
        return Err(Error::Degenerate {
            op: "becl",
            details: format!(
                "all {} batch entries share skill {first}; no negatives exist",
                skills.len()
            ),
        });
    }
    Ok(())
}

/// Denominator mask for a batch of `B` pairs, as a row-major `B x 2B` matrix.
///
/// Columns `0..B` score the anchor features, columns `B..2B` the positive
/// features. Entry `(i, j)` is 1 when column `j` belongs to anchor `i`'s
/// denominator: any entry of a different skill, plus anchor `i`'s own
/// positive (column `B + i`).
pub fn negative_mask(skills: &[usize]) -> Result<Vec<f64>> {
    check_two_skills(skills)?;
    let b = skills.len();
    let mut mask = vec![0.0; b * 2 * b];
    for i in 0..b {
        let row = &mut mask[i * 2 * b..(i + 1) * 2 * b];
        for j in 0..b {
            if skills[j] != skills[i] {
                row[j] = 1.0;
                row[b + j] = 1.0;
            }
        }
        row[b + i] = 1.0;
    }
    Ok(mask)
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Contrastive loss over feature pairs, evaluated in log space.
pub fn becl_loss(
    anchors: &Tensor,
    positives: &Tensor,
    skills: &[usize],
    kappa: f64,
) -> Result<f64> {
    check_kappa(kappa)?;
    check_batch_shapes(anchors, positives, skills)?;
    check_two_skills(skills)?;
    let b = skills.len();
    let inv = 1.0 / kappa;
    let mut total = 0.0;
    for i in 0..b {
        let fa_i = anchors.row(i);
        // Scaled logits for row i over the 2B batch columns, masked entries
        // skipped entirely.
        let mut logits = Vec::with_capacity(2 * b);
        for j in 0..b {
            if skills[j] != skills[i] {
                logits.push(dot(fa_i, anchors.row(j)) * inv);
                logits.push(dot(fa_i, positives.row(j)) * inv);
            }
        }
        let pos = dot(fa_i, positives.row(i)) * inv;
        logits.push(pos);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
        let lse = max + sum.ln();
        total += lse - pos;
    }
    let loss = total / b as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "contrastive loss is not finite (kappa = {kappa})"
        )));
    }
    Ok(loss)
}

/// Per-anchor intrinsic reward, evaluated as a direct exponential ratio.
pub fn becl_reward(
    anchors: &Tensor,
    positives: &Tensor,
    skills: &[usize],
    kappa: f64,
) -> Result<Vec<f64>> {
    let pair: Vec<usize> = (0..skills.len()).collect();
    becl_reward_queries(anchors, &pair, anchors, positives, skills, kappa)
}

/// Intrinsic reward of arbitrary query states scored against a batch.
///
/// `pair_index[q]` names the batch pair the query belongs to: the query's
/// positive is `positives[pair_index[q]]` and its negatives are every batch
/// entry whose skill differs from `skills[pair_index[q]]`. With
/// `queries = anchors` and identity pairing this is exactly [`becl_reward`].
pub fn becl_reward_queries(
    queries: &Tensor,
    pair_index: &[usize],
    anchors: &Tensor,
    positives: &Tensor,
    skills: &[usize],
    kappa: f64,
) -> Result<Vec<f64>> {
    check_kappa(kappa)?;
    check_batch_shapes(anchors, positives, skills)?;
    check_two_skills(skills)?;
    if queries.cols() != anchors.cols() {
        return Err(Error::Shape {
            op: "becl_reward_queries",
            details: format!(
                "queries have {} feature dims, batch has {}",
                queries.cols(),
                anchors.cols()
            ),
        });
    }
    if queries.rows() != pair_index.len() {
        return Err(Error::Shape {
            op: "becl_reward_queries",
            details: format!(
                "{} queries but {} pair indices",
                queries.rows(),
                pair_index.len()
            ),
        });
    }
    queries.check_finite("becl queries")?;
    let b = skills.len();
    let inv = 1.0 / kappa;
    let mut rewards = Vec::with_capacity(queries.rows());
    for (q, &pair) in pair_index.iter().enumerate() {
        if pair >= b {
            return Err(Error::Shape {
                op: "becl_reward_queries",
                details: format!("pair index {pair} out of range for batch of {b}"),
            });
        }
        let fq = queries.row(q);
        let skill = skills[pair];
        let pos = (dot(fq, positives.row(pair)) * inv).exp();
        let mut denom = pos;
        for j in 0..b {
            if skills[j] != skill {
                denom += (dot(fq, anchors.row(j)) * inv).exp();
                denom += (dot(fq, positives.row(j)) * inv).exp();
            }
        }
        let r = pos / denom;
        if !r.is_finite() || r <= 0.0 || r >= 1.0 {
            return Err(Error::NonFinite(format!(
                "intrinsic reward {r} left (0, 1); kappa = {kappa} is too extreme \
                 for the feature scale"
            )));
        }
        rewards.push(r);
    }
    Ok(rewards)
}

/// Build the differentiable loss graph on `tape` from feature nodes.
///
/// `anchor_features` and `positive_features` must be `B x d` nodes already on
/// the tape (typically encoder outputs). Returns the loss node and the
/// per-anchor log-ratio node; `exp(log_ratio)` equals the reward vector.
pub fn becl_loss_graph(
    tape: &mut Tape,
    anchor_features: TensorId,
    positive_features: TensorId,
    skills: &[usize],
    kappa: f64,
) -> Result<BeclTerms> {
    check_kappa(kappa)?;
    let (b, d) = tape.dims(anchor_features);
    if tape.dims(positive_features) != (b, d) {
        return Err(Error::Shape {
            op: "becl_loss_graph",
            details: format!(
                "anchor node is {b}x{d} but positive node is {:?}",
                tape.dims(positive_features)
            ),
        });
    }
    if b != skills.len() {
        return Err(Error::Shape {
            op: "becl_loss_graph",
            details: format!("{b} feature pairs but {} skill labels", skills.len()),
        });
    }
    if b == 0 {
        return Err(Error::Degenerate {
            op: "becl_loss_graph",
            details: "empty batch".into(),
        });
    }
    let mask = negative_mask(skills)?;
    let sim_aa = tape.matmul_nt(anchor_features, anchor_features)?;
    let sim_ap = tape.matmul_nt(anchor_features, positive_features)?;
    let sims = tape.concat_cols(sim_aa, sim_ap)?;
    let logits = tape.scale(sims, 1.0 / kappa);
    let lse = tape.masked_logsumexp_rows(logits, &mask)?;
    let pos_dot = tape.row_dot(anchor_features, positive_features)?;
    let pos = tape.scale(pos_dot, 1.0 / kappa);
    let log_ratio = tape.sub(pos, lse)?;
    let mean = tape.mean(log_ratio);
    let loss = tape.scale(mean, -1.0);
    Ok(BeclTerms { loss, log_ratio })
}
