//! Discriminator-based baseline: cross-entropy training and the
//! `log q(z|s) − log p(z)` intrinsic reward under a uniform skill prior.
//!
//! The discriminator net outputs raw logits; normalization happens here via
//! log-softmax, so rewards are always computed from a proper distribution.

use crate::nn::{Mlp, Tape, Tensor, TensorId};
use crate::{Error, Result};

/// Log-probability of index `skill` under a softmax over one logit row.
pub fn log_softmax_pick(logits: &[f64], skill: usize) -> Result<f64> {
    if skill >= logits.len() {
        return Err(Error::Shape {
            op: "log_softmax_pick",
            details: format!("skill {skill} out of range for {} logits", logits.len()),
        });
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("discriminator logits".into()));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    Ok(logits[skill] - lse)
}

/// Intrinsic reward from a log-probability under the uniform prior over `m`
/// skills: `log q + log m`. Bounded above by `log m`; 0 at chance.
pub fn reward_from_log_prob(log_q: f64, m: usize) -> f64 {
    log_q + (m as f64).ln()
}

/// Batch intrinsic reward: run the discriminator on each state and score the
/// state's own skill label.
pub fn diayn_reward(
    discriminator: &Mlp,
    states: &Tensor,
    skills: &[usize],
    m: usize,
) -> Result<Vec<f64>> {
    if discriminator.out_dim() != m {
        return Err(Error::Shape {
            op: "diayn_reward",
            details: format!(
                "discriminator has {} outputs but the skill space has {m}",
                discriminator.out_dim()
            ),
        });
    }
    if states.rows() != skills.len() {
        return Err(Error::Shape {
            op: "diayn_reward",
            details: format!("{} states but {} skill labels", states.rows(), skills.len()),
        });
    }
    let logits = discriminator.forward(states)?;
    let mut rewards = Vec::with_capacity(skills.len());
    for (i, &z) in skills.iter().enumerate() {
        let log_q = log_softmax_pick(logits.row(i), z)?;
        rewards.push(reward_from_log_prob(log_q, m));
    }
    Ok(rewards)
}

/// Plain cross-entropy of logit rows against skill labels (for logging).
pub fn diayn_loss(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    if logits.rows() != labels.len() {
        return Err(Error::Shape {
            op: "diayn_loss",
            details: format!("{} logit rows but {} labels", logits.rows(), labels.len()),
        });
    }
    if logits.rows() == 0 {
        return Err(Error::Degenerate {
            op: "diayn_loss",
            details: "empty batch".into(),
        });
    }
    let mut total = 0.0;
    for (i, &z) in labels.iter().enumerate() {
        total -= log_softmax_pick(logits.row(i), z)?;
    }
    Ok(total / labels.len() as f64)
}

/// Differentiable cross-entropy over a logits node: `mean_i (lse_i − x_{i,z_i})`.
pub fn diayn_loss_graph(tape: &mut Tape, logits: TensorId, labels: &[usize]) -> Result<TensorId> {
    let (rows, cols) = tape.dims(logits);
    if rows != labels.len() {
        return Err(Error::Shape {
            op: "diayn_loss_graph",
            details: format!("{rows} logit rows but {} labels", labels.len()),
        });
    }
    if rows == 0 {
        return Err(Error::Degenerate {
            op: "diayn_loss_graph",
            details: "empty batch".into(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&z| z >= cols) {
        return Err(Error::Shape {
            op: "diayn_loss_graph",
            details: format!("label {bad} out of range for {cols} classes"),
        });
    }
    let ones = vec![1.0; rows * cols];
    let lse = tape.masked_logsumexp_rows(logits, &ones)?;
    let picked = tape.row_pick(logits, labels)?;
    let diff = tape.sub(lse, picked)?;
    Ok(tape.mean(diff))
}
