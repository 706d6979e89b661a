//! Neural mutual-information estimation with the Donsker–Varadhan bound and
//! an exponential-moving-average bias correction for the gradient.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{Adam, AdamConfig, Mlp, Tape, Tensor, TensorId};
use crate::{Error, Result};

/// Training schedule for the statistics network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MineConfig {
    pub train_steps: usize,
    pub batch: usize,
    pub learning_rate: f64,
    /// Decay of the moving average over the partition-function estimate.
    pub ema_rate: f64,
}

impl Default for MineConfig {
    fn default() -> Self {
        Self { train_steps: 2000, batch: 128, learning_rate: 1e-3, ema_rate: 0.99 }
    }
}

impl MineConfig {
    fn validate(&self) -> Result<()> {
        if self.batch < 2 {
            return Err(Error::Config(format!("batch must be >= 2, got {}", self.batch)));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !self.ema_rate.is_finite() || !(0.0..1.0).contains(&self.ema_rate) {
            return Err(Error::Config(format!(
                "ema_rate must lie in [0, 1), got {}",
                self.ema_rate
            )));
        }
        Ok(())
    }
}

/// Builds the training loss on the tape:
/// `-(mean T(joint) - mean exp(T(marginal)) / ema)`.
///
/// Treating `ema` as a constant makes the gradient of this surrogate equal to
/// the bias-corrected estimator gradient, which replaces the batch partition
/// estimate in the denominator with its moving average.
pub fn mine_loss_graph(
    tape: &mut Tape,
    net: &Mlp,
    params: &[TensorId],
    joint: TensorId,
    marginal: TensorId,
    ema: f64,
) -> Result<TensorId> {
    if !ema.is_finite() || ema <= 0.0 {
        return Err(Error::Config(format!("ema denominator must be positive, got {ema}")));
    }
    let t_joint = net.forward_on(tape, params, joint)?;
    let t_marginal = net.forward_on(tape, params, marginal)?;
    let mean_joint = tape.mean(t_joint);
    let exp_marginal = tape.exp(t_marginal);
    let mean_exp = tape.mean(exp_marginal);
    let corrected = tape.scale(mean_exp, 1.0 / ema);
    let surrogate = tape.sub(mean_joint, corrected)?;
    Ok(tape.scale(surrogate, -1.0))
}

/// Trains the statistics network on `(x, y)` samples and returns the
/// Donsker–Varadhan estimate of I(X; Y) in nats.
///
/// Marginal samples re-pair each x with an independently drawn y. The final
/// estimate evaluates the trained network on the full sample with one random
/// re-pairing: `mean T(joint) - log mean exp(T(marginal))`.
pub fn mine_estimate(
    net: &mut Mlp,
    xs: &Tensor,
    ys: &Tensor,
    config: &MineConfig,
    rng: &mut ChaCha12Rng,
) -> Result<f64> {
    config.validate()?;
    let n = xs.rows();
    if n != ys.rows() {
        return Err(Error::Shape {
            op: "mine_estimate",
            details: format!("{} x rows vs {} y rows", n, ys.rows()),
        });
    }
    if n < 2 {
        return Err(Error::Degenerate {
            op: "mine_estimate",
            details: "need at least two samples".into(),
        });
    }
    if net.in_dim() != xs.cols() + ys.cols() || net.out_dim() != 1 {
        return Err(Error::Shape {
            op: "mine_estimate",
            details: format!(
                "network maps {} -> {}, samples need {} -> 1",
                net.in_dim(),
                net.out_dim(),
                xs.cols() + ys.cols()
            ),
        });
    }

    let pair_rows = |x_idx: &[usize], y_idx: &[usize]| -> Result<Tensor> {
        let rows: Vec<Vec<f64>> = x_idx
            .iter()
            .zip(y_idx)
            .map(|(&i, &j)| {
                let mut row = xs.row(i).to_vec();
                row.extend_from_slice(ys.row(j));
                row
            })
            .collect();
        Tensor::from_rows(&rows)
    };

    let mut optimizer = {
        let params: Vec<&Tensor> = net.named_params("").iter().map(|(_, t)| *t).collect();
        Adam::new(AdamConfig::with_lr(config.learning_rate), &params)
    };
    let mut ema: Option<f64> = None;
    for _ in 0..config.train_steps {
        let joint_idx: Vec<usize> = (0..config.batch).map(|_| rng.gen_range(0..n)).collect();
        let marginal_y: Vec<usize> = (0..config.batch).map(|_| rng.gen_range(0..n)).collect();
        let joint_batch = pair_rows(&joint_idx, &joint_idx)?;
        let marginal_batch = pair_rows(&joint_idx, &marginal_y)?;

        // Update the moving average with the current batch partition estimate
        // before taking the gradient against it.
        let t_marginal = net.forward(&marginal_batch)?;
        let batch_partition =
            t_marginal.data().iter().map(|t| t.exp()).sum::<f64>() / config.batch as f64;
        if !batch_partition.is_finite() {
            return Err(Error::NonFinite("partition estimate diverged".into()));
        }
        let next = match ema {
            None => batch_partition,
            Some(prev) => {
                config.ema_rate * prev + (1.0 - config.ema_rate) * batch_partition
            }
        };
        ema = Some(next);

        let mut tape = Tape::new();
        let params = net.register(&mut tape);
        let joint_id = tape.leaf(&joint_batch);
        let marginal_id = tape.leaf(&marginal_batch);
        let loss = mine_loss_graph(&mut tape, net, &params, joint_id, marginal_id, next)?;
        if !tape.value_scalar(loss).is_finite() {
            return Err(Error::NonFinite("training loss diverged".into()));
        }
        tape.backward(loss)?;
        let grads: Vec<Vec<f64>> = params.iter().map(|&p| tape.grad(p).to_vec()).collect();
        let grad_refs: Vec<&[f64]> = grads.iter().map(|g| g.as_slice()).collect();
        optimizer.step(net.params_mut(), &grad_refs)?;
    }

    let all: Vec<usize> = (0..n).collect();
    let mut permuted = all.clone();
    permuted.shuffle(rng);
    let t_joint = net.forward(&pair_rows(&all, &all)?)?;
    let t_marginal = net.forward(&pair_rows(&all, &permuted)?)?;
    let mean_joint = t_joint.data().iter().sum::<f64>() / n as f64;
    let max = t_marginal.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_mean_exp = max
        + (t_marginal.data().iter().map(|t| (t - max).exp()).sum::<f64>() / n as f64).ln();
    let estimate = mean_joint - log_mean_exp;
    if !estimate.is_finite() {
        return Err(Error::NonFinite(format!("estimate {estimate}")));
    }
    Ok(estimate)
}

/// Samples `(x, y)` with x ~ N(0,1) and y = rho x + sqrt(1 - rho^2) noise,
/// whose mutual information is `-log(1 - rho^2) / 2`.
pub fn correlated_gaussian_pairs(
    n: usize,
    rho: f64,
    rng: &mut ChaCha12Rng,
) -> Result<(Tensor, Tensor)> {
    if n == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    if !rho.is_finite() || rho.abs() > 1.0 {
        return Err(Error::Config(format!("correlation must lie in [-1, 1], got {rho}")));
    }
    let normal = rand_distr::StandardNormal;
    let scale = (1.0 - rho * rho).sqrt();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.sample(normal);
        let eps: f64 = rng.sample(normal);
        xs.push(x);
        ys.push(rho * x + scale * eps);
    }
    Ok((Tensor::from_vec(n, 1, xs)?, Tensor::from_vec(n, 1, ys)?))
}
