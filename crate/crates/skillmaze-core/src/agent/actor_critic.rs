//! Skill-conditioned actor and critic networks.

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::env::Point;
use crate::nn::{Mlp, MlpSpec, Tape, Tensor, TensorId};
use crate::{Error, Result};

/// Rows of `[x, y, one_hot(skill), (ax, ay)?]` — the shared input layout of
/// actor (without actions) and critic (with actions).
pub fn assemble_inputs(
    states: &[Point],
    skills: &[usize],
    skill_dim: usize,
    actions: Option<&[Point]>,
) -> Result<Tensor> {
    if states.len() != skills.len() {
        return Err(Error::Shape {
            op: "assemble_inputs",
            details: format!("{} states but {} skills", states.len(), skills.len()),
        });
    }
    if let Some(a) = actions {
        if a.len() != states.len() {
            return Err(Error::Shape {
                op: "assemble_inputs",
                details: format!("{} states but {} actions", states.len(), a.len()),
            });
        }
    }
    let cols = 2 + skill_dim + if actions.is_some() { 2 } else { 0 };
    let mut data = Vec::with_capacity(states.len() * cols);
    for (i, (s, &z)) in states.iter().zip(skills).enumerate() {
        if z >= skill_dim {
            return Err(Error::Config(format!(
                "skill {z} out of range for skill_dim {skill_dim}"
            )));
        }
        data.push(s[0]);
        data.push(s[1]);
        for k in 0..skill_dim {
            data.push(if k == z { 1.0 } else { 0.0 });
        }
        if let Some(a) = actions {
            data.push(a[i][0]);
            data.push(a[i][1]);
        }
    }
    Tensor::from_vec(states.len(), cols, data)
}

/// Deterministic tanh policy with clipped-Gaussian exploration noise.
#[derive(Debug, Clone)]
pub struct Actor {
    pub net: Mlp,
    pub skill_dim: usize,
    pub exploration_stddev: f64,
    pub stddev_clip: f64,
}

impl Actor {
    pub fn new(
        skill_dim: usize,
        hidden_dim: usize,
        exploration_stddev: f64,
        stddev_clip: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<Self> {
        let net = Mlp::new(MlpSpec::new(vec![2 + skill_dim, hidden_dim, hidden_dim, 2]), rng)?;
        Ok(Self { net, skill_dim, exploration_stddev, stddev_clip })
    }

    /// Deterministic actions for a batch of (state, skill) rows.
    pub fn mean_actions(&self, states: &[Point], skills: &[usize]) -> Result<Vec<Point>> {
        let x = assemble_inputs(states, skills, self.skill_dim, None)?;
        let y = self.net.forward(&x)?;
        Ok((0..y.rows()).map(|i| [y.get(i, 0).tanh(), y.get(i, 1).tanh()]).collect())
    }

    /// One action; with `explore`, Gaussian noise is clipped to
    /// `±stddev_clip`, added, and the result re-clipped to `[-1, 1]`.
    pub fn act(
        &self,
        state: Point,
        skill: usize,
        explore: bool,
        rng: &mut ChaCha12Rng,
    ) -> Result<Point> {
        let mut a = self.mean_actions(&[state], &[skill])?[0];
        if explore && self.exploration_stddev > 0.0 {
            let normal = Normal::new(0.0, self.exploration_stddev)
                .map_err(|e| Error::Config(format!("bad exploration stddev: {e}")))?;
            for coord in a.iter_mut() {
                let noise: f64 = normal.sample(rng);
                let noise = noise.clamp(-self.stddev_clip, self.stddev_clip);
                *coord = (*coord + noise).clamp(-1.0, 1.0);
            }
        }
        Ok(a)
    }

    /// Tanh-squashed actions on the tape for the policy-gradient step.
    pub fn actions_on(&self, tape: &mut Tape, params: &[TensorId], x: TensorId) -> Result<TensorId> {
        let pre = self.net.forward_on(tape, params, x)?;
        Ok(tape.tanh(pre))
    }
}

/// Online Q network plus its EMA target copy.
#[derive(Debug, Clone)]
pub struct Critic {
    pub online: Mlp,
    pub target: Mlp,
    pub skill_dim: usize,
    pub ema_rate: f64,
}

impl Critic {
    pub fn new(
        skill_dim: usize,
        hidden_dim: usize,
        ema_rate: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<Self> {
        let online = Mlp::new(
            MlpSpec::new(vec![2 + skill_dim + 2, hidden_dim, hidden_dim, 1]),
            rng,
        )?;
        let target = online.clone();
        Ok(Self { online, target, skill_dim, ema_rate })
    }

    /// Target-net Q values for (state, skill, action) rows, detached.
    pub fn target_q(
        &self,
        states: &[Point],
        skills: &[usize],
        actions: &[Point],
    ) -> Result<Vec<f64>> {
        let x = assemble_inputs(states, skills, self.skill_dim, Some(actions))?;
        let q = self.target.forward(&x)?;
        Ok(q.data().to_vec())
    }

    /// Online-net Q values, detached (for logging).
    pub fn online_q(
        &self,
        states: &[Point],
        skills: &[usize],
        actions: &[Point],
    ) -> Result<Vec<f64>> {
        let x = assemble_inputs(states, skills, self.skill_dim, Some(actions))?;
        let q = self.online.forward(&x)?;
        Ok(q.data().to_vec())
    }

    /// `target ← (1 − τ)·target + τ·online`, elementwise.
    pub fn ema_update(&mut self) {
        let tau = self.ema_rate;
        let online: Vec<Tensor> = self
            .online
            .named_params("")
            .into_iter()
            .map(|(_, t)| t.clone())
            .collect();
        for (dst, src) in self.target.params_mut().into_iter().zip(&online) {
            for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d = (1.0 - tau) * *d + tau * s;
            }
        }
    }
}
