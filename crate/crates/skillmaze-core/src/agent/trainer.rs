//! The training loop: skill-conditioned collection, intrinsic rewards, and
//! deterministic-policy updates.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::env::{rollout, DownstreamTask, Maze, Point, Transition};
use crate::nn::{Adam, AdamConfig, Mlp, MlpSpec, Tape, Tensor};
use crate::skills::{
    becl_loss, becl_loss_graph, becl_reward, becl_reward_queries, diayn_loss, diayn_loss_graph,
    diayn_reward, entropy_reward, ContrastiveBatch, RewardMethod, SkillSpace,
};
use crate::{Error, Result};

use super::actor_critic::{assemble_inputs, Actor, Critic};
use super::config::TrainConfig;
use super::metrics::{write_record, MetricsRecord};
use super::replay::{ReplayBuffer, SegmentBatch};

/// Resampling attempts before giving up on a batch with two distinct skills.
const BATCH_RETRIES: usize = 32;

/// A skill-conditioned actor-critic with a pluggable intrinsic reward.
///
/// Pretraining collects whole episodes under freshly sampled skills and then
/// pays off one update per `update_frequency` frames (once `seed_frames` have
/// been collected). Each update runs, in order: the representation step
/// (contrastive encoder or skill discriminator), intrinsic reward computation
/// with the just-updated representation, the n-step critic step, the
/// deterministic policy step, and the EMA move of the target critic.
pub struct Agent {
    config: TrainConfig,
    method: RewardMethod,
    skill_space: SkillSpace,
    actor: Actor,
    critic: Critic,
    encoder: Option<Mlp>,
    discriminator: Option<Mlp>,
    opt_actor: Adam,
    opt_critic: Adam,
    opt_repr: Option<Adam>,
    buffer: ReplayBuffer,
    rng: ChaCha12Rng,
    frame: usize,
    episode: u64,
    update_index: u64,
}

impl Agent {
    /// Builds a fresh agent; network init order (actor, critic, then the
    /// representation net) is fixed so a seed pins every weight.
    pub fn new(config: TrainConfig, method: RewardMethod) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(config.rng_seed);
        let actor = Actor::new(
            config.skill_dim,
            config.hidden_dim,
            config.exploration_stddev,
            config.stddev_clip,
            &mut rng,
        )?;
        let critic = Critic::new(config.skill_dim, config.hidden_dim, config.ema_rate, &mut rng)?;
        let encoder = match method {
            RewardMethod::Becl => Some(Mlp::new(
                MlpSpec::with_unit_norm(vec![
                    2,
                    config.hidden_dim,
                    config.hidden_dim,
                    config.feature_dim,
                ]),
                &mut rng,
            )?),
            _ => None,
        };
        let discriminator = match method {
            RewardMethod::Diayn => Some(Mlp::new(
                MlpSpec::new(vec![
                    2,
                    config.disc_hidden_dim,
                    config.disc_hidden_dim,
                    config.skill_dim,
                ]),
                &mut rng,
            )?),
            _ => None,
        };
        let adam = |net: &Mlp| {
            let params: Vec<&Tensor> = net.named_params("").into_iter().map(|(_, t)| t).collect();
            Adam::new(AdamConfig::with_lr(config.learning_rate), &params)
        };
        let opt_actor = adam(&actor.net);
        let opt_critic = adam(&critic.online);
        let opt_repr = encoder.as_ref().or(discriminator.as_ref()).map(&adam);
        let buffer = ReplayBuffer::new(config.buffer_capacity, config.skill_dim)?;
        let skill_space = SkillSpace::new(config.skill_dim)?;
        Ok(Self {
            config,
            method,
            skill_space,
            actor,
            critic,
            encoder,
            discriminator,
            opt_actor,
            opt_critic,
            opt_repr,
            buffer,
            rng,
            frame: 0,
            episode: 0,
            update_index: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn method(&self) -> RewardMethod {
        self.method
    }

    pub fn actor(&self) -> &Actor {
        &self.actor
    }

    pub fn critic(&self) -> &Critic {
        &self.critic
    }

    pub fn encoder(&self) -> Option<&Mlp> {
        self.encoder.as_ref()
    }

    pub fn discriminator(&self) -> Option<&Mlp> {
        self.discriminator.as_ref()
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Environment frames collected so far in pretraining.
    pub fn frames(&self) -> usize {
        self.frame
    }

    /// Runs intrinsic-reward pretraining until `pretrain_frames` frames have
    /// been collected, streaming metrics records to `out`.
    pub fn pretrain(&mut self, maze: &mut Maze, out: &mut dyn Write) -> Result<()> {
        while self.frame < self.config.pretrain_frames {
            let skill = self.skill_space.sample(&mut self.rng);
            let episode = self.episode;
            let traj = self.run_episode(maze, skill, episode, None, true)?;
            let start = self.frame;
            self.frame += traj.len();
            self.episode += 1;
            self.buffer.push_episode(skill, traj)?;
            write_record(
                out,
                &MetricsRecord::Episode { frame: self.frame, episode, skill, episodic_return: None },
            )?;
            for f in start + 1..=self.frame {
                if f >= self.config.seed_frames && f % self.config.update_frequency == 0 {
                    let record = self.pretrain_update(f)?;
                    write_record(out, &record)?;
                }
            }
        }
        Ok(())
    }

    /// Adapts the frozen-skill policy to a downstream task for
    /// `finetune_frames` frames on a fresh buffer of extrinsic-reward
    /// episodes. Frame and episode counters in the emitted records restart
    /// at zero for the finetuning phase.
    pub fn finetune(
        &mut self,
        maze: &mut Maze,
        task: &DownstreamTask,
        skill: usize,
        out: &mut dyn Write,
    ) -> Result<()> {
        if skill >= self.config.skill_dim {
            return Err(Error::Config(format!(
                "finetune skill {skill} out of range for {} skills",
                self.config.skill_dim
            )));
        }
        let mut buffer = ReplayBuffer::new(self.config.buffer_capacity, self.config.skill_dim)?;
        let mut frame = 0usize;
        let mut episode = 0u64;
        while frame < self.config.finetune_frames {
            let traj = self.run_episode(maze, skill, episode, Some(task), true)?;
            let episodic_return: f64 = traj.iter().map(|t| t.reward).sum();
            let start = frame;
            frame += traj.len();
            buffer.push_episode(skill, traj)?;
            write_record(
                out,
                &MetricsRecord::Episode {
                    frame,
                    episode,
                    skill,
                    episodic_return: Some(episodic_return),
                },
            )?;
            episode += 1;
            for f in start + 1..=frame {
                if f >= self.config.seed_frames && f % self.config.update_frequency == 0 {
                    let segments = buffer.sample_plain_segments(
                        self.config.batch_size,
                        self.config.n_step,
                        &mut self.rng,
                    )?;
                    let rewards: Vec<Vec<f64>> =
                        segments.iter().map(|s| s.iter().map(|t| t.reward).collect()).collect();
                    let reward_count: usize = rewards.iter().map(Vec::len).sum();
                    let reward_sum: f64 = rewards.iter().flatten().sum();
                    let loss_critic = self.critic_update(&segments, &rewards)?;
                    let loss_actor = self.actor_update(&segments)?;
                    self.critic.ema_update();
                    let record = MetricsRecord::Update {
                        frame: f,
                        episode,
                        update_index: self.update_index,
                        loss_critic,
                        loss_actor,
                        loss_repr: 0.0,
                        loss_repr_pre: None,
                        mean_intrinsic_reward: None,
                        mean_extrinsic_reward: Some(reward_sum / reward_count as f64),
                        reward_min: None,
                        reward_max: None,
                        reward_loss_gap: None,
                        per_skill_mean_reward: None,
                    };
                    self.update_index += 1;
                    write_record(out, &record)?;
                }
            }
        }
        Ok(())
    }

    /// Rolls one episode under the current policy; training passes
    /// `explore = true`, evaluation rollouts for plotting pass `false`.
    pub fn run_episode(
        &mut self,
        maze: &mut Maze,
        skill: usize,
        episode: u64,
        task: Option<&DownstreamTask>,
        explore: bool,
    ) -> Result<Vec<Transition>> {
        let actor = &self.actor;
        rollout(
            maze,
            &mut |state, z, rng| actor.act(state, z, explore, rng),
            skill,
            episode,
            self.config.episode_length,
            task,
            &mut self.rng,
        )
    }

    /// One pretraining update at frame `frame`.
    fn pretrain_update(&mut self, frame: usize) -> Result<MetricsRecord> {
        let batch = self.sample_paired_batch()?;
        let (loss_repr_pre, loss_repr) = self.representation_update(&batch.contrastive)?;
        let rewards = self.intrinsic_rewards(&batch)?;

        let anchor_rewards: Vec<f64> = rewards.iter().map(|r| r[0]).collect();
        let b = anchor_rewards.len();
        let mean_intrinsic = anchor_rewards.iter().sum::<f64>() / b as f64;
        let mut reward_min = f64::INFINITY;
        let mut reward_max = f64::NEG_INFINITY;
        for &r in rewards.iter().flatten() {
            reward_min = reward_min.min(r);
            reward_max = reward_max.max(r);
        }
        let reward_loss_gap = (self.method == RewardMethod::Becl).then(|| {
            let mean_neg_log =
                anchor_rewards.iter().map(|r| -r.ln()).sum::<f64>() / b as f64;
            (mean_neg_log - loss_repr).abs()
        });
        let mut sums = vec![0.0; self.config.skill_dim];
        let mut counts = vec![0usize; self.config.skill_dim];
        for (i, &z) in batch.contrastive.skills.iter().enumerate() {
            sums[z] += anchor_rewards[i];
            counts[z] += 1;
        }
        let per_skill: Vec<Option<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect();

        let loss_critic = self.critic_update(&batch.segments, &rewards)?;
        let loss_actor = self.actor_update(&batch.segments)?;
        self.critic.ema_update();

        let record = MetricsRecord::Update {
            frame,
            episode: self.episode,
            update_index: self.update_index,
            loss_critic,
            loss_actor,
            loss_repr,
            loss_repr_pre,
            mean_intrinsic_reward: Some(mean_intrinsic),
            mean_extrinsic_reward: None,
            reward_min: Some(reward_min),
            reward_max: Some(reward_max),
            reward_loss_gap,
            per_skill_mean_reward: Some(per_skill),
        };
        self.update_index += 1;
        Ok(record)
    }

    /// Draws a paired batch, retrying until it spans two distinct skills when
    /// the contrastive method needs negatives.
    fn sample_paired_batch(&mut self) -> Result<SegmentBatch> {
        for _ in 0..BATCH_RETRIES {
            let batch = self.buffer.sample_segments(
                self.config.batch_size,
                self.config.n_step,
                self.config.pair_mode,
                self.config.min_pair_gap,
                &mut self.rng,
            )?;
            if self.method != RewardMethod::Becl {
                return Ok(batch);
            }
            let first = batch.contrastive.skills[0];
            if batch.contrastive.skills.iter().any(|&z| z != first) {
                return Ok(batch);
            }
        }
        Err(Error::Degenerate {
            op: "sample_paired_batch",
            details: format!(
                "no batch with two distinct skills in {BATCH_RETRIES} draws; \
                 the buffer is dominated by one skill"
            ),
        })
    }

    /// Steps the representation net on the paired batch. Returns the loss
    /// before the step and the loss re-evaluated after it; the entropy
    /// method has no representation and reports `(None, 0.0)`.
    fn representation_update(&mut self, batch: &ContrastiveBatch) -> Result<(Option<f64>, f64)> {
        match self.method {
            RewardMethod::Becl => {
                let encoder = self.encoder.as_mut().expect("contrastive agent has an encoder");
                let opt = self.opt_repr.as_mut().expect("encoder optimizer exists");
                let xa_t = batch.anchor_tensor();
                let xp_t = batch.positive_tensor();
                let mut tape = Tape::new();
                let params = encoder.register(&mut tape);
                let xa = tape.leaf(&xa_t);
                let xp = tape.leaf(&xp_t);
                let fa = encoder.forward_on(&mut tape, &params, xa)?;
                let fp = encoder.forward_on(&mut tape, &params, xp)?;
                let terms = becl_loss_graph(&mut tape, fa, fp, &batch.skills, self.config.kappa)?;
                let pre = tape.value_scalar(terms.loss);
                tape.backward(terms.loss)?;
                let grads: Vec<&[f64]> = params.iter().map(|&p| tape.grad(p)).collect();
                opt.step(encoder.params_mut(), &grads)?;
                let post = becl_loss(
                    &encoder.forward(&xa_t)?,
                    &encoder.forward(&xp_t)?,
                    &batch.skills,
                    self.config.kappa,
                )?;
                Ok((Some(pre), post))
            }
            RewardMethod::Diayn => {
                let disc =
                    self.discriminator.as_mut().expect("discriminator agent has a classifier");
                let opt = self.opt_repr.as_mut().expect("discriminator optimizer exists");
                let states = both_halves_tensor(batch)?;
                let mut labels = batch.skills.clone();
                labels.extend_from_slice(&batch.skills);
                let mut tape = Tape::new();
                let params = disc.register(&mut tape);
                let x = tape.leaf(&states);
                let logits = disc.forward_on(&mut tape, &params, x)?;
                let loss = diayn_loss_graph(&mut tape, logits, &labels)?;
                let pre = tape.value_scalar(loss);
                tape.backward(loss)?;
                let grads: Vec<&[f64]> = params.iter().map(|&p| tape.grad(p)).collect();
                opt.step(disc.params_mut(), &grads)?;
                let post = diayn_loss(&disc.forward(&states)?, &labels)?;
                Ok((Some(pre), post))
            }
            RewardMethod::Entropy => Ok((None, 0.0)),
        }
    }

    /// Intrinsic rewards for every arrival state of every segment, aligned
    /// with `batch.segments`, computed with the just-updated representation.
    fn intrinsic_rewards(&self, batch: &SegmentBatch) -> Result<Vec<Vec<f64>>> {
        let segments = &batch.segments;
        match self.method {
            RewardMethod::Becl => {
                let encoder = self.encoder.as_ref().expect("contrastive agent has an encoder");
                let fa = encoder.forward(&batch.contrastive.anchor_tensor())?;
                let fp = encoder.forward(&batch.contrastive.positive_tensor())?;
                let kappa = self.config.kappa;
                let anchor_r = becl_reward(&fa, &fp, &batch.contrastive.skills, kappa)?;
                let mut tail_rows: Vec<Vec<f64>> = Vec::new();
                let mut tail_pair: Vec<usize> = Vec::new();
                for (i, seg) in segments.iter().enumerate() {
                    debug_assert_eq!(seg[0].next_state, batch.contrastive.anchors[i]);
                    for t in &seg[1..] {
                        tail_rows.push(t.next_state.to_vec());
                        tail_pair.push(i);
                    }
                }
                let tail_r = if tail_rows.is_empty() {
                    Vec::new()
                } else {
                    let fq = encoder.forward(&Tensor::from_rows(&tail_rows)?)?;
                    becl_reward_queries(
                        &fq,
                        &tail_pair,
                        &fa,
                        &fp,
                        &batch.contrastive.skills,
                        kappa,
                    )?
                };
                let mut out = Vec::with_capacity(segments.len());
                let mut cursor = 0;
                for (i, seg) in segments.iter().enumerate() {
                    let mut r = Vec::with_capacity(seg.len());
                    r.push(anchor_r[i]);
                    for _ in 1..seg.len() {
                        r.push(tail_r[cursor]);
                        cursor += 1;
                    }
                    out.push(r);
                }
                Ok(out)
            }
            RewardMethod::Diayn => {
                let disc =
                    self.discriminator.as_ref().expect("discriminator agent has a classifier");
                let mut rows: Vec<Vec<f64>> = Vec::new();
                let mut skills: Vec<usize> = Vec::new();
                for seg in segments {
                    for t in seg {
                        rows.push(t.next_state.to_vec());
                        skills.push(t.skill);
                    }
                }
                let flat = diayn_reward(
                    disc,
                    &Tensor::from_rows(&rows)?,
                    &skills,
                    self.config.skill_dim,
                )?;
                let mut out = Vec::with_capacity(segments.len());
                let mut cursor = 0;
                for seg in segments {
                    out.push(flat[cursor..cursor + seg.len()].to_vec());
                    cursor += seg.len();
                }
                Ok(out)
            }
            RewardMethod::Entropy => {
                let references = batch.contrastive.positive_tensor();
                segments
                    .iter()
                    .map(|seg| {
                        seg.iter()
                            .map(|t| entropy_reward(&t.next_state, &references, self.config.knn_k))
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// n-step TD step on the online critic; returns the MSE loss.
    ///
    /// `rewards[i][j]` is the reward at segment i's j-th arrival state. The
    /// bootstrap always sits at the segment's last arrival state, so targets
    /// never cross an episode boundary.
    fn critic_update(
        &mut self,
        segments: &[Vec<Transition>],
        rewards: &[Vec<f64>],
    ) -> Result<f64> {
        let gamma = self.config.discount;
        let b = segments.len();
        let skills: Vec<usize> = segments.iter().map(|s| s[0].skill).collect();
        let boot_states: Vec<Point> = segments.iter().map(|s| s.last().unwrap().next_state).collect();
        let boot_actions = self.actor.mean_actions(&boot_states, &skills)?;
        let q_bar = self.critic.target_q(&boot_states, &skills, &boot_actions)?;
        let mut targets = Vec::with_capacity(b);
        for (i, seg) in segments.iter().enumerate() {
            debug_assert_eq!(seg.len(), rewards[i].len());
            let mut acc = 0.0;
            let mut weight = 1.0;
            for &r in &rewards[i] {
                acc += weight * r;
                weight *= gamma;
            }
            targets.push(acc + weight * q_bar[i]);
        }

        let first_states: Vec<Point> = segments.iter().map(|s| s[0].state).collect();
        let first_actions: Vec<Point> = segments.iter().map(|s| s[0].action).collect();
        let x = assemble_inputs(&first_states, &skills, self.config.skill_dim, Some(&first_actions))?;
        let mut tape = Tape::new();
        let params = self.critic.online.register(&mut tape);
        let xid = tape.leaf(&x);
        let q = self.critic.online.forward_on(&mut tape, &params, xid)?;
        let y = tape.leaf(&Tensor::from_vec(b, 1, targets)?);
        let diff = tape.sub(q, y)?;
        let sq = tape.mul_elem(diff, diff)?;
        let loss = tape.mean(sq);
        let value = tape.value_scalar(loss);
        tape.backward(loss)?;
        let grads: Vec<&[f64]> = params.iter().map(|&p| tape.grad(p)).collect();
        self.opt_critic.step(self.critic.online.params_mut(), &grads)?;
        Ok(value)
    }

    /// Deterministic policy-gradient step: maximize the online critic's value
    /// of the actor's own actions at the segment start states. Returns the
    /// loss `-mean Q`.
    fn actor_update(&mut self, segments: &[Vec<Transition>]) -> Result<f64> {
        let skills: Vec<usize> = segments.iter().map(|s| s[0].skill).collect();
        let first_states: Vec<Point> = segments.iter().map(|s| s[0].state).collect();
        let x = assemble_inputs(&first_states, &skills, self.config.skill_dim, None)?;
        let mut tape = Tape::new();
        let actor_params = self.actor.net.register(&mut tape);
        let critic_params = self.critic.online.register(&mut tape);
        let xid = tape.leaf(&x);
        let actions = self.actor.actions_on(&mut tape, &actor_params, xid)?;
        let sa = tape.concat_cols(xid, actions)?;
        let q = self.critic.online.forward_on(&mut tape, &critic_params, sa)?;
        let mean_q = tape.mean(q);
        let loss = tape.scale(mean_q, -1.0);
        let value = tape.value_scalar(loss);
        tape.backward(loss)?;
        let grads: Vec<&[f64]> = actor_params.iter().map(|&p| tape.grad(p)).collect();
        self.opt_actor.step(self.actor.net.params_mut(), &grads)?;
        Ok(value)
    }

    /// All network weights keyed for a checkpoint file.
    pub fn checkpoint_entries(&self) -> BTreeMap<String, Tensor> {
        let mut map = BTreeMap::new();
        let mut put = |entries: Vec<(String, &Tensor)>| {
            for (k, v) in entries {
                map.insert(k, v.clone());
            }
        };
        put(self.actor.net.named_params("actor."));
        put(self.critic.online.named_params("critic."));
        put(self.critic.target.named_params("target."));
        if let Some(e) = &self.encoder {
            put(e.named_params("encoder."));
        }
        if let Some(d) = &self.discriminator {
            put(d.named_params("discriminator."));
        }
        map
    }

    /// Restores all network weights from a checkpoint map; the agent must
    /// have been built with the same config and method.
    pub fn load_entries(&mut self, map: &BTreeMap<String, Tensor>) -> Result<()> {
        self.actor.net.load_from(map, "actor.")?;
        self.critic.online.load_from(map, "critic.")?;
        self.critic.target.load_from(map, "target.")?;
        if let Some(e) = self.encoder.as_mut() {
            e.load_from(map, "encoder.")?;
        }
        if let Some(d) = self.discriminator.as_mut() {
            d.load_from(map, "discriminator.")?;
        }
        Ok(())
    }
}

/// Anchor states stacked over positive states as one `2B x 2` tensor.
fn both_halves_tensor(batch: &ContrastiveBatch) -> Result<Tensor> {
    let rows: Vec<Vec<f64>> = batch
        .anchors
        .iter()
        .chain(batch.positives.iter())
        .map(|p| p.to_vec())
        .collect();
    Tensor::from_rows(&rows)
}
