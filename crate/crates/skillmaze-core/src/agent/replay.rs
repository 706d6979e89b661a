//! Episode-granular replay storage and batch sampling.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::env::Transition;
use crate::skills::{ContrastiveBatch, PairMode};
use crate::{Error, Result};

/// One stored episode; all transitions share a skill and an episode id.
#[derive(Debug, Clone)]
struct StoredEpisode {
    id: u64,
    skill: usize,
    transitions: Vec<Transition>,
}

/// An n-step slice of one stored episode, plus the matching positive state
/// used for contrastive pairing.
#[derive(Debug, Clone)]
pub struct SegmentBatch {
    /// Per segment: the consecutive transitions `t .. t+n'` (`n' >= 1`,
    /// truncated at the episode end).
    pub segments: Vec<Vec<Transition>>,
    /// The paired contrastive batch: `anchors[i]` is segment i's first
    /// arrival state, `positives[i]` the partner state of the same skill.
    pub contrastive: ContrastiveBatch,
}

/// FIFO transition store with whole-episode granularity.
///
/// Capacity counts transitions; eviction always removes the oldest episode
/// in full, so cross-trajectory pairing never sees partial episodes.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    skill_dim: usize,
    transitions_stored: usize,
    episodes: VecDeque<StoredEpisode>,
    /// Episode ids per skill, oldest first (parallel FIFO views).
    by_skill: Vec<VecDeque<u64>>,
    next_id: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, skill_dim: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be >= 1".into()));
        }
        if skill_dim == 0 {
            return Err(Error::Config("skill_dim must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            skill_dim,
            transitions_stored: 0,
            episodes: VecDeque::new(),
            by_skill: vec![VecDeque::new(); skill_dim],
            next_id: 0,
        })
    }

    /// Transitions currently stored.
    pub fn len(&self) -> usize {
        self.transitions_stored
    }

    pub fn is_empty(&self) -> bool {
        self.transitions_stored == 0
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn episodes_with_skill(&self, skill: usize) -> usize {
        self.by_skill.get(skill).map_or(0, |v| v.len())
    }

    /// Stores one complete episode and returns its id. Evicts oldest
    /// episodes while over capacity.
    pub fn push_episode(&mut self, skill: usize, transitions: Vec<Transition>) -> Result<u64> {
        if skill >= self.skill_dim {
            return Err(Error::Buffer(format!(
                "skill {skill} out of range for skill_dim {}",
                self.skill_dim
            )));
        }
        if transitions.is_empty() {
            return Err(Error::Buffer("refusing to store an empty episode".into()));
        }
        if transitions.len() > self.capacity {
            return Err(Error::Buffer(format!(
                "episode of {} transitions exceeds capacity {}",
                transitions.len(),
                self.capacity
            )));
        }
        if transitions.iter().any(|t| t.skill != skill) {
            return Err(Error::Buffer("episode contains a mismatched skill tag".into()));
        }
        let id = self.next_id;
        self.next_id += 1;
        self.transitions_stored += transitions.len();
        self.episodes.push_back(StoredEpisode { id, skill, transitions });
        self.by_skill[skill].push_back(id);
        while self.transitions_stored > self.capacity {
            let old = self.episodes.pop_front().expect("over capacity implies non-empty");
            self.transitions_stored -= old.transitions.len();
            let front = self.by_skill[old.skill].pop_front();
            debug_assert_eq!(front, Some(old.id));
        }
        Ok(id)
    }

    fn episode_by_id(&self, id: u64) -> &StoredEpisode {
        let idx = self
            .episodes
            .binary_search_by_key(&id, |e| e.id)
            .expect("episode ids in the index are live");
        &self.episodes[idx]
    }

    /// Anchor positions in an episode of `len` steps that have a partner at
    /// step distance >= `min_gap`: all of `0..len` except the dead zone
    /// `[len-min_gap, min_gap)` (non-empty only when `2*min_gap > len`).
    fn valid_anchor_count(len: usize, min_gap: usize) -> usize {
        len.saturating_sub((2 * min_gap).saturating_sub(len))
    }

    /// Eligible episode indices with their anchor-position weights.
    fn eligible_indices(&self, mode: PairMode, min_gap: usize) -> Vec<(usize, usize)> {
        (0..self.episodes.len())
            .filter_map(|i| {
                let e = &self.episodes[i];
                let weight = match mode {
                    PairMode::CrossTrajectory => {
                        if self.by_skill[e.skill].len() >= 2 {
                            e.transitions.len()
                        } else {
                            0
                        }
                    }
                    PairMode::SameTrajectoryFar => {
                        Self::valid_anchor_count(e.transitions.len(), min_gap)
                    }
                };
                (weight > 0).then_some((i, weight))
            })
            .collect()
    }

    /// Draws `batch_pairs` anchor segments with matched positives.
    ///
    /// Anchors are uniform over the transitions of eligible episodes. In
    /// cross-trajectory mode the positive comes from a different episode of
    /// the same skill (uniform episode, uniform transition); in
    /// same-trajectory mode it comes from the anchor's episode at step
    /// distance >= `min_gap`. Anchor segments run up to `n_step` transitions,
    /// truncated at the episode end.
    pub fn sample_segments(
        &self,
        batch_pairs: usize,
        n_step: usize,
        mode: PairMode,
        min_gap: usize,
        rng: &mut ChaCha12Rng,
    ) -> Result<SegmentBatch> {
        if batch_pairs == 0 || n_step == 0 {
            return Err(Error::Buffer("batch_pairs and n_step must be >= 1".into()));
        }
        if mode == PairMode::SameTrajectoryFar && min_gap == 0 {
            return Err(Error::Buffer(
                "same-trajectory pairing needs min_gap >= 1".into(),
            ));
        }
        let eligible = self.eligible_indices(mode, min_gap);
        if eligible.is_empty() {
            return Err(Error::Buffer(match mode {
                PairMode::CrossTrajectory => format!(
                    "no skill has two stored episodes yet ({} episodes stored)",
                    self.episodes.len()
                ),
                PairMode::SameTrajectoryFar => format!(
                    "no stored episode admits a pair at step gap {min_gap}"
                ),
            }));
        }
        let mut prefix = Vec::with_capacity(eligible.len());
        let mut total = 0usize;
        for &(_, w) in &eligible {
            total += w;
            prefix.push(total);
        }

        let mut segments = Vec::with_capacity(batch_pairs);
        let mut anchors = Vec::with_capacity(batch_pairs);
        let mut positives = Vec::with_capacity(batch_pairs);
        let mut skills = Vec::with_capacity(batch_pairs);
        for _ in 0..batch_pairs {
            let u = rng.gen_range(0..total);
            let slot = prefix.partition_point(|&p| p <= u);
            let ep = &self.episodes[eligible[slot].0];
            let offset = if slot == 0 { u } else { u - prefix[slot - 1] };
            let len = ep.transitions.len();
            // Map the offset to an anchor index, skipping the dead zone in
            // same-trajectory mode.
            let t = match mode {
                PairMode::CrossTrajectory => offset,
                PairMode::SameTrajectoryFar => {
                    let dead = (2 * min_gap).saturating_sub(len);
                    if offset < len - min_gap.min(len) || dead == 0 {
                        offset
                    } else {
                        offset + dead
                    }
                }
            };

            let positive = match mode {
                PairMode::CrossTrajectory => {
                    let others = self.by_skill[ep.skill].len() - 1;
                    debug_assert!(others >= 1);
                    let mut pick = rng.gen_range(0..others);
                    let mut chosen = None;
                    for &id in &self.by_skill[ep.skill] {
                        if id == ep.id {
                            continue;
                        }
                        if pick == 0 {
                            chosen = Some(id);
                            break;
                        }
                        pick -= 1;
                    }
                    let other = self.episode_by_id(chosen.expect("pick < others"));
                    let j = rng.gen_range(0..other.transitions.len());
                    other.transitions[j].next_state
                }
                PairMode::SameTrajectoryFar => {
                    let left = (t + 1).saturating_sub(min_gap);
                    let right = len.saturating_sub(t + min_gap);
                    debug_assert!(left + right >= 1, "anchor mapping guarantees a partner");
                    let u2 = rng.gen_range(0..left + right);
                    let j = if u2 < left { u2 } else { t + min_gap + (u2 - left) };
                    ep.transitions[j].next_state
                }
            };

            let horizon = n_step.min(len - t);
            segments.push(ep.transitions[t..t + horizon].to_vec());
            anchors.push(ep.transitions[t].next_state);
            positives.push(positive);
            skills.push(ep.skill);
        }
        Ok(SegmentBatch {
            segments,
            contrastive: ContrastiveBatch { anchors, positives, skills },
        })
    }

    /// Draws `batch` anchor segments uniformly over all stored transitions,
    /// with no contrastive pairing — the sampler used when training on
    /// stored extrinsic rewards.
    pub fn sample_plain_segments(
        &self,
        batch: usize,
        n_step: usize,
        rng: &mut ChaCha12Rng,
    ) -> Result<Vec<Vec<Transition>>> {
        if batch == 0 || n_step == 0 {
            return Err(Error::Buffer("batch and n_step must be >= 1".into()));
        }
        if self.transitions_stored == 0 {
            return Err(Error::Buffer("cannot sample from an empty buffer".into()));
        }
        let mut prefix = Vec::with_capacity(self.episodes.len());
        let mut total = 0usize;
        for e in &self.episodes {
            total += e.transitions.len();
            prefix.push(total);
        }
        let mut segments = Vec::with_capacity(batch);
        for _ in 0..batch {
            let u = rng.gen_range(0..total);
            let slot = prefix.partition_point(|&p| p <= u);
            let ep = &self.episodes[slot];
            let t = if slot == 0 { u } else { u - prefix[slot - 1] };
            let horizon = n_step.min(ep.transitions.len() - t);
            segments.push(ep.transitions[t..t + horizon].to_vec());
        }
        Ok(segments)
    }
}
