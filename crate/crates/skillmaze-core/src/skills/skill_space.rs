//! Discrete skill spaces.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the two states of a contrastive pair are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// The two states come from distinct episodes with the same skill.
    CrossTrajectory,
    /// The two states come from one episode, at least a configured number of
    /// steps apart.
    SameTrajectoryFar,
}

impl PairMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cross_trajectory" => Some(Self::CrossTrajectory),
            "same_trajectory_far" => Some(Self::SameTrajectoryFar),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::CrossTrajectory => "cross_trajectory",
            Self::SameTrajectoryFar => "same_trajectory_far",
        }
    }
}

/// A uniform categorical space of `m` skills with one-hot embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkillSpace {
    m: usize,
}

impl SkillSpace {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("skill space needs at least one skill".into()));
        }
        Ok(Self { m })
    }

    /// Number of skills.
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Uniform draw of a skill index.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        rng.gen_range(0..self.m)
    }

    /// One-hot embedding of a skill.
    pub fn one_hot(&self, skill: usize) -> Vec<f64> {
        debug_assert!(skill < self.m);
        let mut v = vec![0.0; self.m];
        v[skill] = 1.0;
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn single_skill_space_always_samples_zero() {
        let s = SkillSpace::new(1).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(s.sample(&mut rng), 0);
        }
    }

    #[test]
    fn empty_space_is_rejected() {
        assert!(SkillSpace::new(0).is_err());
    }

    #[test]
    fn sampling_is_uniform_within_three_sigma() {
        let m = 10;
        let n = 100_000;
        let s = SkillSpace::new(m).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mut counts = vec![0usize; m];
        for _ in 0..n {
            counts[s.sample(&mut rng)] += 1;
        }
        let p = 1.0 / m as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (k, &c) in counts.iter().enumerate() {
            let dev = (c as f64 - n as f64 * p).abs();
            assert!(dev < 3.0 * sigma, "skill {k}: count {c} deviates {dev:.1} (3 sigma {:.1})", 3.0 * sigma);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let s = SkillSpace::new(7).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..50).map(|_| s.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn one_hot_is_a_standard_basis_vector() {
        let s = SkillSpace::new(4).unwrap();
        assert_eq!(s.one_hot(2), vec![0.0, 0.0, 1.0, 0.0]);
    }
}
