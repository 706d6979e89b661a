//! Episode rollouts.

use rand_chacha::ChaCha12Rng;

use crate::Result;

use super::{DownstreamTask, Maze, Point};

/// One environment step, tagged with its skill, episode, and step index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: Point,
    pub action: Point,
    pub next_state: Point,
    /// Extrinsic reward at `next_state`; zero outside downstream tasks.
    pub reward: f64,
    pub skill: usize,
    pub episode: u64,
    pub step: usize,
}

/// Rolls one fixed-length episode from the maze start under `policy`.
///
/// The policy maps `(state, skill, rng)` to an action; any stochasticity
/// (exploration noise) must come from `rng`, so identical seeds give
/// identical trajectories. If `task` is given, rewards are the task's
/// extrinsic rewards at each arrival state; otherwise zero.
pub fn rollout(
    maze: &mut Maze,
    policy: &mut dyn FnMut(Point, usize, &mut ChaCha12Rng) -> Result<Point>,
    skill: usize,
    episode: u64,
    episode_length: usize,
    task: Option<&DownstreamTask>,
    rng: &mut ChaCha12Rng,
) -> Result<Vec<Transition>> {
    let mut out = Vec::with_capacity(episode_length);
    let mut state = maze.reset();
    for step in 0..episode_length {
        let action = policy(state, skill, rng)?;
        let next_state = maze.step(action)?;
        let reward = task.map(|t| t.reward(next_state)).unwrap_or(0.0);
        out.push(Transition { state, action, next_state, reward, skill, episode, step });
        state = next_state;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::builtin_layout;
    use rand::{Rng, SeedableRng};

    fn noisy_policy(state: Point, _skill: usize, rng: &mut ChaCha12Rng) -> Result<Point> {
        let _ = state;
        Ok([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
    }

    #[test]
    fn rollout_produces_chained_fixed_length_episode() {
        let mut maze = Maze::new(builtin_layout("bottleneck").unwrap()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let traj = rollout(&mut maze, &mut noisy_policy, 3, 17, 50, None, &mut rng).unwrap();
        assert_eq!(traj.len(), 50);
        assert_eq!(traj[0].state, [0.25, 0.5]);
        for (i, t) in traj.iter().enumerate() {
            assert_eq!(t.step, i);
            assert_eq!(t.skill, 3);
            assert_eq!(t.episode, 17);
            assert_eq!(t.reward, 0.0);
            if i > 0 {
                assert_eq!(t.state, traj[i - 1].next_state, "states chain");
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let spec = builtin_layout("tree").unwrap();
        let run = |seed: u64| {
            let mut maze = Maze::new(spec.clone()).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rollout(&mut maze, &mut noisy_policy, 0, 0, 50, None, &mut rng).unwrap()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn task_rewards_are_attached_at_arrival_states() {
        let mut maze = Maze::new(builtin_layout("bottleneck").unwrap()).unwrap();
        let task = DownstreamTask::dense([0.25, 0.5]);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let traj = rollout(&mut maze, &mut noisy_policy, 0, 0, 10, Some(&task), &mut rng).unwrap();
        for t in &traj {
            let expect = task.reward(t.next_state);
            assert_eq!(t.reward, expect);
        }
    }
}
