//! Downstream goal-reaching tasks used for finetuning.

use serde::{Deserialize, Serialize};

use super::{MazeSpec, Point};

/// Reward shaping for a goal task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// `r(s) = -||s - goal||` every step.
    Dense,
    /// `r(s) = 1` within `radius` of the goal, else `0`.
    Sparse,
}

/// A fixed-goal task over a maze arena.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownstreamTask {
    pub goal: Point,
    pub kind: RewardKind,
    pub radius: f64,
}

/// Default sparse-goal radius.
pub const SPARSE_RADIUS: f64 = 0.1;

impl DownstreamTask {
    pub fn dense(goal: Point) -> Self {
        Self { goal, kind: RewardKind::Dense, radius: SPARSE_RADIUS }
    }

    pub fn sparse(goal: Point) -> Self {
        Self { goal, kind: RewardKind::Sparse, radius: SPARSE_RADIUS }
    }

    /// Extrinsic reward for being at `pos`.
    pub fn reward(&self, pos: Point) -> f64 {
        let d = ((pos[0] - self.goal[0]).powi(2) + (pos[1] - self.goal[1]).powi(2)).sqrt();
        match self.kind {
            RewardKind::Dense => -d,
            RewardKind::Sparse => {
                if d <= self.radius {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Four goals, one per corner region, inset 15% of the arena extent.
    /// Order: (low,low), (high,low), (low,high), (high,high).
    pub fn corner_goals(spec: &MazeSpec) -> [Point; 4] {
        let [x0, y0, x1, y1] = spec.bounds;
        let (dx, dy) = (0.15 * (x1 - x0), 0.15 * (y1 - y0));
        [
            [x0 + dx, y0 + dy],
            [x1 - dx, y0 + dy],
            [x0 + dx, y1 - dy],
            [x1 - dx, y1 - dy],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::builtin_layout;

    #[test]
    fn dense_reward_is_negative_distance() {
        let t = DownstreamTask::dense([0.5, 0.5]);
        assert_eq!(t.reward([0.5, 0.5]), 0.0);
        assert!((t.reward([0.5, 0.9]) + 0.4).abs() < 1e-15);
    }

    #[test]
    fn sparse_reward_is_an_indicator() {
        let t = DownstreamTask::sparse([0.2, 0.2]);
        assert_eq!(t.reward([0.25, 0.2]), 1.0);
        assert_eq!(t.reward([0.2, 0.31]), 0.0);
        // Boundary counts as inside.
        assert_eq!(t.reward([0.2, 0.3]), 1.0);
    }

    #[test]
    fn corner_goals_sit_inside_the_arena() {
        let spec = builtin_layout("bottleneck").unwrap();
        let goals = DownstreamTask::corner_goals(&spec);
        assert_eq!(goals[0], [0.15, 0.15]);
        assert_eq!(goals[3], [0.85, 0.85]);
        for g in goals {
            assert!(g[0] > 0.0 && g[0] < 1.0 && g[1] > 0.0 && g[1] < 1.0);
        }
    }
}
