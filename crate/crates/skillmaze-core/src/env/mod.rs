//! Continuous 2D point-mass maze environments.
//!
//! The arena is an axis-aligned rectangle with thin wall segments. Actions
//! are 2D displacements in `[-1, 1]^2`, scaled by a per-environment step
//! scale. Motion that would cross a wall (or the boundary) stops just short
//! of the first crossing. Episodes have a fixed length; the environment is
//! fully deterministic, so all trajectory diversity comes from the policy.

mod layout;
mod maze;
mod rollout;
mod task;
mod trajectory;

pub use layout::{builtin_layout, parse_layout, serialize_layout};
pub use maze::{segments_strictly_cross, Maze, MazeSpec, Point, Wall, CONTACT_EPS, STEP_SCALE};
pub use rollout::{rollout, Transition};
pub use task::{DownstreamTask, RewardKind, SPARSE_RADIUS};
pub use trajectory::{read_trajectories, write_trajectories, TrajectoryRow};
