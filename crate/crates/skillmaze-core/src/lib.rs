//! Desk-scale laboratory for unsupervised skill discovery in continuous 2D mazes.
//!
//! The crate is organized as five subsystems:
//!
//! - [`nn`]: a minimal f64 tensor type with reverse-mode automatic
//!   differentiation, MLPs, Adam, and JSON checkpoints.
//! - [`env`]: a continuous point-mass maze with segment walls, fixed-length
//!   episodes, and downstream goal tasks.
//! - [`skills`]: skill spaces, paired contrastive batches, and the three
//!   intrinsic reward methods (contrastive, discriminator, particle entropy).
//! - [`agent`]: a skill-conditioned DDPG-style actor-critic with n-step
//!   returns, replay, and the pretrain/finetune loops.
//! - [`diagnostics`]: occupancy grids, binned and neural MI estimates,
//!   von Mises-Fisher entropy estimation, and numerical checks for the
//!   bounds the contrastive objective is built on.
//!
//! Everything is deterministic given a seed: training loops are sequential,
//! all randomness flows through explicitly seeded ChaCha streams, and no
//! iteration order depends on hash maps.

pub mod agent;
pub mod diagnostics;
pub mod env;
pub mod error;
pub mod nn;
pub mod skills;

pub use error::{Error, Result};
