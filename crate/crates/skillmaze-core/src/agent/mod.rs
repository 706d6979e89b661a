//! Skill-conditioned actor-critic training.
//!
//! The [`Agent`] owns the actor, the online/target critic pair, the method's
//! representation network, their optimizers, and the episode-granular replay
//! buffer. [`TrainConfig`] carries every hyperparameter; metrics stream out
//! as JSON lines via [`MetricsRecord`].

pub mod actor_critic;
pub mod config;
pub mod metrics;
pub mod replay;
pub mod trainer;

pub use actor_critic::{assemble_inputs, Actor, Critic};
pub use config::TrainConfig;
pub use metrics::{read_metrics, write_record, MetricsRecord};
pub use replay::{ReplayBuffer, SegmentBatch};
pub use trainer::Agent;
