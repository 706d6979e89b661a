//! Minimal neural-network stack: dense f64 tensors, a reverse-mode tape,
//! MLPs, Adam, and JSON checkpoints.
//!
//! The scope is deliberately small — everything in this crate is an MLP chain
//! over 2D matrices — so the tape records a fixed set of operations with
//! hand-written vector-Jacobian products instead of a general graph engine.

mod adam;
mod checkpoint;
pub mod gradcheck;
mod mlp;
mod tape;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{
    load_checkpoint, load_checkpoint_with_meta, save_checkpoint, save_checkpoint_with_meta,
};
pub use mlp::{Activation, Mlp, MlpSpec};
pub use tape::{Tape, TensorId};
pub use tensor::Tensor;
