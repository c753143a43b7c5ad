//! Fully connected networks with explicit forward/backward passes and Adam.

mod adam;
mod mlp;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use mlp::{Activation, Architecture, Cache, Gradients, Layer, Mlp, FINAL_LAYER_INIT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NnError {
    #[error("layer widths must be at least 1")]
    ZeroWidth,
    #[error("input has width {got}, network expects {expected}")]
    InputWidth { expected: usize, got: usize },
    #[error("forward cache does not match this network or gradient shape")]
    CacheMismatch,
    #[error("parameter shapes do not match")]
    ShapeMismatch,
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
}
