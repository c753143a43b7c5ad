//! Vector-valued actor-critic learner for one-step stroke decisions.
//!
//! Twin critics choose the smaller-norm value estimate per sample, the actor
//! maximises the norm of that estimate, and exploration can pick the best of
//! several noisy candidates under the critics.

mod buffer;
mod config;
mod learner;
mod train;

pub use buffer::{ReplayBuffer, Transition};
pub use config::{AgentConfig, AgentError};
pub use learner::{
    actor_architecture, actor_loss, argmax_index, critic_architecture, critic_input, critic_value,
    critic_values, exploration_candidates, policy_action, select_action_argmax,
    select_action_default, select_min_norm, stack_batch, update_actor, update_critics, Agent,
    ACTION_DIM,
};
pub use train::{label_for, train, EpochRecord, Trained, TrainingLog};
