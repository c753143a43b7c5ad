//! The single-step stroke environment and the bandit interface the learner
//! trains against.

mod reward;
mod stroke;
mod synthetic;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::ContactError;
use crate::physics::PhysicsError;

pub use reward::{reward, reward_1d, RewardVec, NET_HEIGHT_REFERENCE};
pub use stroke::{
    episode_trajectory, observe, perceive, racket_from_action, rollout, sample_hit_state,
    synthesize_serve, ActionBounds, EpisodeOutcome, FailureReason, HitState, NoiseConfig,
    ObservationScale, Range, StateRanges, StrokeAction, StrokeContext, StrokeEnv, StrokeEnvBuilder, TableGeometry,
    HITTING_PLANE_X, OBS_DIM, RACKET_HOME,
};
pub use synthetic::SyntheticBandit;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("range for {name} is inverted: [{lo}, {hi}]")]
    InvertedRange { name: &'static str, lo: f64, hi: f64 },
    #[error("noise standard deviation for {0} must be non-negative and finite")]
    InvalidNoise(&'static str),
    #[error("invalid environment setting {name} = {value}")]
    InvalidSetting { name: &'static str, value: f64 },
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Contact(#[from] ContactError),
}

/// Which state distribution an episode is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Training,
    Evaluation,
}

/// Everything the learner and the evaluator need back from one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub reward: RewardVec,
    pub reward_1d: f64,
    pub success: bool,
    /// `exp(-distance to target)` on success, zero otherwise.
    pub distance_reward: f64,
    /// Physical outcome, when the environment has one.
    pub outcome: Option<EpisodeOutcome>,
}

/// A one-step decision problem with a 3-dimensional action in `[-1, 1]^3`.
pub trait BanditEnv {
    /// Hidden per-episode information needed to score an action.
    type Context: Clone;

    fn observation_dim(&self) -> usize;

    /// Draws an episode: normalized observation plus hidden context.
    fn sample(&self, split: Split, rng: &mut dyn RngCore) -> (Vec<f64>, Self::Context);

    /// Scores a normalized action against the episode.
    fn step(&self, context: &Self::Context, action: [f64; 3]) -> Feedback;
}
