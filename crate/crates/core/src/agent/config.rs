use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::AdamConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("q_dim must be 1 or 3, got {0}")]
    QDim(usize),
    #[error("invalid agent setting {name} = {value}")]
    Invalid { name: &'static str, value: f64 },
    #[error("batch is empty")]
    EmptyBatch,
    #[error(transparent)]
    Nn(#[from] crate::nn::NnError),
}

/// Learner hyper-parameters and the switches that select an ablation variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Two critics with min-norm selection (TD3 backbone) instead of one (DDPG).
    pub use_twin_critics: bool,
    /// Pick the best of several noisy candidates instead of one noisy action.
    pub use_argmax_exploration: bool,
    /// Critic output width: 3 for the vector reward, 1 for the scalar reward.
    pub q_dim: usize,
    pub exploration_sigma: f64,
    pub candidates: usize,
    pub replay_capacity: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub episodes: usize,
    pub episodes_per_epoch: usize,
    /// Critic steps per actor step.
    pub policy_delay: usize,
    /// Episodes with uniformly random actions before learning starts.
    pub warmup_episodes: usize,
    pub hidden: Vec<usize>,
    /// Episodes in each per-epoch evaluation.
    pub eval_episodes: usize,
    pub adam: AdamConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self::td3_argmax_3dq()
    }
}

impl AgentConfig {
    fn base() -> Self {
        Self {
            use_twin_critics: true,
            use_argmax_exploration: true,
            q_dim: 3,
            exploration_sigma: 0.1,
            candidates: 32,
            replay_capacity: 5000,
            batch_size: 512,
            learning_rate: 1e-4,
            episodes: 10_000,
            episodes_per_epoch: 100,
            policy_delay: 2,
            warmup_episodes: 512,
            hidden: vec![256, 256],
            eval_episodes: 1000,
            adam: AdamConfig::default(),
        }
    }

    fn variant(twin: bool, argmax: bool, q_dim: usize) -> Self {
        Self { use_twin_critics: twin, use_argmax_exploration: argmax, q_dim, ..Self::base() }
    }

    pub fn ddpg() -> Self {
        Self::variant(false, false, 1)
    }
    pub fn ddpg_argmax() -> Self {
        Self::variant(false, true, 1)
    }
    pub fn ddpg_argmax_3dq() -> Self {
        Self::variant(false, true, 3)
    }
    pub fn td3() -> Self {
        Self::variant(true, false, 1)
    }
    pub fn td3_argmax() -> Self {
        Self::variant(true, true, 1)
    }
    pub fn td3_argmax_3dq() -> Self {
        Self::variant(true, true, 3)
    }

    /// The six deterministic-policy variants, DDPG rows first.
    pub fn ablation_variants() -> Vec<(String, Self)> {
        vec![
            ("DDPG".into(), Self::ddpg()),
            ("DDPG+argmax".into(), Self::ddpg_argmax()),
            ("DDPG+argmax+3DQ".into(), Self::ddpg_argmax_3dq()),
            ("TD3".into(), Self::td3()),
            ("TD3+argmax".into(), Self::td3_argmax()),
            ("TD3+argmax+3DQ".into(), Self::td3_argmax_3dq()),
        ]
    }

    /// Copies the learner switches of `variant` onto these hyper-parameters.
    pub fn with_switches_of(&self, variant: &Self) -> Self {
        Self {
            use_twin_critics: variant.use_twin_critics,
            use_argmax_exploration: variant.use_argmax_exploration,
            q_dim: variant.q_dim,
            ..self.clone()
        }
    }

    pub fn label(&self) -> String {
        let mut s = String::from(if self.use_twin_critics { "TD3" } else { "DDPG" });
        if self.use_argmax_exploration {
            s.push_str("+argmax");
        }
        if self.q_dim == 3 {
            s.push_str("+3DQ");
        }
        s
    }

    pub fn critic_count(&self) -> usize {
        if self.use_twin_critics {
            2
        } else {
            1
        }
    }

    /// Critic steps between actor steps. Delayed actor updates belong to the
    /// twin-critic backbone; the single-critic baseline updates every step.
    pub fn actor_delay(&self) -> usize {
        if self.use_twin_critics {
            self.policy_delay
        } else {
            1
        }
    }

    pub fn epochs(&self) -> usize {
        self.episodes / self.episodes_per_epoch
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if self.q_dim != 1 && self.q_dim != 3 {
            return Err(AgentError::QDim(self.q_dim));
        }
        let counts = [
            ("candidates", self.candidates),
            ("replay_capacity", self.replay_capacity),
            ("batch_size", self.batch_size),
            ("episodes_per_epoch", self.episodes_per_epoch),
            ("policy_delay", self.policy_delay),
            ("eval_episodes", self.eval_episodes),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(AgentError::Invalid { name, value: 0.0 });
            }
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(AgentError::Invalid { name: "hidden", value: 0.0 });
        }
        if !(self.exploration_sigma >= 0.0 && self.exploration_sigma.is_finite()) {
            return Err(AgentError::Invalid { name: "exploration_sigma", value: self.exploration_sigma });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(AgentError::Invalid { name: "learning_rate", value: self.learning_rate });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_full_method() {
        let c = AgentConfig::default();
        assert!(c.use_twin_critics && c.use_argmax_exploration && c.q_dim == 3);
        assert_eq!(c.label(), "TD3+argmax+3DQ");
        assert_eq!(AgentConfig::ddpg().label(), "DDPG");
        assert_eq!(c.epochs(), 100);
        assert_eq!((c.replay_capacity, c.batch_size, c.learning_rate), (5000, 512, 1e-4));
    }

    #[test]
    fn six_variants_in_order() {
        let names: Vec<String> = AgentConfig::ablation_variants().into_iter().map(|(n, c)| {
            assert_eq!(n, c.label());
            n
        }).collect();
        assert_eq!(names.len(), 6);
        assert_eq!(names[0], "DDPG");
        assert_eq!(names[5], "TD3+argmax+3DQ");
    }

    #[test]
    fn validation() {
        assert_eq!(AgentConfig { q_dim: 2, ..Default::default() }.validate(), Err(AgentError::QDim(2)));
        assert!(AgentConfig { candidates: 0, ..Default::default() }.validate().is_err());
        assert!(AgentConfig { exploration_sigma: -0.1, ..Default::default() }.validate().is_err());
    }
}
