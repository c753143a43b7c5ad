use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{ReplayBuffer, Transition};
use super::config::{AgentConfig, AgentError};
use super::learner::Agent;
use crate::env::{BanditEnv, Feedback, Split};
use crate::eval::{evaluate_suite, EvalSuite, Metrics};
use crate::seeding::{episode_rng, stream_rng, Stream};

/// One row of the training log, written after every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub episodes: usize,
    pub metrics: Metrics,
    /// Mean training-episode success over the epoch.
    pub train_success_rate: f64,
    /// Mean critic losses over the epoch's updates, one per critic.
    pub critic_loss: Vec<f64>,
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub label: String,
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub agent: Agent,
    pub log: TrainingLog,
}

/// Regression label for one episode under the configured critic width.
pub fn label_for(feedback: &Feedback, q_dim: usize) -> Vec<f64> {
    if q_dim == 1 {
        vec![feedback.reward_1d]
    } else {
        feedback.reward.to_array().to_vec()
    }
}

#[derive(Default)]
struct EpochStats {
    successes: usize,
    episodes: usize,
    critic_loss: Vec<f64>,
    critic_updates: usize,
    actor_loss: f64,
    actor_updates: usize,
}

impl EpochStats {
    fn add_critic(&mut self, losses: &[f64]) {
        if self.critic_loss.is_empty() {
            self.critic_loss = vec![0.0; losses.len()];
        }
        for (acc, l) in self.critic_loss.iter_mut().zip(losses) {
            *acc += l;
        }
        self.critic_updates += 1;
    }

    fn finish(self, epoch: usize, episodes: usize, metrics: Metrics) -> EpochRecord {
        let n = self.critic_updates.max(1) as f64;
        EpochRecord {
            epoch,
            episodes,
            metrics,
            train_success_rate: self.successes as f64 / self.episodes.max(1) as f64,
            critic_loss: self.critic_loss.into_iter().map(|l| l / n).collect(),
            actor_loss: (self.actor_updates > 0).then(|| self.actor_loss / self.actor_updates as f64),
        }
    }
}

/// Trains an agent on `env`.
///
/// Every random draw comes from a stream derived from `seed`, so a run is a
/// pure function of `(env, config, seed, eval_seed)`. The per-epoch
/// evaluation uses a fixed suite drawn from `eval_seed`.
pub fn train<E: BanditEnv>(
    env: &E,
    config: &AgentConfig,
    seed: u64,
    eval_seed: u64,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Trained, AgentError> {
    config.validate()?;
    let mut agent = Agent::new(config.clone(), env.observation_dim(), &mut stream_rng(seed, Stream::Init))?;
    let suite = EvalSuite::new(env, config.eval_episodes, eval_seed);
    let mut buffer = ReplayBuffer::new(config.replay_capacity);
    let mut minibatch_rng = stream_rng(seed, Stream::Minibatch);
    let mut log = TrainingLog { label: config.label(), seed, epochs: Vec::new() };
    let actor_delay = config.actor_delay();
    let mut stats = EpochStats::default();
    let mut critic_steps = 0usize;

    for episode in 0..config.episodes {
        let idx = episode as u64;
        let (obs, context) = env.sample(Split::Training, &mut episode_rng(seed, Stream::Training, idx));
        let mut explore_rng = episode_rng(seed, Stream::Exploration, idx);
        let action = if episode < config.warmup_episodes {
            std::array::from_fn(|_| explore_rng.random_range(-1.0..=1.0))
        } else {
            agent.explore(&obs, &mut explore_rng)?
        };
        let feedback = env.step(&context, action);
        stats.successes += usize::from(feedback.success);
        stats.episodes += 1;
        buffer.push(Transition { observation: obs, action, reward: label_for(&feedback, config.q_dim) });

        if episode >= config.warmup_episodes {
            let batch = buffer.sample(&mut minibatch_rng, config.batch_size);
            stats.add_critic(&agent.update_critics(&batch)?);
            critic_steps += 1;
            if critic_steps % actor_delay == 0 {
                stats.actor_loss += agent.update_actor(&batch)?;
                stats.actor_updates += 1;
            }
        }

        if (episode + 1) % config.episodes_per_epoch == 0 {
            let metrics = evaluate_suite(&agent.actor, Some(&agent.critics), env, &suite)?;
            let record = std::mem::take(&mut stats).finish(log.epochs.len() + 1, episode + 1, metrics);
            on_epoch(&record);
            log.epochs.push(record);
        }
    }
    Ok(Trained { agent, log })
}
