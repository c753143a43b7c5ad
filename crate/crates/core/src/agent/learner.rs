use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::buffer::Transition;
use super::config::{AgentConfig, AgentError};
use crate::nn::{adam_step, Activation, AdamState, Architecture, Mlp};

pub const ACTION_DIM: usize = 3;

/// Row-wise Euclidean norms.
fn row_norms(q: &ArrayView2<'_, f64>) -> Vec<f64> {
    q.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}

/// Per-sample critic choice between two critic outputs: the first critic
/// wins only when its norm is strictly smaller.
///
/// Returns the selected rows and, per row, the index of the chosen critic.
pub fn select_min_norm(q1: ArrayView2<'_, f64>, q2: Option<ArrayView2<'_, f64>>) -> (Array2<f64>, Vec<usize>) {
    match q2 {
        None => (q1.to_owned(), vec![0; q1.nrows()]),
        Some(q2) => {
            let n1 = row_norms(&q1);
            let n2 = row_norms(&q2);
            let mut out = q2.to_owned();
            let mut choice = vec![1; q1.nrows()];
            for i in 0..q1.nrows() {
                if n1[i] < n2[i] {
                    out.row_mut(i).assign(&q1.row(i));
                    choice[i] = 0;
                }
            }
            (out, choice)
        }
    }
}

/// Concatenates observations and actions into critic inputs.
pub fn critic_input(obs: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[obs, actions]).expect("matching batch sizes")
}

/// Batched critic values, with min-norm selection when two critics are given.
pub fn critic_values(critics: &[Mlp<f64>], obs: ArrayView2<'_, f64>, actions: ArrayView2<'_, f64>) -> Result<Array2<f64>, AgentError> {
    let x = critic_input(obs, actions);
    let q1 = critics[0].predict(x.view())?;
    let q2 = match critics.get(1) {
        Some(c) => Some(c.predict(x.view())?),
        None => None,
    };
    Ok(select_min_norm(q1.view(), q2.as_ref().map(|q| q.view())).0)
}

/// Critic value of one state-action pair.
pub fn critic_value(critics: &[Mlp<f64>], obs: &[f64], action: [f64; 3]) -> Result<Vec<f64>, AgentError> {
    let o = ArrayView2::from_shape((1, obs.len()), obs).expect("row");
    let a = ArrayView2::from_shape((1, 3), &action[..]).expect("row");
    Ok(critic_values(critics, o, a)?.into_raw_vec_and_offset().0)
}

/// Deterministic policy output.
pub fn policy_action(actor: &Mlp<f64>, obs: &[f64]) -> Result<[f64; 3], AgentError> {
    let y = actor.predict_one(obs)?;
    Ok([y[0], y[1], y[2]])
}

fn noisy<R: Rng + ?Sized>(base: [f64; 3], sigma: f64, rng: &mut R) -> [f64; 3] {
    if sigma > 0.0 {
        let n = Normal::new(0.0, sigma).expect("validated sigma");
        base.map(|b| (b + n.sample(rng)).clamp(-1.0, 1.0))
    } else {
        base.map(|b| b.clamp(-1.0, 1.0))
    }
}

/// Policy output plus clipped Gaussian noise.
pub fn select_action_default<R: Rng + ?Sized>(actor: &Mlp<f64>, obs: &[f64], sigma: f64, rng: &mut R) -> Result<[f64; 3], AgentError> {
    Ok(noisy(policy_action(actor, obs)?, sigma, rng))
}

/// `k` candidates around `mean`. With more than one candidate the first is
/// the noiseless mean; a lone candidate carries noise.
pub fn exploration_candidates<R: Rng + ?Sized>(mean: [f64; 3], k: usize, sigma: f64, rng: &mut R) -> Vec<[f64; 3]> {
    (0..k.max(1))
        .map(|i| if i == 0 && k > 1 { noisy(mean, 0.0, rng) } else { noisy(mean, sigma, rng) })
        .collect()
}

/// Index of the highest score; the lowest index wins ties.
pub fn argmax_index(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Samples noisy candidates around the policy output and keeps the one whose
/// critic value has the largest norm.
pub fn select_action_argmax<R: Rng + ?Sized>(
    actor: &Mlp<f64>,
    critics: &[Mlp<f64>],
    obs: &[f64],
    k: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<[f64; 3], AgentError> {
    let mean = policy_action(actor, obs)?;
    let cands = exploration_candidates(mean, k, sigma, rng);
    if cands.len() == 1 {
        return Ok(cands[0]);
    }
    let o = Array2::from_shape_fn((cands.len(), obs.len()), |(_, j)| obs[j]);
    let a = Array2::from_shape_fn((cands.len(), 3), |(i, j)| cands[i][j]);
    let q = critic_values(critics, o.view(), a.view())?;
    Ok(cands[argmax_index(&row_norms(&q.view()))])
}

/// Stacks a minibatch into observation, action and reward matrices.
pub fn stack_batch(batch: &[&Transition]) -> Result<(Array2<f64>, Array2<f64>, Array2<f64>), AgentError> {
    let first = batch.first().ok_or(AgentError::EmptyBatch)?;
    let (n, od, rd) = (batch.len(), first.observation.len(), first.reward.len());
    let obs = Array2::from_shape_fn((n, od), |(i, j)| batch[i].observation[j]);
    let act = Array2::from_shape_fn((n, 3), |(i, j)| batch[i].action[j]);
    let rew = Array2::from_shape_fn((n, rd), |(i, j)| batch[i].reward[j]);
    Ok((obs, act, rew))
}

/// One Adam step per critic on the mean squared norm of `Q(s, a) - r`.
///
/// Returns each critic's loss before its update.
pub fn update_critics(
    critics: &mut [Mlp<f64>],
    optimizers: &mut [AdamState<f64>],
    batch: &[&Transition],
    lr: f64,
) -> Result<Vec<f64>, AgentError> {
    let (obs, act, rew) = stack_batch(batch)?;
    let x = critic_input(obs.view(), act.view());
    let n = batch.len() as f64;
    let mut losses = Vec::with_capacity(critics.len());
    for (critic, opt) in critics.iter_mut().zip(optimizers.iter_mut()) {
        let (q, cache) = critic.forward(x.view())?;
        let diff = &q - &rew;
        losses.push(diff.iter().map(|d| d * d).sum::<f64>() / n);
        let dy = diff * (2.0 / n);
        let (grads, _) = critic.backward(&cache, dy.view())?;
        adam_step(critic, &grads, opt, lr)?;
    }
    Ok(losses)
}

/// Actor loss `-mean ||Q(s, mu(s))||` with per-sample critic selection.
pub fn actor_loss(actor: &Mlp<f64>, critics: &[Mlp<f64>], obs: ArrayView2<'_, f64>) -> Result<f64, AgentError> {
    let a = actor.predict(obs)?;
    let q = critic_values(critics, obs, a.view())?;
    Ok(-row_norms(&q.view()).iter().sum::<f64>() / obs.nrows() as f64)
}

/// One Adam step on the actor, back-propagating through the selected critic
/// of each sample. Critic parameters are not touched.
///
/// Returns the loss before the update.
pub fn update_actor(
    actor: &mut Mlp<f64>,
    optimizer: &mut AdamState<f64>,
    critics: &[Mlp<f64>],
    batch: &[&Transition],
    lr: f64,
) -> Result<f64, AgentError> {
    let (obs, _, _) = stack_batch(batch)?;
    let n = obs.nrows();
    let od = obs.ncols();
    let (actions, actor_cache) = actor.forward(obs.view())?;
    let x = critic_input(obs.view(), actions.view());
    let mut outputs = Vec::with_capacity(critics.len());
    for c in critics {
        outputs.push(c.forward(x.view())?);
    }
    let (selected, choice) = select_min_norm(outputs[0].0.view(), outputs.get(1).map(|o| o.0.view()));
    let norms = row_norms(&selected.view());
    let loss = -norms.iter().sum::<f64>() / n as f64;

    let q_dim = selected.ncols();
    let mut d_action = Array2::<f64>::zeros((n, ACTION_DIM));
    for (ci, (critic, (_, cache))) in critics.iter().zip(&outputs).enumerate() {
        let mut dy = Array2::<f64>::zeros((n, q_dim));
        for i in 0..n {
            // the norm has no gradient at the origin
            if choice[i] == ci && norms[i] > 0.0 {
                let scale = -1.0 / (n as f64 * norms[i]);
                dy.row_mut(i).assign(&(&selected.row(i) * scale));
            }
        }
        let dx = critic.input_gradient(cache, dy.view())?;
        d_action += &dx.slice(s![.., od..]);
    }
    let (grads, _) = actor.backward(&actor_cache, d_action.view())?;
    adam_step(actor, &grads, optimizer, lr)?;
    Ok(loss)
}

/// Actor, critics and their optimizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub config: AgentConfig,
    pub actor: Mlp<f64>,
    pub critics: Vec<Mlp<f64>>,
    pub actor_optimizer: AdamState<f64>,
    pub critic_optimizers: Vec<AdamState<f64>>,
}

pub fn actor_architecture(obs_dim: usize, hidden: &[usize]) -> Architecture {
    Architecture::new(obs_dim, hidden.to_vec(), ACTION_DIM, Activation::Tanh)
}

pub fn critic_architecture(obs_dim: usize, hidden: &[usize], q_dim: usize) -> Architecture {
    Architecture::new(obs_dim + ACTION_DIM, hidden.to_vec(), q_dim, Activation::Linear)
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(config: AgentConfig, obs_dim: usize, rng: &mut R) -> Result<Self, AgentError> {
        config.validate()?;
        let actor = Mlp::init(actor_architecture(obs_dim, &config.hidden), rng)?;
        let critics = (0..config.critic_count())
            .map(|_| Mlp::init(critic_architecture(obs_dim, &config.hidden, config.q_dim), rng))
            .collect::<Result<Vec<_>, _>>()?;
        let actor_optimizer = AdamState::new(&actor, config.adam);
        let critic_optimizers = critics.iter().map(|c| AdamState::new(c, config.adam)).collect();
        Ok(Self { config, actor, critics, actor_optimizer, critic_optimizers })
    }

    pub fn act(&self, obs: &[f64]) -> Result<[f64; 3], AgentError> {
        policy_action(&self.actor, obs)
    }

    pub fn explore<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Result<[f64; 3], AgentError> {
        let c = &self.config;
        if c.use_argmax_exploration {
            select_action_argmax(&self.actor, &self.critics, obs, c.candidates, c.exploration_sigma, rng)
        } else {
            select_action_default(&self.actor, obs, c.exploration_sigma, rng)
        }
    }

    pub fn update_critics(&mut self, batch: &[&Transition]) -> Result<Vec<f64>, AgentError> {
        update_critics(&mut self.critics, &mut self.critic_optimizers, batch, self.config.learning_rate)
    }

    pub fn update_actor(&mut self, batch: &[&Transition]) -> Result<f64, AgentError> {
        update_actor(&mut self.actor, &mut self.actor_optimizer, &self.critics, batch, self.config.learning_rate)
    }
}
