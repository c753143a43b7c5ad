//! Fixed-seed evaluation and the ablation comparison report.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::agent::{critic_values, train, AgentConfig, AgentError, EpochRecord};
use crate::env::{BanditEnv, EpisodeOutcome, Split, NET_HEIGHT_REFERENCE};
use crate::nn::Mlp;
use crate::seeding::{episode_rng, Stream};

/// Aggregate results of an evaluation suite. Distances are in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub episodes: usize,
    pub success_rate: f64,
    /// `-ln(mean exp(-landing distance))`, failures contributing zero.
    pub eps_d: f64,
    /// `-ln(mean exp(-|net clearance - 0.173|))`, failures contributing zero.
    pub eps_h: f64,
    pub mean_reward: [f64; 3],
    pub mean_reward_1d: f64,
    /// Mean selected critic value at the evaluated actions, when critics were given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_q: Option<Vec<f64>>,
}

impl Metrics {
    /// Mean over episodes and reward components.
    pub fn mean_reward_scalar(&self) -> f64 {
        self.mean_reward.iter().sum::<f64>() / 3.0
    }
}

/// `-ln` of the mean of per-episode exponential rewards; `+inf` when every
/// reward is zero.
pub fn neg_log_mean(rewards: &[f64]) -> f64 {
    let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
    if mean > 0.0 {
        -mean.ln()
    } else {
        f64::INFINITY
    }
}

pub fn distance_error(outcomes: &[EpisodeOutcome], target: [f64; 2]) -> f64 {
    let r: Vec<f64> = outcomes
        .iter()
        .map(|o| match (o.success, o.distance_to(target)) {
            (true, Some(d)) => (-d).exp(),
            _ => 0.0,
        })
        .collect();
    neg_log_mean(&r)
}

pub fn height_error(outcomes: &[EpisodeOutcome]) -> f64 {
    let r: Vec<f64> = outcomes
        .iter()
        .map(|o| match (o.success, o.net_clearance) {
            (true, Some(h)) => (-(h - NET_HEIGHT_REFERENCE).abs()).exp(),
            _ => 0.0,
        })
        .collect();
    neg_log_mean(&r)
}

/// A fixed set of evaluation episodes, shared across policies for paired
/// comparison.
#[derive(Debug, Clone)]
pub struct EvalSuite<C> {
    pub observations: Vec<Vec<f64>>,
    pub contexts: Vec<C>,
}

impl<C: Clone> EvalSuite<C> {
    pub fn new<E: BanditEnv<Context = C>>(env: &E, episodes: usize, seed: u64) -> Self {
        let (observations, contexts) = (0..episodes as u64)
            .map(|i| env.sample(Split::Evaluation, &mut episode_rng(seed, Stream::Evaluation, i)))
            .unzip();
        Self { observations, contexts }
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    fn observation_matrix(&self) -> Array2<f64> {
        let dim = self.observations.first().map_or(0, Vec::len);
        Array2::from_shape_fn((self.len(), dim), |(i, j)| self.observations[i][j])
    }
}

/// Scores a fixed list of actions against the suite.
pub fn score_actions<E: BanditEnv>(env: &E, suite: &EvalSuite<E::Context>, actions: &[[f64; 3]]) -> Metrics {
    let n = suite.len();
    let mut successes = 0usize;
    let mut r_d = Vec::with_capacity(n);
    let mut r_h = Vec::with_capacity(n);
    let mut sum = [0.0; 3];
    let mut sum_1d = 0.0;
    for (ctx, &a) in suite.contexts.iter().zip(actions) {
        let fb = env.step(ctx, a);
        successes += usize::from(fb.success);
        r_d.push(if fb.success { fb.distance_reward } else { 0.0 });
        r_h.push(if fb.success { fb.reward.h } else { 0.0 });
        for (s, r) in sum.iter_mut().zip(fb.reward.to_array()) {
            *s += r;
        }
        sum_1d += fb.reward_1d;
    }
    let nf = n as f64;
    Metrics {
        episodes: n,
        success_rate: successes as f64 / nf,
        eps_d: neg_log_mean(&r_d),
        eps_h: neg_log_mean(&r_h),
        mean_reward: sum.map(|s| s / nf),
        mean_reward_1d: sum_1d / nf,
        mean_q: None,
    }
}

/// Evaluates an arbitrary observation-to-action map on the suite.
pub fn evaluate_policy<E: BanditEnv>(
    env: &E,
    suite: &EvalSuite<E::Context>,
    policy: impl Fn(&[f64]) -> [f64; 3],
) -> Metrics {
    let actions: Vec<[f64; 3]> = suite.observations.iter().map(|o| policy(o)).collect();
    score_actions(env, suite, &actions)
}

/// Evaluates the noise-free actor on the suite; with critics, also reports
/// the mean critic estimate at the chosen actions.
pub fn evaluate_suite<E: BanditEnv>(
    actor: &Mlp<f64>,
    critics: Option<&[Mlp<f64>]>,
    env: &E,
    suite: &EvalSuite<E::Context>,
) -> Result<Metrics, AgentError> {
    if suite.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    let obs = suite.observation_matrix();
    let y = actor.predict(obs.view())?;
    let actions: Vec<[f64; 3]> = y.rows().into_iter().map(|r| [r[0], r[1], r[2]]).collect();
    let mut m = score_actions(env, suite, &actions);
    if let Some(critics) = critics {
        let q = critic_values(critics, obs.view(), y.view())?;
        m.mean_q = q.mean_axis(ndarray::Axis(0)).map(|v| v.to_vec());
    }
    Ok(m)
}

/// Evaluates the actor's deterministic policy on `episodes` episodes drawn
/// from the evaluation ranges with `seed`.
pub fn evaluate<E: BanditEnv>(actor: &Mlp<f64>, env: &E, episodes: usize, seed: u64) -> Result<Metrics, AgentError> {
    evaluate_suite(actor, None, env, &EvalSuite::new(env, episodes, seed))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub success_rate: f64,
    pub eps_d: f64,
    pub eps_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub runs: Vec<SeedResult>,
}

impl AblationRow {
    fn column(&self, f: impl Fn(&Metrics) -> f64) -> Vec<f64> {
        self.runs.iter().map(|r| f(&r.metrics)).collect()
    }

    fn summarize(&self, agg: fn(&[f64]) -> f64) -> Summary {
        Summary {
            success_rate: agg(&self.column(|m| m.success_rate)),
            eps_d: agg(&self.column(|m| m.eps_d)),
            eps_h: agg(&self.column(|m| m.eps_h)),
        }
    }

    pub fn mean(&self) -> Summary {
        self.summarize(mean)
    }

    pub fn median(&self) -> Summary {
        self.summarize(median)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub eval_seed: u64,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, label: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Human-readable table in centimetres and percent.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<18} {:>8} {:>10} {:>10} {:>9}", "variant", "seed", "eps_d[cm]", "eps_h[cm]", "success");
        for row in &self.rows {
            for r in &row.runs {
                let m = &r.metrics;
                let _ = writeln!(
                    out,
                    "{:<18} {:>8} {:>10.1} {:>10.1} {:>8.1}%",
                    row.label,
                    r.seed,
                    100.0 * m.eps_d,
                    100.0 * m.eps_h,
                    100.0 * m.success_rate
                );
            }
            for (name, s) in [("mean", row.mean()), ("median", row.median())] {
                let _ = writeln!(
                    out,
                    "{:<18} {:>8} {:>10.1} {:>10.1} {:>8.1}%",
                    row.label,
                    name,
                    100.0 * s.eps_d,
                    100.0 * s.eps_h,
                    100.0 * s.success_rate
                );
            }
        }
        out
    }

    /// Machine-readable report with per-seed values and summaries.
    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        #[derive(Serialize)]
        struct Row<'a> {
            label: &'a str,
            mean: Summary,
            median: Summary,
            runs: &'a [SeedResult],
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            eval_seed: u64,
            rows: Vec<Row<'a>>,
        }
        let doc = Doc {
            eval_seed: self.eval_seed,
            rows: self
                .rows
                .iter()
                .map(|r| Row { label: &r.label, mean: r.mean(), median: r.median(), runs: &r.runs })
                .collect(),
        };
        toml::to_string(&doc)
    }
}

/// Trains every labelled config for every seed and evaluates the final
/// actors on one shared suite.
pub fn ablation_report<E: BanditEnv>(
    configs: &[(String, AgentConfig)],
    env: &E,
    seeds: &[u64],
    eval_episodes: usize,
    eval_seed: u64,
    mut on_epoch: impl FnMut(&str, u64, &EpochRecord),
) -> Result<AblationReport, AgentError> {
    let suite = EvalSuite::new(env, eval_episodes, eval_seed);
    let mut rows = Vec::with_capacity(configs.len());
    for (label, cfg) in configs {
        let mut runs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let trained = train(env, cfg, seed, eval_seed, |rec| on_epoch(label, seed, rec))?;
            let metrics = evaluate_suite(&trained.agent.actor, None, env, &suite)?;
            runs.push(SeedResult { seed, metrics });
        }
        rows.push(AblationRow { label: label.clone(), runs });
    }
    Ok(AblationReport { eval_seed, rows })
}
