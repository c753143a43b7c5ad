use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::reward::RewardVec;
use super::{BanditEnv, Feedback, Split};

/// Contextual bandit with a known optimal action, for checking the learner
/// independently of the ball physics.
///
/// Contexts are uniform on `[-1, 1]^dim`; the optimum is
/// `a*(s) = 0.8 tanh(M s)` for a fixed random matrix `M`, and each reward
/// component is `exp(-|a_i - a*_i(s)|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBandit {
    dim: usize,
    matrix: Vec<[f64; 3]>,
}

impl SyntheticBandit {
    pub fn new(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrix = (0..dim)
            .map(|_| std::array::from_fn(|_| rng.random_range(-0.5..=0.5)))
            .collect();
        Self { dim, matrix }
    }

    pub fn optimum(&self, obs: &[f64]) -> [f64; 3] {
        let mut z = [0.0; 3];
        for (s, row) in obs.iter().zip(&self.matrix) {
            for (zi, m) in z.iter_mut().zip(row) {
                *zi += m * s;
            }
        }
        z.map(|v| 0.8 * v.tanh())
    }
}

impl BanditEnv for SyntheticBandit {
    type Context = Vec<f64>;

    fn observation_dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, _split: Split, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        let obs: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        (obs.clone(), obs)
    }

    fn step(&self, context: &Vec<f64>, action: [f64; 3]) -> Feedback {
        let best = self.optimum(context);
        let diff: [f64; 3] = std::array::from_fn(|i| action[i].clamp(-1.0, 1.0) - best[i]);
        let dist = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        Feedback {
            reward: RewardVec::from_array(diff.map(|d| (-d.abs()).exp())),
            reward_1d: (-dist).exp(),
            success: true,
            distance_reward: (-dist).exp(),
            outcome: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_scores_one() {
        let b = SyntheticBandit::new(11, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (obs, ctx) = b.sample(Split::Training, &mut rng);
        let fb = b.step(&ctx, b.optimum(&obs));
        assert_eq!(fb.reward, RewardVec { x: 1.0, y: 1.0, h: 1.0 });
        assert!(b.optimum(&obs).iter().all(|a| a.abs() < 0.8));
    }
}
