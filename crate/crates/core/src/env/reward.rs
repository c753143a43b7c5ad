use serde::{Deserialize, Serialize};

use super::stroke::EpisodeOutcome;

/// Net height the height reward is measured against (m).
pub const NET_HEIGHT_REFERENCE: f64 = 0.173;

/// Shaped reward: landing x, landing y and net-crossing height, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardVec {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl RewardVec {
    pub const ZERO: Self = Self { x: 0.0, y: 0.0, h: 0.0 };

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.h]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { x: a[0], y: a[1], h: a[2] }
    }

    pub fn mean(self) -> f64 {
        (self.x + self.y + self.h) / 3.0
    }
}

pub fn reward(outcome: &EpisodeOutcome, target: [f64; 2]) -> RewardVec {
    match (outcome.success, outcome.landing, outcome.net_clearance) {
        (true, Some(p), Some(h)) => RewardVec {
            x: (-(p[0] - target[0]).abs()).exp(),
            y: (-(p[1] - target[1]).abs()).exp(),
            h: (-(h - NET_HEIGHT_REFERENCE).abs()).exp(),
        },
        _ => RewardVec::ZERO,
    }
}

/// Scalar reward used to train the one-dimensional critic baselines.
///
/// Note the sign: the height term is subtracted inside the exponent, so the
/// value can exceed one when the landing is accurate but the height is off.
pub fn reward_1d(outcome: &EpisodeOutcome, target: [f64; 2], k: f64) -> f64 {
    match (outcome.success, outcome.landing, outcome.net_clearance) {
        (true, Some(p), Some(h)) => {
            let d = (p[0] - target[0]).hypot(p[1] - target[1]);
            (-k * (d - (h - NET_HEIGHT_REFERENCE).abs())).exp()
        }
        _ => 0.0,
    }
}
