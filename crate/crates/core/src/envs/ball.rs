use serde::{Deserialize, Serialize};

use super::EpisodeStep;
use crate::error::{Error, Result};
use crate::samplers::Rng;

pub type BallState = [f64; 2];

const BALL_SLACK: f64 = 1e-12;

/// Continuous 2-D environment on the closed unit Euclidean ball.
///
/// `s' = proj(s + a + sigma * z)` with `z ~ N(0, I)`; the reward
/// `max(0, 1 - |s - center| / smoothness)` is evaluated at the current state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallEnvSpec {
    pub horizon: usize,
    pub actions: Vec<BallState>,
    /// Transition noise standard deviation.
    pub sigma: f64,
    /// Standard deviation of the initial state around the origin.
    pub sigma_init: f64,
    pub center: BallState,
    pub smoothness: f64,
}

fn norm(v: BallState) -> f64 {
    v[0].hypot(v[1])
}

/// Euclidean projection onto the closed unit ball.
pub fn project_unit_ball(v: BallState) -> BallState {
    let n = norm(v);
    if n > 1.0 {
        [v[0] / n, v[1] / n]
    } else {
        v
    }
}

impl BallEnvSpec {
    /// The three difficulty levels: dense reward with small noise, sparse
    /// reward with small noise, sparse reward with large noise.
    pub fn level(level: u8) -> Result<Self> {
        let (smoothness, sigma) = match level {
            1 => (0.5 * std::f64::consts::SQRT_2, 0.01),
            2 => (0.2, 0.01),
            3 => (0.2, 0.025),
            other => return Err(Error::param(format!("ball level must be 1, 2 or 3, got {other}"))),
        };
        Ok(Self {
            horizon: 30,
            actions: vec![[0.0, 0.0], [-0.05, 0.0], [0.05, 0.0], [0.0, 0.05], [0.0, -0.05]],
            sigma,
            sigma_init: 0.001,
            center: [0.5, 0.5],
            smoothness,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.actions.is_empty() {
            return Err(Error::param("ball environment needs a positive horizon and actions"));
        }
        if !(self.sigma >= 0.0 && self.sigma_init >= 0.0 && self.smoothness > 0.0) {
            return Err(Error::param("ball noise must be >= 0 and smoothness > 0"));
        }
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn reward(&self, s: BallState) -> f64 {
        let d = norm([s[0] - self.center[0], s[1] - self.center[1]]);
        (1.0 - d / self.smoothness).max(0.0)
    }

    /// Lipschitz constant of the reward in the Euclidean metric.
    pub fn reward_lipschitz(&self) -> f64 {
        1.0 / self.smoothness
    }

    /// Lipschitz constant of the transition map in the state (additive noise, projection).
    pub fn transition_lipschitz(&self) -> f64 {
        1.0
    }

    pub fn initial_state(&self, rng: &mut Rng) -> BallState {
        let z = [rng.standard_normal(), rng.standard_normal()];
        project_unit_ball([self.sigma_init * z[0], self.sigma_init * z[1]])
    }

    /// One transition from `s` under action `action`.
    pub fn step(&self, s: BallState, action: usize, rng: &mut Rng) -> Result<EpisodeStep<BallState>> {
        if !(norm(s) <= 1.0 + BALL_SLACK) {
            return Err(Error::Contract(format!("state {s:?} lies outside the unit ball")));
        }
        let a = *self
            .actions
            .get(action)
            .ok_or_else(|| Error::Contract(format!("action index {action} out of range")))?;
        let reward = self.reward(s);
        let (z0, z1) = if self.sigma > 0.0 {
            (rng.standard_normal(), rng.standard_normal())
        } else {
            (0.0, 0.0)
        };
        let next = project_unit_ball([s[0] + a[0] + self.sigma * z0, s[1] + a[1] + self.sigma * z1]);
        Ok(EpisodeStep {
            next_state: next,
            reward,
        })
    }
}
