use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EpisodeStep;
use crate::error::{Error, Result};
use crate::samplers::Rng;

const ROW_TOLERANCE: f64 = 1e-12;

/// Full transition and reward tables of a finite episodic MDP.
///
/// Tables are flattened row-major: `transition[((h * S + s) * A + a) * S + s']`
/// and `reward[(h * S + s) * A + a]`. Steps, states and actions are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularMdpSpec {
    states: usize,
    actions: usize,
    horizon: usize,
    initial_state: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

impl TabularMdpSpec {
    pub fn new(
        states: usize,
        actions: usize,
        horizon: usize,
        initial_state: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
    ) -> Result<Self> {
        let spec = Self {
            states,
            actions,
            horizon,
            initial_state,
            transition,
            reward,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks dimensions, row sums and reward bounds.
    pub fn validate(&self) -> Result<()> {
        let (s, a, h) = (self.states, self.actions, self.horizon);
        if s == 0 || a == 0 || h == 0 {
            return Err(Error::param("states, actions and horizon must be positive"));
        }
        if self.initial_state >= s {
            return Err(Error::param(format!(
                "initial state {} out of range for {s} states",
                self.initial_state
            )));
        }
        if self.transition.len() != h * s * a * s {
            return Err(Error::param(format!(
                "transition table has {} entries, expected {}",
                self.transition.len(),
                h * s * a * s
            )));
        }
        if self.reward.len() != h * s * a {
            return Err(Error::param(format!(
                "reward table has {} entries, expected {}",
                self.reward.len(),
                h * s * a
            )));
        }
        for (i, row) in self.transition.chunks(s).enumerate() {
            if row.iter().any(|p| !(*p >= 0.0)) {
                return Err(Error::param(format!("negative probability in row {i}")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::param(format!("row {i} sums to {total}")));
            }
        }
        if let Some(r) = self.reward.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::param(format!("reward {r} outside [0,1]")));
        }
        Ok(())
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    /// Next-state distribution `p_h(. | s, a)`.
    pub fn transition_row(&self, step: usize, state: usize, action: usize) -> &[f64] {
        let start = ((step * self.states + state) * self.actions + action) * self.states;
        &self.transition[start..start + self.states]
    }

    pub fn reward(&self, step: usize, state: usize, action: usize) -> f64 {
        self.reward[(step * self.states + state) * self.actions + action]
    }

    /// Flat reward table, laid out as `[H][S][A]`.
    pub fn reward_table(&self) -> &[f64] {
        &self.reward
    }

    pub fn transition_table(&self) -> &[f64] {
        &self.transition
    }

    pub fn step(&self, step: usize, state: usize, action: usize, rng: &mut Rng) -> EpisodeStep<usize> {
        let next_state = rng.sample_categorical(self.transition_row(step, state, action));
        EpisodeStep {
            next_state,
            reward: self.reward(step, state, action),
        }
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("tabular spec serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::param(format!("bad MDP description: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Where the noisy fraction of grid-world transitions goes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridNoise {
    /// Uniform over every valid neighbor cell, the intended one included.
    #[default]
    AllNeighbors,
    /// Uniform over valid neighbor cells other than the intended one.
    ExcludeIntended,
}

// left, right, up, down as (d_row, d_col)
const GRID_MOVES: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];

/// Grid-world with cells `(i, j)`, `i < n_rows`, `j < n_cols`, state id `i * n_cols + j`.
///
/// Actions are left/right (`i -/+ 1`) and up/down (`j +/- 1`). The intended
/// move happens with probability `1 - noise`; the rest of the mass goes to a
/// uniformly chosen neighbor. Off-grid moves leave the agent in place.
/// Reward 1 in the far corner `(n_rows - 1, n_cols - 1)`, start at `(0, 0)`.
pub fn gridworld(
    n_rows: usize,
    n_cols: usize,
    horizon: usize,
    noise: f64,
    noise_target: GridNoise,
) -> Result<TabularMdpSpec> {
    if n_rows == 0 || n_cols == 0 || horizon == 0 {
        return Err(Error::param("grid dimensions and horizon must be positive"));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::param(format!("grid noise must lie in [0,1], got {noise}")));
    }
    let s = n_rows * n_cols;
    let a = GRID_MOVES.len();
    let id = |i: i64, j: i64| -> Option<usize> {
        (i >= 0 && j >= 0 && (i as usize) < n_rows && (j as usize) < n_cols).then(|| i as usize * n_cols + j as usize)
    };
    let goal = s - 1;

    let mut one_step = vec![0.0; s * a * s];
    let mut one_reward = vec![0.0; s * a];
    for i in 0..n_rows as i64 {
        for j in 0..n_cols as i64 {
            let here = id(i, j).unwrap();
            let neighbors: Vec<usize> = GRID_MOVES.iter().filter_map(|(di, dj)| id(i + di, j + dj)).collect();
            for (act, (di, dj)) in GRID_MOVES.iter().enumerate() {
                let row = &mut one_step[(here * a + act) * s..(here * a + act + 1) * s];
                let intended = id(i + di, j + dj);
                row[intended.unwrap_or(here)] += 1.0 - noise;
                let targets: Vec<usize> = match noise_target {
                    GridNoise::AllNeighbors => neighbors.clone(),
                    GridNoise::ExcludeIntended => neighbors.iter().copied().filter(|n| Some(*n) != intended).collect(),
                };
                if targets.is_empty() {
                    row[here] += noise;
                } else {
                    let share = noise / targets.len() as f64;
                    for t in targets {
                        row[t] += share;
                    }
                }
                one_reward[here * a + act] = if here == goal { 1.0 } else { 0.0 };
            }
        }
    }
    TabularMdpSpec::new(s, a, horizon, 0, one_step.repeat(horizon), one_reward.repeat(horizon))
}

/// Chain of `length` states with actions left (0) and right (1).
///
/// The chosen direction succeeds with probability `1 - wrong_prob`, otherwise
/// the agent moves the opposite way; moves past either end are clipped. The
/// reward depends only on the current state: `left_reward` in state 0,
/// `right_reward` in the last state, 0 elsewhere. Start in state 0.
pub fn chain(
    length: usize,
    horizon: usize,
    wrong_prob: f64,
    left_reward: f64,
    right_reward: f64,
) -> Result<TabularMdpSpec> {
    if length < 2 {
        return Err(Error::param(format!("chain needs at least 2 states, got {length}")));
    }
    if horizon == 0 {
        return Err(Error::param("horizon must be positive"));
    }
    if !(0.0..=1.0).contains(&wrong_prob) {
        return Err(Error::param(format!(
            "wrong-direction probability {wrong_prob} outside [0,1]"
        )));
    }
    for r in [left_reward, right_reward] {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::param(format!("chain reward {r} outside [0,1]")));
        }
    }
    let s = length;
    let a = 2;
    let mut one_step = vec![0.0; s * a * s];
    let mut one_reward = vec![0.0; s * a];
    let left = |x: usize| x.saturating_sub(1);
    let right = |x: usize| (x + 1).min(s - 1);
    for x in 0..s {
        let r = if x == 0 {
            left_reward
        } else if x == s - 1 {
            right_reward
        } else {
            0.0
        };
        for act in 0..a {
            let (good, bad) = if act == 0 {
                (left(x), right(x))
            } else {
                (right(x), left(x))
            };
            let row = &mut one_step[(x * a + act) * s..(x * a + act + 1) * s];
            row[good] += 1.0 - wrong_prob;
            row[bad] += wrong_prob;
            one_reward[x * a + act] = r;
        }
    }
    TabularMdpSpec::new(s, a, horizon, 0, one_step.repeat(horizon), one_reward.repeat(horizon))
}

/// Random MDP with Dirichlet(1, ..., 1) transition rows and uniform rewards.
pub fn random_mdp(states: usize, actions: usize, horizon: usize, rng: &mut Rng) -> Result<TabularMdpSpec> {
    let ones = vec![1.0; states];
    let mut transition = Vec::with_capacity(horizon * states * actions * states);
    for _ in 0..horizon * states * actions {
        transition.extend(rng.sample_dirichlet(&ones)?);
    }
    let reward = (0..horizon * states * actions).map(|_| rng.uniform()).collect();
    TabularMdpSpec::new(states, actions, horizon, 0, transition, reward)
}
