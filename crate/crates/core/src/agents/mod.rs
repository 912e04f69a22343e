//! Tabular learners behind a single act/observe contract.
//!
//! Steps are 0-based (`0..H`). Every agent knows the reward table (rewards
//! are treated as known) but never the transition kernel.

mod ensemble;
mod fixed;
mod model_based;
mod optql;
mod params;
mod randql;
mod staged;
mod weights;

pub use ensemble::EnsembleQ;
pub use fixed::{FixedPolicyAgent, UniformRandomAgent};
pub use model_based::{optimistic_plan, posterior_row, EmpiricalModel, Psrl, Rlsvi, Ucbvi};
pub use optql::{optql_learning_rate, simplified_bonus, OptQL};
pub(crate) use params::{check_delta, log_17_16};
pub use params::{theory_c0, theory_cj, HyperParams, ParamMode, PriorInit, StageSchedule};
pub use randql::{RandQL, SampledRandQL};
pub use staged::{stage_length, StagedRandQL};
pub use weights::{collect_randql_weights, collect_stage_weights, WeightVector};

use crate::envs::TabularMdpSpec;
use crate::policy::PolicySnapshot;

/// Interaction contract shared by tabular and metric agents.
pub trait Agent<S> {
    fn name(&self) -> &'static str;

    /// Called once before the first step of every episode.
    fn begin_episode(&mut self) {}

    fn act(&mut self, step: usize, state: &S) -> usize;

    fn observe(&mut self, step: usize, state: &S, action: usize, reward: f64, next_state: &S);
}

/// Tabular agents additionally report the policy they will follow next episode.
pub trait TabularAgent: Agent<usize> {
    /// Policy the agent will follow from the current point until the episode ends.
    /// The harness calls this right after [`Agent::begin_episode`].
    fn policy_snapshot(&self) -> PolicySnapshot;
}

/// What a tabular agent is allowed to know about the task: its dimensions and rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularTask {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    reward: Vec<f64>,
}

impl TabularTask {
    pub fn from_spec(spec: &TabularMdpSpec) -> Self {
        Self {
            states: spec.states(),
            actions: spec.actions(),
            horizon: spec.horizon(),
            reward: spec.reward_table().to_vec(),
        }
    }

    pub fn reward(&self, step: usize, state: usize, action: usize) -> f64 {
        self.reward[self.index(step, state, action)]
    }

    pub fn index(&self, step: usize, state: usize, action: usize) -> usize {
        (step * self.states + state) * self.actions + action
    }

    /// Number of `(step, state, action)` cells.
    pub fn cells(&self) -> usize {
        self.horizon * self.states * self.actions
    }
}
