use super::{Agent, TabularAgent};
use crate::policy::{Policy, PolicySnapshot};
use crate::samplers::Rng;

/// Follows a given Markov policy and never learns. Useful as a reference
/// curve: playing the optimal policy yields zero exact regret.
#[derive(Clone, Debug)]
pub struct FixedPolicyAgent {
    policy: Policy,
}

impl FixedPolicyAgent {
    pub fn new(policy: Policy) -> Self {
        Self { policy }
    }
}

impl Agent<usize> for FixedPolicyAgent {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn act(&mut self, step: usize, state: &usize) -> usize {
        self.policy.action(step, *state)
    }

    fn observe(&mut self, _: usize, _: &usize, _: usize, _: f64, _: &usize) {}
}

impl TabularAgent for FixedPolicyAgent {
    fn policy_snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Deterministic(self.policy.clone())
    }
}

/// Uniformly random actions; works for any state type.
#[derive(Clone, Debug)]
pub struct UniformRandomAgent {
    horizon: usize,
    states: usize,
    actions: usize,
    rng: Rng,
}

impl UniformRandomAgent {
    /// `states` only matters for tabular policy snapshots.
    pub fn new(horizon: usize, states: usize, actions: usize, rng: &Rng) -> Self {
        Self {
            horizon,
            states,
            actions,
            rng: rng.derive("uniform"),
        }
    }
}

impl<S> Agent<S> for UniformRandomAgent {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn act(&mut self, _: usize, _: &S) -> usize {
        self.rng.below(self.actions)
    }

    fn observe(&mut self, _: usize, _: &S, _: usize, _: f64, _: &S) {}
}

impl TabularAgent for UniformRandomAgent {
    fn policy_snapshot(&self) -> PolicySnapshot {
        let p = 1.0 / self.actions as f64;
        PolicySnapshot::Stochastic(vec![p; self.horizon * self.states * self.actions])
    }
}
