use super::ensemble::EnsembleQ;
use super::{Agent, HyperParams, TabularAgent, TabularTask};
use crate::error::Result;
use crate::policy::{argmax, Policy, PolicySnapshot};
use crate::samplers::Rng;

fn member_streams(rng: &Rng, members: usize) -> Vec<Rng> {
    (0..members).map(|j| rng.derive_indexed("member", j as u64)).collect()
}

/// Initial values `r(s, a) + r0 (H - h)`.
fn optimistic_init(task: &TabularTask, r0: f64) -> Vec<f64> {
    let mut init = vec![0.0; task.cells()];
    for h in 0..task.horizon {
        for s in 0..task.states {
            for a in 0..task.actions {
                init[task.index(h, s, a)] = task.reward(h, s, a) + r0 * (task.horizon - h) as f64;
            }
        }
    }
    init
}

/// Draws `(rho_j, w_j)` for every member: `rho ~ Beta(n, n0)`, `w ~ Beta(H, n)`.
fn draw_mixture(rngs: &mut [Rng], horizon: usize, n: usize, n0: f64, mix: &mut [f64], rates: &mut [f64]) {
    let n = n as f64;
    for (j, rng) in rngs.iter_mut().enumerate() {
        mix[j] = rng.beta(n, n0);
        rates[j] = rng.beta(horizon as f64, n);
    }
}

/// Ensemble Q-learning with randomized learning rates and a mixture toward a prior target.
#[derive(Clone, Debug)]
pub struct RandQL {
    task: TabularTask,
    hp: HyperParams,
    q: EnsembleQ,
    rngs: Vec<Rng>,
    mix: Vec<f64>,
    rates: Vec<f64>,
    targets: Vec<f64>,
}

impl RandQL {
    pub fn new(task: TabularTask, hp: HyperParams, rng: &Rng) -> Result<Self> {
        hp.validate()?;
        let j = hp.ensemble_size;
        let init = optimistic_init(&task, hp.r0);
        let q = EnsembleQ::new(task.horizon, task.states, task.actions, j, &init);
        Ok(Self {
            rngs: member_streams(rng, j),
            task,
            hp,
            q,
            mix: vec![0.0; j],
            rates: vec![0.0; j],
            targets: vec![0.0; j],
        })
    }

    pub fn ensemble(&self) -> &EnsembleQ {
        &self.q
    }

    /// Update with explicit mixture and learning-rate draws.
    #[allow(clippy::too_many_arguments)]
    pub fn apply(
        &mut self,
        step: usize,
        state: usize,
        action: usize,
        reward: f64,
        next_state: usize,
        mix: &[f64],
        rates: &[f64],
    ) {
        let cell = self.q.cell(step, state, action);
        let next = reward + self.q.value(step + 1, next_state);
        let prior = reward + self.hp.r0 * (self.task.horizon - step - 1) as f64;
        for (t, rho) in self.targets.iter_mut().zip(mix) {
            *t = rho * next + (1.0 - rho) * prior;
        }
        self.q.blend(cell, rates, &self.targets);
        self.q.refresh_policy(cell);
        self.q.total_count[cell] += 1;
    }
}

impl Agent<usize> for RandQL {
    fn name(&self) -> &'static str {
        "randql"
    }

    fn act(&mut self, step: usize, state: &usize) -> usize {
        argmax(self.q.policy_row(step, *state))
    }

    fn observe(&mut self, step: usize, state: &usize, action: usize, reward: f64, next_state: &usize) {
        let n = self.q.total_count[self.q.cell(step, *state, action)];
        let (mut mix, mut rates) = (std::mem::take(&mut self.mix), std::mem::take(&mut self.rates));
        draw_mixture(&mut self.rngs, self.task.horizon, n, self.hp.n0, &mut mix, &mut rates);
        self.apply(step, *state, action, reward, *next_state, &mix, &rates);
        (self.mix, self.rates) = (mix, rates);
    }
}

impl TabularAgent for RandQL {
    fn policy_snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Deterministic(Policy::greedy(
            self.task.horizon,
            self.task.states,
            self.task.actions,
            &self.q.policy_q,
        ))
    }
}

/// RandQL variant that follows one uniformly drawn ensemble member per episode,
/// with every member bootstrapping from its own value table.
#[derive(Clone, Debug)]
pub struct SampledRandQL {
    task: TabularTask,
    hp: HyperParams,
    q: EnsembleQ,
    rngs: Vec<Rng>,
    selector: Rng,
    member: usize,
    mix: Vec<f64>,
    rates: Vec<f64>,
    targets: Vec<f64>,
}

impl SampledRandQL {
    pub fn new(task: TabularTask, hp: HyperParams, rng: &Rng) -> Result<Self> {
        hp.validate()?;
        let j = hp.ensemble_size;
        let init = optimistic_init(&task, hp.r0);
        let q = EnsembleQ::new(task.horizon, task.states, task.actions, j, &init);
        Ok(Self {
            rngs: member_streams(rng, j),
            selector: rng.derive("selector"),
            member: 0,
            task,
            hp,
            q,
            mix: vec![0.0; j],
            rates: vec![0.0; j],
            targets: vec![0.0; j],
        })
    }

    pub fn ensemble(&self) -> &EnsembleQ {
        &self.q
    }

    /// Member followed during the current episode.
    pub fn episode_member(&self) -> usize {
        self.member
    }

    #[allow(clippy::too_many_arguments)]
    pub fn apply(
        &mut self,
        step: usize,
        state: usize,
        action: usize,
        reward: f64,
        next_state: usize,
        mix: &[f64],
        rates: &[f64],
    ) {
        let cell = self.q.cell(step, state, action);
        let prior = reward + self.hp.r0 * (self.task.horizon - step - 1) as f64;
        for (j, (t, rho)) in self.targets.iter_mut().zip(mix).enumerate() {
            let next = reward + self.q.member_value(j, step + 1, next_state);
            *t = rho * next + (1.0 - rho) * prior;
        }
        self.q.blend(cell, rates, &self.targets);
        self.q.policy_q[cell] = self.q.temp(self.member, cell);
        self.q.total_count[cell] += 1;
    }
}

impl Agent<usize> for SampledRandQL {
    fn name(&self) -> &'static str {
        "sampled_randql"
    }

    fn begin_episode(&mut self) {
        self.member = self.selector.below(self.q.members());
    }

    fn act(&mut self, step: usize, state: &usize) -> usize {
        argmax(self.q.policy_row(step, *state))
    }

    fn observe(&mut self, step: usize, state: &usize, action: usize, reward: f64, next_state: &usize) {
        let n = self.q.total_count[self.q.cell(step, *state, action)];
        let (mut mix, mut rates) = (std::mem::take(&mut self.mix), std::mem::take(&mut self.rates));
        draw_mixture(&mut self.rngs, self.task.horizon, n, self.hp.n0, &mut mix, &mut rates);
        self.apply(step, *state, action, reward, *next_state, &mix, &rates);
        (self.mix, self.rates) = (mix, rates);
    }
}

impl TabularAgent for SampledRandQL {
    fn policy_snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Deterministic(Policy::greedy(
            self.task.horizon,
            self.task.states,
            self.task.actions,
            &self.q.policy_q,
        ))
    }
}
