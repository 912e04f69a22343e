use super::ensemble::EnsembleQ;
use super::{Agent, HyperParams, PriorInit, StageSchedule, TabularAgent, TabularTask};
use crate::error::Result;
use crate::policy::{argmax, Policy, PolicySnapshot};
use crate::samplers::Rng;

/// Length `e_k` of stage `k`.
pub fn stage_length(k: usize, horizon: usize, schedule: StageSchedule) -> usize {
    let growth = (1.0 + 1.0 / horizon as f64).powi(k.min(i32::MAX as usize) as i32);
    match schedule {
        StageSchedule::WithHFactor => ((growth * horizon as f64).floor() as usize).max(1),
        StageSchedule::WithoutHFactor => (growth.floor() as usize).max(1),
    }
}

pub(crate) fn staged_init(task: &TabularTask, r0: f64, init: PriorInit) -> Vec<f64> {
    let mut values = vec![0.0; task.cells()];
    for h in 0..task.horizon {
        for s in 0..task.states {
            for a in 0..task.actions {
                values[task.index(h, s, a)] = match init {
                    PriorInit::Stepwise => task.reward(h, s, a) + r0 * (task.horizon - h - 1) as f64,
                    PriorInit::Flat => r0 * task.horizon as f64,
                };
            }
        }
    }
    values
}

/// Staged ensemble Q-learning: temporary Q-values are averaged with
/// `Beta(1/kappa, (n + n0)/kappa)` rates within a stage, and the acting
/// Q-values are refreshed to their ensemble maximum when the stage ends.
#[derive(Clone, Debug)]
pub struct StagedRandQL {
    task: TabularTask,
    hp: HyperParams,
    q: EnsembleQ,
    init: Vec<f64>,
    rngs: Vec<Rng>,
    rates: Vec<f64>,
    targets: Vec<f64>,
}

impl StagedRandQL {
    pub fn new(task: TabularTask, hp: HyperParams, rng: &Rng) -> Result<Self> {
        hp.validate()?;
        let j = hp.ensemble_size;
        let init = staged_init(&task, hp.r0, hp.prior_init);
        let q = EnsembleQ::new(task.horizon, task.states, task.actions, j, &init);
        Ok(Self {
            rngs: (0..j).map(|m| rng.derive_indexed("member", m as u64)).collect(),
            task,
            hp,
            q,
            init,
            rates: vec![0.0; j],
            targets: vec![0.0; j],
        })
    }

    pub fn ensemble(&self) -> &EnsembleQ {
        &self.q
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    /// Current optimistic value `V̄_h(s)`.
    pub fn value(&self, step: usize, state: usize) -> f64 {
        self.q.value(step, state)
    }

    /// Update with explicit learning rates. Returns whether the stage rolled over.
    pub fn apply(
        &mut self,
        step: usize,
        state: usize,
        action: usize,
        reward: f64,
        next_state: usize,
        rates: &[f64],
    ) -> bool {
        let cell = self.q.cell(step, state, action);
        let target = reward + self.q.value(step + 1, next_state);
        self.targets.fill(target);
        let targets = std::mem::take(&mut self.targets);
        self.q.blend(cell, rates, &targets);
        self.targets = targets;
        self.q.stage_count[cell] += 1;
        self.q.total_count[cell] += 1;
        let length = stage_length(self.q.stage_index[cell], self.task.horizon, self.hp.stage_schedule);
        if self.q.stage_count[cell] < length {
            return false;
        }
        self.q.refresh_policy(cell);
        self.q.reset_temp(cell, self.init[cell]);
        self.q.stage_count[cell] = 0;
        self.q.stage_index[cell] += 1;
        true
    }
}

impl Agent<usize> for StagedRandQL {
    fn name(&self) -> &'static str {
        "staged_randql"
    }

    fn act(&mut self, step: usize, state: &usize) -> usize {
        argmax(self.q.policy_row(step, *state))
    }

    fn observe(&mut self, step: usize, state: &usize, action: usize, reward: f64, next_state: &usize) {
        let cell = self.q.cell(step, *state, action);
        let a = 1.0 / self.hp.kappa;
        let b = (self.q.stage_count[cell] as f64 + self.hp.n0) / self.hp.kappa;
        let mut rates = std::mem::take(&mut self.rates);
        for (w, rng) in rates.iter_mut().zip(&mut self.rngs) {
            *w = rng.beta(a, b);
        }
        self.apply(step, *state, action, reward, *next_state, &rates);
        self.rates = rates;
    }
}

impl TabularAgent for StagedRandQL {
    fn policy_snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Deterministic(Policy::greedy(
            self.task.horizon,
            self.task.states,
            self.task.actions,
            &self.q.policy_q,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::chain;

    #[test]
    fn stage_length_examples() {
        assert_eq!(stage_length(0, 50, StageSchedule::WithHFactor), 50);
        assert_eq!(stage_length(2, 2, StageSchedule::WithHFactor), 4);
        assert_eq!(stage_length(1, 50, StageSchedule::WithoutHFactor), 1);
        assert_eq!(stage_length(3, 1, StageSchedule::WithHFactor), 8);
        // floor(1.02^35) = 1, floor(1.02^36) = 2
        assert_eq!(stage_length(35, 50, StageSchedule::WithoutHFactor), 1);
        assert_eq!(stage_length(36, 50, StageSchedule::WithoutHFactor), 2);
    }

    fn agent(schedule: StageSchedule) -> (StagedRandQL, crate::envs::TabularMdpSpec) {
        let spec = chain(3, 4, 0.1, 0.05, 1.0).unwrap();
        let hp = HyperParams {
            ensemble_size: 3,
            stage_schedule: schedule,
            ..HyperParams::practical(3)
        };
        (
            StagedRandQL::new(TabularTask::from_spec(&spec), hp, &Rng::new(5)).unwrap(),
            spec,
        )
    }

    #[test]
    fn rollover_writes_policy_once_and_resets() {
        let (mut a, _) = agent(StageSchedule::WithHFactor);
        let cell = a.q.cell(0, 0, 1);
        let before = a.q.policy_q[cell];
        // First stage has length 4.
        for i in 0..3 {
            assert!(!a.apply(0, 0, 1, 0.0, 0, &[0.5, 0.5, 0.5]), "update {i}");
            assert_eq!(a.q.policy_q[cell], before);
        }
        assert!(a.apply(0, 0, 1, 0.0, 0, &[0.5, 0.5, 0.5]));
        assert_ne!(a.q.policy_q[cell], before);
        assert_eq!(a.q.stage_count[cell], 0);
        assert_eq!(a.q.stage_index[cell], 1);
        for j in 0..3 {
            assert_eq!(a.q.temp(j, cell), a.init[cell]);
        }
    }

    #[test]
    fn bookkeeping_matches_stage_lengths() {
        for schedule in [StageSchedule::WithHFactor, StageSchedule::WithoutHFactor] {
            let (mut a, spec) = agent(schedule);
            let mut env = Rng::new(8);
            for _ in 0..300 {
                a.begin_episode();
                let mut s = 0;
                for h in 0..4 {
                    let x = a.act(h, &s);
                    let o = spec.step(h, s, x, &mut env);
                    a.observe(h, &s, x, o.reward, &o.next_state);
                    s = o.next_state;
                }
            }
            for c in 0..a.q.cells() {
                let done: usize = (0..a.q.stage_index[c]).map(|k| stage_length(k, 4, schedule)).sum();
                assert_eq!(a.q.total_count[c], done + a.q.stage_count[c]);
                assert!(a.q.stage_count[c] < stage_length(a.q.stage_index[c], 4, schedule));
                assert!(a.q.policy_q[c] >= 0.0 && a.q.policy_q[c] <= 2.0 * 4.0);
            }
        }
    }

    #[test]
    fn stepwise_and_flat_initialization() {
        let spec = chain(3, 4, 0.1, 0.05, 1.0).unwrap();
        let task = TabularTask::from_spec(&spec);
        let v = staged_init(&task, 2.0, PriorInit::Stepwise);
        assert_eq!(v[task.index(3, 2, 0)], spec.reward(3, 2, 0));
        assert_eq!(v[task.index(0, 0, 0)], spec.reward(0, 0, 0) + 6.0);
        assert!(staged_init(&task, 2.0, PriorInit::Flat).iter().all(|x| *x == 8.0));
    }
}
