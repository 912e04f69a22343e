use super::{Agent, TabularAgent, TabularTask};
use crate::policy::{argmax, max_value, Policy, PolicySnapshot};

/// Simplified Hoeffding bonus `min(sqrt(1/n) + remaining/n, remaining)`, where
/// `remaining` counts the steps left including the current one. `n = 0` gives `remaining`.
pub fn simplified_bonus(remaining: usize, n: usize) -> f64 {
    let r = remaining as f64;
    if n == 0 {
        return r;
    }
    let n = n as f64;
    ((1.0 / n).sqrt() + r / n).min(r)
}

/// Learning rate `(H + 1)/(H + n)`, with `n` the count after the current visit.
pub fn optql_learning_rate(horizon: usize, n: usize) -> f64 {
    (horizon as f64 + 1.0) / (horizon + n) as f64
}

/// Optimistic Q-learning with the simplified bonus.
#[derive(Clone, Debug)]
pub struct OptQL {
    task: TabularTask,
    q: Vec<f64>,
    counts: Vec<usize>,
}

impl OptQL {
    pub fn new(task: TabularTask) -> Self {
        let mut q = vec![0.0; task.cells()];
        for h in 0..task.horizon {
            for s in 0..task.states {
                for a in 0..task.actions {
                    q[task.index(h, s, a)] = (task.horizon - h) as f64;
                }
            }
        }
        Self {
            counts: vec![0; task.cells()],
            task,
            q,
        }
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    /// `min(max_a Q_h(s, a), H - h)`, zero past the horizon.
    pub fn value(&self, step: usize, state: usize) -> f64 {
        if step >= self.task.horizon {
            return 0.0;
        }
        let c = self.task.index(step, state, 0);
        max_value(&self.q[c..c + self.task.actions]).clamp(0.0, (self.task.horizon - step) as f64)
    }
}

impl Agent<usize> for OptQL {
    fn name(&self) -> &'static str {
        "optql"
    }

    fn act(&mut self, step: usize, state: &usize) -> usize {
        let c = self.task.index(step, *state, 0);
        argmax(&self.q[c..c + self.task.actions])
    }

    fn observe(&mut self, step: usize, state: &usize, action: usize, reward: f64, next_state: &usize) {
        let c = self.task.index(step, *state, action);
        self.counts[c] += 1;
        let n = self.counts[c];
        let alpha = optql_learning_rate(self.task.horizon, n);
        let bonus = simplified_bonus(self.task.horizon - step, n);
        let target = reward + self.value(step + 1, *next_state) + bonus;
        self.q[c] = (1.0 - alpha) * self.q[c] + alpha * target;
    }
}

impl TabularAgent for OptQL {
    fn policy_snapshot(&self) -> PolicySnapshot {
        PolicySnapshot::Deterministic(Policy::greedy(
            self.task.horizon,
            self.task.states,
            self.task.actions,
            &self.q,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::chain;

    #[test]
    fn bonus_examples() {
        assert_eq!(simplified_bonus(1, 1), 1.0);
        assert_eq!(simplified_bonus(10, 4), 3.0);
        assert_eq!(simplified_bonus(7, 0), 7.0);
    }

    #[test]
    fn first_visit_uses_full_rate() {
        let spec = chain(2, 3, 0.0, 0.0, 1.0).unwrap();
        let task = TabularTask::from_spec(&spec);
        let mut agent = OptQL::new(task.clone());
        assert_eq!(optql_learning_rate(3, 1), 1.0);
        agent.observe(2, &0, 1, 0.0, &1);
        // Last step: target = r + 0 + bonus(1, 1) = 1.
        assert_eq!(agent.q_table()[task.index(2, 0, 1)], 1.0);
        agent.observe(0, &0, 1, 0.0, &1);
        // Target = 0 + min(V_1(1) = 2, 2) + bonus(3, 1) = 2 + 3 clipped to bonus 3.
        assert_eq!(agent.q_table()[task.index(0, 0, 1)], 5.0);
    }

    #[test]
    fn values_stay_clipped() {
        let spec = chain(3, 4, 0.1, 0.05, 1.0).unwrap();
        let mut agent = OptQL::new(TabularTask::from_spec(&spec));
        let mut rng = crate::samplers::Rng::new(1);
        for _ in 0..200 {
            let mut s = 0;
            for h in 0..4 {
                let a = agent.act(h, &s);
                let o = spec.step(h, s, a, &mut rng);
                agent.observe(h, &s, a, o.reward, &o.next_state);
                s = o.next_state;
                assert!((0.0..=(4 - h) as f64).contains(&agent.value(h, s.min(2))));
            }
        }
    }
}
