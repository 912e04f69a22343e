use super::optql::simplified_bonus;
use super::{Agent, TabularAgent, TabularTask};
use crate::policy::{argmax, max_value, Policy, PolicySnapshot};
use crate::samplers::{BetaParams, Rng};

/// Visit counts of observed transitions, laid out `[H][S][A][S]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalModel {
    states: usize,
    counts: Vec<u64>,
    visits: Vec<u64>,
}

impl EmpiricalModel {
    pub fn new(task: &TabularTask) -> Self {
        Self {
            states: task.states,
            counts: vec![0; task.cells() * task.states],
            visits: vec![0; task.cells()],
        }
    }

    pub fn record(&mut self, cell: usize, next_state: usize) {
        self.counts[cell * self.states + next_state] += 1;
        self.visits[cell] += 1;
    }

    /// Overwrites the counts of one `(h, s, a)` cell.
    pub fn set_counts(&mut self, cell: usize, counts: &[u64]) {
        assert_eq!(counts.len(), self.states);
        self.counts[cell * self.states..(cell + 1) * self.states].copy_from_slice(counts);
        self.visits[cell] = counts.iter().sum();
    }

    pub fn visits(&self, cell: usize) -> u64 {
        self.visits[cell]
    }

    pub fn counts(&self, cell: usize) -> &[u64] {
        &self.counts[cell * self.states..(cell + 1) * self.states]
    }

    /// `p̂ · v`, with the uniform distribution for unvisited cells.
    pub fn expected(&self, cell: usize, v: &[f64]) -> f64 {
        let n = self.visits[cell];
        if n == 0 {
            return v.iter().sum::<f64>() / self.states as f64;
        }
        let dot: f64 = self.counts(cell).iter().zip(v).map(|(c, x)| *c as f64 * x).sum();
        dot / n as f64
    }
}

/// Backward induction where `q(cell, step, v_next)` gives the Q-value of one cell.
/// Values are clipped to `[0, H - h]` when `clip` is set. Returns `(q, v)` with
/// `v` laid out `[H + 1][S]`.
fn backward(task: &TabularTask, clip: bool, mut q_of: impl FnMut(usize, usize, &[f64]) -> f64) -> (Vec<f64>, Vec<f64>) {
    let (h_max, s_n, a_n) = (task.horizon, task.states, task.actions);
    let mut q = vec![0.0; task.cells()];
    let mut v = vec![0.0; (h_max + 1) * s_n];
    for h in (0..h_max).rev() {
        let (head, tail) = v.split_at_mut((h + 1) * s_n);
        let v_next = &tail[..s_n];
        for s in 0..s_n {
            let c0 = task.index(h, s, 0);
            for a in 0..a_n {
                q[c0 + a] = q_of(c0 + a, h, v_next);
            }
            let best = max_value(&q[c0..c0 + a_n]);
            head[h * s_n + s] = if clip {
                best.clamp(0.0, (h_max - h) as f64)
            } else {
                best
            };
        }
    }
    (q, v)
}

/// Optimistic planning `Q = r + bonus + p̂ V`, values clipped to `[0, H - h]`.
pub fn optimistic_plan(task: &TabularTask, model: &EmpiricalModel) -> (Vec<f64>, Vec<f64>) {
    backward(task, true, |c, h, v_next| {
        let n = model.visits(c) as usize;
        let (s, a) = ((c / task.actions) % task.states, c % task.actions);
        task.reward(h, s, a) + simplified_bonus(task.horizon - h, n) + model.expected(c, v_next)
    })
}

/// UCBVI. In greedy mode it skips full replanning and instead backs up the
/// whole action row of each visited `(h, s)` in real time.
#[derive(Clone, Debug)]
pub struct Ucbvi {
    task: TabularTask,
    model: EmpiricalModel,
    greedy: bool,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl Ucbvi {
    pub fn new(task: TabularTask) -> Self {
        Self::build(task, false)
    }

    pub fn greedy(task: TabularTask) -> Self {
        Self::build(task, true)
    }

    fn build(task: TabularTask, greedy: bool) -> Self {
        let mut v = vec![0.0; (task.horizon + 1) * task.states];
        for h in 0..task.horizon {
            for s in 0..task.states {
                v[h * task.states + s] = (task.horizon - h) as f64;
            }
        }
        let q = (0..task.cells())
            .map(|c| (task.horizon - c / (task.states * task.actions)) as f64)
            .collect();
        Self {
            model: EmpiricalModel::new(&task),
            task,
            greedy,
            q,
            v,
        }
    }

    pub fn model(&self) -> &EmpiricalModel {
        &self.model
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    /// Optimistic value `V̄_h(s)` held by the agent.
    pub fn value(&self, step: usize, state: usize) -> f64 {
        self.v[step * self.task.states + state]
    }

    /// Optimistic Q-values of one row, bootstrapped from the stored `V̄_{h+1}`.
    fn row_backup(&self, step: usize, state: usize, out: &mut [f64]) {
        let s_n = self.task.states;
        let v_next = &self.v[(step + 1) * s_n..(step + 2) * s_n];
        for (a, o) in out.iter_mut().enumerate() {
            let c = self.task.index(step, state, a);
            let n = self.model.visits(c) as usize;
            *o = self.task.reward(step, state, a)
                + simplified_bonus(self.task.horizon - step, n)
                + self.model.expected(c, v_next);
        }
    }
}

impl Agent<usize> for Ucbvi {
    fn name(&self) -> &'static str {
        if self.greedy {
            "greedy_ucbvi"
        } else {
            "ucbvi"
        }
    }

    fn begin_episode(&mut self) {
        if !self.greedy {
            (self.q, self.v) = optimistic_plan(&self.task, &self.model);
        }
    }

    fn act(&mut self, step: usize, state: &usize) -> usize {
        let c0 = self.task.index(step, *state, 0);
        let a_n = self.task.actions;
        if self.greedy {
            let mut row = vec![0.0; a_n];
            self.row_backup(step, *state, &mut row);
            self.q[c0..c0 + a_n].copy_from_slice(&row);
            self.v[step * self.task.states + state] = max_value(&row).clamp(0.0, (self.task.horizon - step) as f64);
        }
        argmax(&self.q[c0..c0 + a_n])
    }

    fn observe(&mut self, step: usize, state: &usize, action: usize, _reward: f64, next_state: &usize) {
        self.model.record(self.task.index(step, *state, action), *next_state);
    }
}

impl TabularAgent for Ucbvi {
    fn policy_snapshot(&self) -> PolicySnapshot {
        let t = &self.task;
        if !self.greedy {
            return PolicySnapshot::Deterministic(Policy::greedy(t.horizon, t.states, t.actions, &self.q));
        }
        // Rows are backed up from V̄_{h+1}, which no earlier step of the
        // same episode modifies, so the snapshot can be computed up front.
        let mut q = vec![0.0; t.cells()];
        for h in 0..t.horizon {
            for s in 0..t.states {
                let c0 = t.index(h, s, 0);
                self.row_backup(h, s, &mut q[c0..c0 + t.actions]);
            }
        }
        PolicySnapshot::Deterministic(Policy::greedy(t.horizon, t.states, t.actions, &q))
    }
}

/// Draw from the transition posterior `Dirichlet(1/S + counts)`.
pub fn posterior_row(counts: &[u64], rng: &mut Rng) -> Vec<f64> {
    let prior = 1.0 / counts.len() as f64;
    let alphas: Vec<f64> = counts.iter().map(|c| prior + *c as f64).collect();
    let mut out = vec![0.0; counts.len()];
    rng.dirichlet_unchecked(&alphas, &mut out);
    out
}

/// Posterior sampling: plan in one MDP drawn from the posterior each episode.
#[derive(Clone, Debug)]
pub struct Psrl {
    task: TabularTask,
    model: EmpiricalModel,
    rng: Rng,
    q: Vec<f64>,
    sample_rewards: bool,
    successes: Vec<u64>,
    failures: Vec<u64>,
}

impl Psrl {
    pub fn new(task: TabularTask, rng: &Rng) -> Self {
        Self {
            model: EmpiricalModel::new(&task),
            rng: rng.derive("psrl"),
            q: vec![0.0; task.cells()],
            sample_rewards: false,
            successes: vec![0; task.cells()],
            failures: vec![0; task.cells()],
            task,
        }
    }

    /// Replaces the known rewards by draws from a Beta(1, 1)-prior posterior
    /// fed with Bernoulli-randomized observations.
    pub fn with_reward_posterior(mut self) -> Self {
        self.sample_rewards = true;
        self
    }

    pub fn reward_posterior(&self, step: usize, state: usize, action: usize) -> BetaParams {
        let c = self.task.index(step, state, action);
        BetaParams::new(1.0 + self.successes[c] as f64, 1.0 + self.failures[c] as f64).expect("positive counts")
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }
}

impl Agent<usize> for Psrl {
    fn name(&self) -> &'static str {
        "psrl"
    }

    fn begin_episode(&mut self) {
        let task = &self.task;
        let s_n = task.states;
        let mut rewards = vec![0.0; task.cells()];
        let mut rows = vec![0.0; task.cells() * s_n];
        let mut alphas = vec![0.0; s_n];
        for c in 0..task.cells() {
            rewards[c] = if self.sample_rewards {
                self.rng
                    .beta(1.0 + self.successes[c] as f64, 1.0 + self.failures[c] as f64)
            } else {
                let h = c / (s_n * task.actions);
                task.reward(h, (c / task.actions) % s_n, c % task.actions)
            };
            for (a, n) in alphas.iter_mut().zip(self.model.counts(c)) {
                *a = 1.0 / s_n as f64 + *n as f64;
            }
            self.rng.dirichlet_unchecked(&alphas, &mut rows[c * s_n..(c + 1) * s_n]);
        }
        let (q, _) = backward(task, false, |c, _, v_next| {
            let p = &rows[c * s_n..(c + 1) * s_n];
            rewards[c] + p.iter().zip(v_next).map(|(a, b)| a * b).sum::<f64>()
        });
        self.q = q;
    }

    fn act(&mut self, step: usize, state: &usize) -> usize {
        let c0 = self.task.index(step, *state, 0);
        argmax(&self.q[c0..c0 + self.task.actions])
    }

    fn observe(&mut self, step: usize, state: &usize, action: usize, reward: f64, next_state: &usize) {
        let c = self.task.index(step, *state, action);
        self.model.record(c, *next_state);
        if self.sample_rewards {
            if self.rng.uniform() < reward {
                self.successes[c] += 1;
            } else {
                self.failures[c] += 1;
            }
        }
    }
}

impl TabularAgent for Psrl {
    fn policy_snapshot(&self) -> PolicySnapshot {
        let t = &self.task;
        PolicySnapshot::Deterministic(Policy::greedy(t.horizon, t.states, t.actions, &self.q))
    }
}

/// Randomized least-squares value iteration: certainty-equivalent planning
/// with Gaussian reward perturbations scaled by the simplified bonus.
#[derive(Clone, Debug)]
pub struct Rlsvi {
    task: TabularTask,
    model: EmpiricalModel,
    rng: Rng,
    q: Vec<f64>,
}

impl Rlsvi {
    pub fn new(task: TabularTask, rng: &Rng) -> Self {
        Self {
            model: EmpiricalModel::new(&task),
            rng: rng.derive("rlsvi"),
            q: vec![0.0; task.cells()],
            task,
        }
    }

    pub fn model(&self) -> &EmpiricalModel {
        &self.model
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    /// Noise standard deviation at one cell.
    pub fn noise_std(&self, step: usize, state: usize, action: usize) -> f64 {
        let n = self.model.visits(self.task.index(step, state, action)) as usize;
        simplified_bonus(self.task.horizon - step, n)
    }

    /// Plans with rewards `r + noise[cell]` and stores the resulting Q-table.
    pub fn plan_with_noise(&mut self, noise: &[f64]) {
        let task = &self.task;
        let model = &self.model;
        let (q, _) = backward(task, false, |c, h, v_next| {
            let (s, a) = ((c / task.actions) % task.states, c % task.actions);
            task.reward(h, s, a) + noise[c] + model.expected(c, v_next)
        });
        self.q = q;
    }
}

impl Agent<usize> for Rlsvi {
    fn name(&self) -> &'static str {
        "rlsvi"
    }

    fn begin_episode(&mut self) {
        let t = &self.task;
        let mut noise = vec![0.0; t.cells()];
        for (c, x) in noise.iter_mut().enumerate() {
            let h = c / (t.states * t.actions);
            let n = self.model.visits(c) as usize;
            *x = simplified_bonus(t.horizon - h, n) * self.rng.standard_normal();
        }
        self.plan_with_noise(&noise);
    }

    fn act(&mut self, step: usize, state: &usize) -> usize {
        let c0 = self.task.index(step, *state, 0);
        argmax(&self.q[c0..c0 + self.task.actions])
    }

    fn observe(&mut self, step: usize, state: &usize, action: usize, _reward: f64, next_state: &usize) {
        self.model.record(self.task.index(step, *state, action), *next_state);
    }
}

impl TabularAgent for Rlsvi {
    fn policy_snapshot(&self) -> PolicySnapshot {
        let t = &self.task;
        PolicySnapshot::Deterministic(Policy::greedy(t.horizon, t.states, t.actions, &self.q))
    }
}
