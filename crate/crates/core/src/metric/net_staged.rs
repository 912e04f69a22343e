use super::cover::{Cover, DiscreteCover};
use super::params::MetricHyperParams;
use crate::agents::{stage_length, Agent, TabularAgent};
use crate::error::Result;
use crate::policy::{argmax, Policy, PolicySnapshot};
use crate::samplers::Rng;

/// Staged RandQL over a fixed cover. Q-values live on balls; values and the
/// greedy policy are computed on the fly through the quantization map.
#[derive(Clone, Debug)]
pub struct NetStagedRandQL<C: Cover> {
    cover: C,
    horizon: usize,
    hp: MetricHyperParams,
    members: usize,
    /// `[J][H][N]`
    temp_q: Vec<f64>,
    /// `[H][N]`
    policy_q: Vec<f64>,
    stage_count: Vec<usize>,
    stage_index: Vec<usize>,
    total_count: Vec<usize>,
    rngs: Vec<Rng>,
    row: Vec<f64>,
}

impl<C: Cover> NetStagedRandQL<C> {
    pub fn new(cover: C, horizon: usize, hp: MetricHyperParams, rng: &Rng) -> Result<Self> {
        hp.validate()?;
        let j = hp.base.ensemble_size;
        let cells = horizon * cover.n_balls();
        let init = hp.base.r0 * horizon as f64;
        Ok(Self {
            row: vec![0.0; cover.n_actions()],
            rngs: (0..j).map(|m| rng.derive_indexed("member", m as u64)).collect(),
            temp_q: vec![init; cells * j],
            policy_q: vec![init; cells],
            stage_count: vec![0; cells],
            stage_index: vec![0; cells],
            total_count: vec![0; cells],
            members: j,
            cover,
            horizon,
            hp,
        })
    }

    pub fn cover(&self) -> &C {
        &self.cover
    }

    fn slot(&self, step: usize, ball: usize) -> usize {
        step * self.cover.n_balls() + ball
    }

    pub fn policy_q(&self, step: usize, ball: usize) -> f64 {
        self.policy_q[self.slot(step, ball)]
    }

    pub fn total_count(&self, step: usize, ball: usize) -> usize {
        self.total_count[self.slot(step, ball)]
    }

    fn fill_row(&mut self, step: usize, state: &C::State) {
        for a in 0..self.cover.n_actions() {
            let b = self.cover.quantize(state, a);
            self.row[a] = self.policy_q[step * self.cover.n_balls() + b];
        }
    }

    /// `V̄_h(s) = max_a Q̄_h(quantize(s, a))`, zero past the horizon.
    pub fn value(&mut self, step: usize, state: &C::State) -> f64 {
        if step >= self.horizon {
            return 0.0;
        }
        self.fill_row(step, state);
        crate::policy::max_value(&self.row)
    }
}

impl<C: Cover> Agent<C::State> for NetStagedRandQL<C> {
    fn name(&self) -> &'static str {
        "net_staged_randql"
    }

    fn act(&mut self, step: usize, state: &C::State) -> usize {
        self.fill_row(step, state);
        argmax(&self.row)
    }

    fn observe(&mut self, step: usize, state: &C::State, action: usize, reward: f64, next_state: &C::State) {
        let ball = self.cover.quantize(state, action);
        let slot = self.slot(step, ball);
        let target = reward + self.value(step + 1, next_state);
        let kappa = self.hp.base.kappa;
        let n0 = self.hp.prior_count(self.stage_index[slot], self.horizon);
        let (a, b) = (1.0 / kappa, (self.stage_count[slot] as f64 + n0) / kappa);
        let cells = self.policy_q.len();
        for (j, rng) in self.rngs.iter_mut().enumerate() {
            let w = rng.beta(a, b);
            let q = &mut self.temp_q[j * cells + slot];
            *q = (1.0 - w) * *q + w * target;
        }
        self.stage_count[slot] += 1;
        self.total_count[slot] += 1;
        if self.stage_count[slot] == stage_length(self.stage_index[slot], self.horizon, self.hp.base.stage_schedule) {
            let reset = self.hp.base.r0 * self.horizon as f64;
            let mut best = f64::NEG_INFINITY;
            for j in 0..self.members {
                best = best.max(self.temp_q[j * cells + slot]);
                self.temp_q[j * cells + slot] = reset;
            }
            self.policy_q[slot] = best;
            self.stage_count[slot] = 0;
            self.stage_index[slot] += 1;
        }
    }
}

impl TabularAgent for NetStagedRandQL<DiscreteCover> {
    fn policy_snapshot(&self) -> PolicySnapshot {
        let DiscreteCover { states, actions } = self.cover;
        PolicySnapshot::Deterministic(Policy::greedy(self.horizon, states, actions, &self.policy_q))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{HyperParams, PriorInit, StageSchedule, StagedRandQL, TabularTask};
    use crate::envs::{chain, BallEnvSpec};
    use crate::metric::{EpsNet, PriorCountRule};

    #[test]
    fn discrete_cover_reproduces_staged_randql() {
        let spec = chain(3, 4, 0.2, 0.05, 1.0).unwrap();
        let base = HyperParams {
            ensemble_size: 4,
            prior_init: PriorInit::Flat,
            stage_schedule: StageSchedule::WithHFactor,
            ..HyperParams::practical(3)
        };
        let hp = MetricHyperParams {
            base: base.clone(),
            lipschitz: 0.0,
            epsilon: 0.0,
            tn0: 0.0,
            prior_count: PriorCountRule::Constant,
        };
        let root = Rng::new(17);
        let mut tab = StagedRandQL::new(TabularTask::from_spec(&spec), base, &root).unwrap();
        let mut net = NetStagedRandQL::new(DiscreteCover { states: 3, actions: 2 }, 4, hp, &root).unwrap();
        let (mut e1, mut e2) = (Rng::new(3), Rng::new(3));
        for _ in 0..200 {
            let (mut s1, mut s2) = (0usize, 0usize);
            for h in 0..4 {
                let (a1, a2) = (tab.act(h, &s1), net.act(h, &s2));
                assert_eq!(a1, a2);
                let (o1, o2) = (spec.step(h, s1, a1, &mut e1), spec.step(h, s2, a2, &mut e2));
                tab.observe(h, &s1, a1, o1.reward, &o1.next_state);
                net.observe(h, &s2, a2, o2.reward, &o2.next_state);
                s1 = o1.next_state;
                s2 = o2.next_state;
            }
        }
        assert_eq!(tab.ensemble().policy_q, net.policy_q);
    }

    #[test]
    fn runs_on_ball_and_counts_visits() {
        let env = BallEnvSpec::level(1).unwrap();
        let net = EpsNet::new(0.25, env.n_actions()).unwrap();
        let mut agent = NetStagedRandQL::new(net, env.horizon, MetricHyperParams::practical(), &Rng::new(1)).unwrap();
        let mut rng = Rng::new(2);
        for _ in 0..5 {
            let mut s = env.initial_state(&mut rng);
            for h in 0..env.horizon {
                let a = agent.act(h, &s);
                let o = env.step(s, a, &mut rng).unwrap();
                agent.observe(h, &s, a, o.reward, &o.next_state);
                s = o.next_state;
            }
        }
        let total: usize = agent.total_count.iter().sum();
        assert_eq!(total, 5 * env.horizon);
        assert!(agent
            .policy_q
            .iter()
            .all(|q| (0.0..=2.0 * env.horizon as f64).contains(q)));
    }
}
