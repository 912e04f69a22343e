use super::params::MetricHyperParams;
use super::partition::{BallRef, Partition};
use crate::agents::{optql_learning_rate, simplified_bonus, stage_length, Agent, PriorInit};
use crate::envs::BallState;
use crate::error::Result;
use crate::samplers::Rng;

/// Update law applied to the selected ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptiveRule {
    RandQL,
    StagedRandQL,
    OptQL,
}

/// Adaptive-discretization agent on the 2-D ball. All three rules share the
/// partition, the selection rule and the splitting rule.
#[derive(Clone, Debug)]
pub struct AdaptiveAgent {
    rule: AdaptiveRule,
    horizon: usize,
    hp: MetricHyperParams,
    partition: Partition,
    rngs: Vec<Rng>,
}

impl AdaptiveAgent {
    /// Ensemble agent with rates `Beta(H/kappa, n/kappa)` and prior mixture `Beta(n/kappa, n0/kappa)`.
    pub fn randql(horizon: usize, actions: usize, hp: MetricHyperParams, rng: &Rng) -> Result<Self> {
        Self::build(AdaptiveRule::RandQL, horizon, actions, hp, rng)
    }

    pub fn staged(horizon: usize, actions: usize, hp: MetricHyperParams, rng: &Rng) -> Result<Self> {
        Self::build(AdaptiveRule::StagedRandQL, horizon, actions, hp, rng)
    }

    /// Bonus-based baseline; only `horizon` and `actions` matter.
    pub fn optql(horizon: usize, actions: usize) -> Self {
        let hp = MetricHyperParams {
            base: crate::agents::HyperParams {
                ensemble_size: 1,
                ..MetricHyperParams::practical().base
            },
            ..MetricHyperParams::practical()
        };
        Self::build(AdaptiveRule::OptQL, horizon, actions, hp, &Rng::new(0)).expect("valid defaults")
    }

    fn build(rule: AdaptiveRule, horizon: usize, actions: usize, hp: MetricHyperParams, rng: &Rng) -> Result<Self> {
        hp.validate()?;
        let (members, partition) = match rule {
            AdaptiveRule::OptQL => (0, Partition::new(horizon, actions, 0, |h| (horizon - h) as f64)),
            _ => {
                let j = hp.base.ensemble_size;
                (j, Partition::new(horizon, actions, j, |h| prior_value(&hp, horizon, h)))
            }
        };
        Ok(Self {
            rule,
            horizon,
            partition,
            rngs: (0..members).map(|m| rng.derive_indexed("member", m as u64)).collect(),
            hp,
        })
    }

    pub fn rule(&self) -> AdaptiveRule {
        self.rule
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    fn update_randql(&mut self, ball: BallRef, target: f64) {
        let kappa = self.hp.base.kappa;
        let prior = prior_value(&self.hp, self.horizon, ball.step);
        let h = self.horizon as f64;
        let n0 = self.hp.base.n0;
        let node = self.partition.node_mut(ball);
        let n = node.count as f64;
        for (q, rng) in node.temp_q.iter_mut().zip(&mut self.rngs) {
            let rho = rng.beta(n / kappa, n0 / kappa);
            let w = rng.beta(h / kappa, n / kappa);
            let mixed = rho * target + (1.0 - rho) * prior;
            *q = (1.0 - w) * *q + w * mixed;
        }
        node.policy_q = node.temp_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        node.count += 1;
    }

    fn update_staged(&mut self, ball: BallRef, target: f64) {
        let kappa = self.hp.base.kappa;
        let reset = prior_value(&self.hp, self.horizon, ball.step);
        let (k, n_tilde) = {
            let node = self.partition.node(ball);
            (node.stage_index, node.stage_count)
        };
        let n0 = self.hp.prior_count(k, self.horizon);
        let e_k = stage_length(k, self.horizon, self.hp.base.stage_schedule);
        let node = self.partition.node_mut(ball);
        let (a, b) = (1.0 / kappa, (n_tilde as f64 + n0) / kappa);
        for (q, rng) in node.temp_q.iter_mut().zip(&mut self.rngs) {
            let w = rng.beta(a, b);
            *q = (1.0 - w) * *q + w * target;
        }
        node.stage_count += 1;
        node.count += 1;
        if node.stage_count >= e_k {
            node.policy_q = node.temp_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            node.temp_q.fill(reset);
            node.stage_count = 0;
            node.stage_index += 1;
        }
    }

    fn update_optql(&mut self, ball: BallRef, step: usize, reward: f64, next_value: f64) {
        let cap = (self.horizon - step - 1) as f64;
        let node = self.partition.node_mut(ball);
        node.count += 1;
        let n = node.count;
        let alpha = optql_learning_rate(self.horizon, n);
        let target = reward + next_value.clamp(0.0, cap) + simplified_bonus(self.horizon - step, n);
        node.policy_q = (1.0 - alpha) * node.policy_q + alpha * target;
    }
}

/// Initial and prior value at `step`: `r0 H` (flat) or `r0 (H - step)` (stepwise).
fn prior_value(hp: &MetricHyperParams, horizon: usize, step: usize) -> f64 {
    match hp.base.prior_init {
        PriorInit::Flat => hp.base.r0 * horizon as f64,
        PriorInit::Stepwise => hp.base.r0 * (horizon - step) as f64,
    }
}

impl Agent<BallState> for AdaptiveAgent {
    fn name(&self) -> &'static str {
        match self.rule {
            AdaptiveRule::RandQL => "adaptive_randql",
            AdaptiveRule::StagedRandQL => "adaptive_staged_randql",
            AdaptiveRule::OptQL => "adaptive_ql",
        }
    }

    fn act(&mut self, step: usize, state: &BallState) -> usize {
        self.partition.select(step, *state).action
    }

    fn observe(&mut self, step: usize, state: &BallState, action: usize, reward: f64, next_state: &BallState) {
        let ball = self.partition.leaf(step, action, *state);
        let next_value = self.partition.value(step + 1, *next_state);
        match self.rule {
            AdaptiveRule::RandQL => self.update_randql(ball, reward + next_value),
            AdaptiveRule::StagedRandQL => self.update_staged(ball, reward + next_value),
            AdaptiveRule::OptQL => self.update_optql(ball, step, reward, next_value),
        }
        self.partition.maybe_split(ball);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::BallEnvSpec;

    fn episode(agent: &mut AdaptiveAgent, env: &BallEnvSpec, rng: &mut Rng) -> f64 {
        let mut s = env.initial_state(rng);
        let mut total = 0.0;
        for h in 0..env.horizon {
            let a = agent.act(h, &s);
            let o = env.step(s, a, rng).unwrap();
            agent.observe(h, &s, a, o.reward, &o.next_state);
            total += o.reward;
            s = o.next_state;
        }
        total
    }

    #[test]
    fn first_visit_forces_prior_value() {
        let hp = MetricHyperParams::practical();
        let mut agent = AdaptiveAgent::randql(4, 2, hp, &Rng::new(0)).unwrap();
        agent.observe(0, &[0.1, 0.1], 1, 0.7, &[0.1, 0.1]);
        // The root split after the visit; every child inherited the updated ensemble.
        let leaf = agent.partition().leaf(0, 1, [0.1, 0.1]);
        let node = agent.partition().node(leaf);
        assert!(node.temp_q.iter().all(|q| *q == 4.0));
        assert_eq!(node.count, 1);
        assert_eq!(node.depth, 1);
    }

    #[test]
    fn stepwise_prior_shrinks_with_the_step() {
        let mut hp = MetricHyperParams::practical();
        hp.base.prior_init = PriorInit::Stepwise;
        for mut agent in [
            AdaptiveAgent::randql(4, 2, hp.clone(), &Rng::new(0)).unwrap(),
            AdaptiveAgent::staged(4, 2, hp.clone(), &Rng::new(0)).unwrap(),
        ] {
            for h in 0..4 {
                assert_eq!(agent.partition().value(h, [0.0, 0.0]), (4 - h) as f64);
            }
            // The first RandQL visit resets to the prior of its own step.
            agent.observe(2, &[0.1, 0.1], 1, 0.7, &[0.1, 0.1]);
            let leaf = agent.partition().leaf(2, 1, [0.1, 0.1]);
            if agent.rule() == AdaptiveRule::RandQL {
                assert!(agent.partition().node(leaf).temp_q.iter().all(|q| *q == 2.0));
            }
        }
    }

    #[test]
    fn optql_first_visit_bonus() {
        let mut agent = AdaptiveAgent::optql(3, 2);
        agent.observe(2, &[0.0, 0.0], 0, 0.25, &[0.0, 0.0]);
        let leaf = agent.partition().leaf(2, 0, [0.0, 0.0]);
        // alpha = 1, target = 0.25 + 0 + bonus(1, 1) = 1.25
        assert_eq!(agent.partition().node(leaf).policy_q, 1.25);
    }

    #[test]
    fn leaves_respect_count_diameter_bound() {
        let env = BallEnvSpec::level(1).unwrap();
        let mut rng = Rng::new(3);
        for mut agent in [
            AdaptiveAgent::randql(env.horizon, 5, MetricHyperParams::practical(), &Rng::new(1)).unwrap(),
            AdaptiveAgent::staged(env.horizon, 5, MetricHyperParams::practical(), &Rng::new(1)).unwrap(),
            AdaptiveAgent::optql(env.horizon, 5),
        ] {
            let t = 300;
            for _ in 0..t {
                episode(&mut agent, &env, &mut rng);
            }
            let p = agent.partition();
            let depth_cap = (2.0 * t as f64 / 2.0).log2() + 1.0;
            for h in 0..env.horizon {
                for a in 0..5 {
                    for n in p.tree(h, a).iter().filter(|n| n.is_leaf() && n.count > 0) {
                        assert!(n.diameter() >= 2.0 / (2.0 * (n.count as f64).sqrt()));
                        assert!(n.depth as f64 <= depth_cap);
                    }
                }
            }
            for s in p.splits() {
                assert!(s.count as f64 >= (2.0 / s.diameter).powi(2) - 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_optql_improves() {
        let env = BallEnvSpec {
            sigma: 0.0,
            ..BallEnvSpec::level(1).unwrap()
        };
        let mut agent = AdaptiveAgent::optql(env.horizon, 5);
        let mut rng = Rng::new(9);
        let returns: Vec<f64> = (0..2000).map(|_| episode(&mut agent, &env, &mut rng)).collect();
        let early: f64 = returns[..200].iter().sum::<f64>() / 200.0;
        let late: f64 = returns[1800..].iter().sum::<f64>() / 200.0;
        assert!(late > early, "early {early} late {late}");
    }
}
