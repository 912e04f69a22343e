//! Exact solvers for tabular MDPs: backward induction, policy evaluation and
//! a brute-force enumeration cross-check.

use crate::envs::TabularMdpSpec;
use crate::error::{Error, Result};
use crate::policy::{argmax, max_value, Policy, PolicySnapshot};

/// Upper limit on the number of deterministic policies `brute_force_optimal` enumerates.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Optimal action values `Q*_h(s, a)` and state values `V*_h(s)`; `V*_H = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTables {
    horizon: usize,
    states: usize,
    actions: usize,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl ValueTables {
    pub fn q(&self, step: usize, state: usize, action: usize) -> f64 {
        self.q[(step * self.states + state) * self.actions + action]
    }

    /// `V*_step(state)`; `step == horizon` is the terminal row of zeros.
    pub fn v(&self, step: usize, state: usize) -> f64 {
        self.v[step * self.states + state]
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    /// Greedy policy with lowest-index tie breaking.
    pub fn greedy_policy(&self) -> Policy {
        Policy::greedy(self.horizon, self.states, self.actions, &self.q)
    }
}

fn expectation(row: &[f64], values: &[f64]) -> f64 {
    row.iter().zip(values).map(|(p, v)| p * v).sum()
}

/// Solves the optimal Bellman equations by backward induction.
pub fn backward_induction(spec: &TabularMdpSpec) -> ValueTables {
    let (s_n, a_n, h_n) = (spec.states(), spec.actions(), spec.horizon());
    let mut q = vec![0.0; h_n * s_n * a_n];
    let mut v = vec![0.0; (h_n + 1) * s_n];
    for h in (0..h_n).rev() {
        let (head, tail) = v.split_at_mut((h + 1) * s_n);
        let next = &tail[..s_n];
        let current = &mut head[h * s_n..];
        for s in 0..s_n {
            let row_q = &mut q[(h * s_n + s) * a_n..(h * s_n + s + 1) * a_n];
            for (a, qa) in row_q.iter_mut().enumerate() {
                *qa = spec.reward(h, s, a) + expectation(spec.transition_row(h, s, a), next);
            }
            current[s] = max_value(row_q);
        }
    }
    ValueTables {
        horizon: h_n,
        states: s_n,
        actions: a_n,
        q,
        v,
    }
}

/// Largest absolute violation of the optimal Bellman equations by `tables`.
pub fn bellman_residual(spec: &TabularMdpSpec, tables: &ValueTables) -> f64 {
    let (s_n, a_n, h_n) = (spec.states(), spec.actions(), spec.horizon());
    let mut worst: f64 = 0.0;
    for h in 0..h_n {
        let next = &tables.v[(h + 1) * s_n..(h + 2) * s_n];
        for s in 0..s_n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..a_n {
                let target = spec.reward(h, s, a) + expectation(spec.transition_row(h, s, a), next);
                worst = worst.max((tables.q(h, s, a) - target).abs());
                best = best.max(tables.q(h, s, a));
            }
            worst = worst.max((tables.v(h, s) - best).abs());
        }
    }
    for s in 0..s_n {
        worst = worst.max(tables.v(h_n, s).abs());
    }
    worst
}

fn check_policy_shape(spec: &TabularMdpSpec, policy: &Policy) -> Result<()> {
    if policy.horizon() != spec.horizon() || policy.states() != spec.states() {
        return Err(Error::param("policy dimensions do not match the MDP"));
    }
    if let Some(a) = policy.as_slice().iter().find(|a| **a >= spec.actions()) {
        return Err(Error::param(format!("policy uses invalid action {a}")));
    }
    Ok(())
}

/// `V^pi_h(s)` for every step (terminal row included), laid out `[H+1][S]`.
pub fn policy_values(spec: &TabularMdpSpec, policy: &Policy) -> Result<Vec<f64>> {
    check_policy_shape(spec, policy)?;
    let (s_n, h_n) = (spec.states(), spec.horizon());
    let mut v = vec![0.0; (h_n + 1) * s_n];
    for h in (0..h_n).rev() {
        let (head, tail) = v.split_at_mut((h + 1) * s_n);
        let next = &tail[..s_n];
        for s in 0..s_n {
            let a = policy.action(h, s);
            head[h * s_n + s] = spec.reward(h, s, a) + expectation(spec.transition_row(h, s, a), next);
        }
    }
    Ok(v)
}

/// Exact value of a deterministic Markov policy at the initial state.
pub fn evaluate_policy(spec: &TabularMdpSpec, policy: &Policy) -> Result<f64> {
    Ok(policy_values(spec, policy)?[spec.initial_state()])
}

/// Exact value of a stochastic Markov policy (`[H][S][A]` probabilities).
pub fn evaluate_stochastic_policy(spec: &TabularMdpSpec, probs: &[f64]) -> Result<f64> {
    let (s_n, a_n, h_n) = (spec.states(), spec.actions(), spec.horizon());
    if probs.len() != h_n * s_n * a_n {
        return Err(Error::param("stochastic policy dimensions do not match the MDP"));
    }
    for (i, row) in probs.chunks(a_n).enumerate() {
        let total: f64 = row.iter().sum();
        if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("policy row {i} is not a distribution")));
        }
    }
    let mut next = vec![0.0; s_n];
    let mut current = vec![0.0; s_n];
    for h in (0..h_n).rev() {
        for (s, cur) in current.iter_mut().enumerate() {
            let pi = &probs[(h * s_n + s) * a_n..(h * s_n + s + 1) * a_n];
            *cur = pi
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(a, p)| p * (spec.reward(h, s, a) + expectation(spec.transition_row(h, s, a), &next)))
                .sum();
        }
        std::mem::swap(&mut next, &mut current);
    }
    Ok(next[spec.initial_state()])
}

/// Exact value of whatever snapshot an agent reported.
pub fn evaluate_snapshot(spec: &TabularMdpSpec, snapshot: &PolicySnapshot) -> Result<f64> {
    match snapshot {
        PolicySnapshot::Deterministic(p) => evaluate_policy(spec, p),
        PolicySnapshot::Stochastic(probs) => evaluate_stochastic_policy(spec, probs),
    }
}

/// Maximum of `evaluate_policy` over every deterministic Markov policy.
///
/// Independent of [`backward_induction`]; only usable on tiny instances.
pub fn brute_force_optimal(spec: &TabularMdpSpec) -> Result<f64> {
    let (s_n, a_n, h_n) = (spec.states(), spec.actions(), spec.horizon());
    let slots = s_n * h_n;
    let count = (a_n as f64).powi(slots as i32);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            policies: count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut digits = vec![0usize; slots];
    let mut best = f64::NEG_INFINITY;
    loop {
        let policy = Policy::new(h_n, s_n, digits.clone())?;
        best = best.max(evaluate_policy(spec, &policy)?);
        // mixed-radix increment
        let mut i = 0;
        loop {
            if i == slots {
                return Ok(best);
            }
            digits[i] += 1;
            if digits[i] < a_n {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Greedy action of `values` at `(step, state)` for callers holding a flat `[H][S][A]` table.
pub fn greedy_action(q: &[f64], states: usize, actions: usize, step: usize, state: usize) -> usize {
    let start = (step * states + state) * actions;
    argmax(&q[start..start + actions])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{chain, gridworld, random_mdp, GridNoise};
    use crate::samplers::Rng;

    #[test]
    fn single_step_chain_value() {
        let c = chain(2, 1, 0.0, 0.3, 1.0).unwrap();
        let t = backward_induction(&c);
        assert_eq!(t.v(0, 0), c.reward(0, 0, 0).max(c.reward(0, 0, 1)));
        assert_eq!(t.v(1, 0), 0.0);
    }

    #[test]
    fn chain_matches_brute_force() {
        let c = chain(5, 10, 0.1, 0.05, 1.0).unwrap();
        // 2^(5*10) policies is out of reach; enumerate a shorter horizon
        // exhaustively and check the long one against the DP principle.
        assert!(matches!(brute_force_optimal(&c), Err(Error::InstanceTooLarge { .. })));
        let short = chain(5, 4, 0.1, 0.05, 1.0).unwrap();
        let bf = brute_force_optimal(&short).unwrap();
        assert!((bf - backward_induction(&short).v(0, 0)).abs() < 1e-10);
        let t = backward_induction(&c);
        assert!(bellman_residual(&c, &t) <= 1e-12);
        let greedy = evaluate_policy(&c, &t.greedy_policy()).unwrap();
        assert!((greedy - t.v(0, 0)).abs() <= 1e-12);
    }

    #[test]
    fn gridworld_value_regression() {
        let g = gridworld(10, 10, 50, 0.2, GridNoise::AllNeighbors).unwrap();
        let t = backward_induction(&g);
        let v = t.v(0, 0);
        assert!(bellman_residual(&g, &t) <= 1e-12);
        assert!((v - GRIDWORLD_V1).abs() < 1e-9, "V*_1 = {v:.15}");
    }

    // Pinned from the first computation of V*_1((0,0)) on the 10x10, H = 50, noise 0.2 grid.
    const GRIDWORLD_V1: f64 = 22.459_868_850_765_172;

    #[test]
    fn suboptimal_policy_is_dominated() {
        let c = chain(5, 10, 0.1, 0.05, 1.0).unwrap();
        let t = backward_induction(&c);
        let stay = Policy::constant(10, 5, 0);
        let vals = policy_values(&c, &stay).unwrap();
        for h in 0..=10 {
            for s in 0..5 {
                assert!(vals[h * 5 + s] <= t.v(h, s) + 1e-12);
            }
        }
    }

    #[test]
    fn evaluate_policy_matches_monte_carlo() {
        let mut rng = Rng::new(17);
        let m = random_mdp(3, 2, 3, &mut rng).unwrap();
        let actions = (0..9).map(|_| rng.below(2)).collect();
        let policy = Policy::new(3, 3, actions).unwrap();
        let exact = evaluate_policy(&m, &policy).unwrap();
        let episodes = 1_000_000;
        let mut returns = Vec::with_capacity(episodes);
        for _ in 0..episodes {
            let mut s = m.initial_state();
            let mut g = 0.0;
            for h in 0..3 {
                let out = m.step(h, s, policy.action(h, s), &mut rng);
                g += out.reward;
                s = out.next_state;
            }
            returns.push(g);
        }
        let (mean, sd) = crate::stats::mean_and_std(&returns);
        let se = sd / (episodes as f64).sqrt();
        assert!((mean - exact).abs() <= 4.0 * se, "{mean} vs {exact}");
    }

    #[test]
    fn random_mdps_agree_with_brute_force() {
        let mut rng = Rng::new(99);
        for i in 0..20 {
            let (s, a, h) = (1 + i % 3, 1 + i % 2, 1 + (i / 3) % 3);
            let m = random_mdp(s, a, h, &mut rng).unwrap();
            let t = backward_induction(&m);
            let bf = brute_force_optimal(&m).unwrap();
            assert!((bf - t.v(0, 0)).abs() <= 1e-10);
            assert!(bellman_residual(&m, &t) <= 1e-12);
        }
    }

    #[test]
    fn deterministic_two_by_two_is_exact() {
        // S = 2, A = 2, H = 2 with deterministic rows
        let transition = vec![
            1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, //
            0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0,
        ];
        let reward = vec![0.1, 0.2, 0.9, 0.0, 0.3, 0.5, 0.4, 0.6];
        let m = TabularMdpSpec::new(2, 2, 2, 0, transition, reward).unwrap();
        assert_eq!(brute_force_optimal(&m).unwrap(), backward_induction(&m).v(0, 0));
    }

    #[test]
    fn single_state_sums_best_rewards() {
        let reward = vec![0.2, 0.7, 0.9, 0.1, 0.4, 0.4];
        let m = TabularMdpSpec::new(1, 2, 3, 0, vec![1.0; 6], reward).unwrap();
        let expected = 0.7 + 0.9 + 0.4;
        assert!((backward_induction(&m).v(0, 0) - expected).abs() < 1e-15);
        assert!((brute_force_optimal(&m).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn invalid_policy_rejected() {
        let c = chain(3, 2, 0.0, 0.0, 1.0).unwrap();
        let bad = Policy::constant(2, 3, 5);
        assert!(evaluate_policy(&c, &bad).is_err());
        let wrong_shape = Policy::constant(3, 3, 0);
        assert!(evaluate_policy(&c, &wrong_shape).is_err());
    }

    #[test]
    fn stochastic_uniform_policy_between_bounds() {
        let c = chain(5, 10, 0.1, 0.05, 1.0).unwrap();
        let probs = vec![0.5; 10 * 5 * 2];
        let v = evaluate_stochastic_policy(&c, &probs).unwrap();
        let vstar = backward_induction(&c).v(0, 0);
        assert!(v >= 0.0 && v < vstar);
        // a point-mass stochastic policy equals its deterministic twin
        let det = Policy::constant(10, 5, 1);
        let point: Vec<f64> = (0..50).flat_map(|_| [0.0, 1.0]).collect();
        let a = evaluate_stochastic_policy(&c, &point).unwrap();
        let b = evaluate_policy(&c, &det).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
