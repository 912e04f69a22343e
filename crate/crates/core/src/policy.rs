//! Markov policies over tabular MDPs.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub fn max_value(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Deterministic Markov policy, one action per `(step, state)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Policy {
    horizon: usize,
    states: usize,
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(horizon: usize, states: usize, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != horizon * states {
            return Err(Error::param(format!(
                "policy has {} entries, expected {}",
                actions.len(),
                horizon * states
            )));
        }
        Ok(Self {
            horizon,
            states,
            actions,
        })
    }

    /// Policy playing the same action everywhere.
    pub fn constant(horizon: usize, states: usize, action: usize) -> Self {
        Self {
            horizon,
            states,
            actions: vec![action; horizon * states],
        }
    }

    /// Builds the greedy policy of `q`, laid out `[H][S][A]`.
    pub fn greedy(horizon: usize, states: usize, n_actions: usize, q: &[f64]) -> Self {
        let actions = q.chunks(n_actions).map(argmax).collect();
        Self {
            horizon,
            states,
            actions,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn action(&self, step: usize, state: usize) -> usize {
        self.actions[step * self.states + state]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.actions
    }

    /// Short stable digest, used to fingerprint final policies in run results.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.horizon as u64).to_le_bytes());
        hasher.update((self.states as u64).to_le_bytes());
        for a in &self.actions {
            hasher.update((*a as u64).to_le_bytes());
        }
        hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Snapshot of the policy an agent will follow during the next episode.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicySnapshot {
    Deterministic(Policy),
    /// Action probabilities laid out `[H][S][A]`.
    Stochastic(Vec<f64>),
}

impl PolicySnapshot {
    pub fn digest(&self) -> String {
        match self {
            PolicySnapshot::Deterministic(p) => p.digest(),
            PolicySnapshot::Stochastic(probs) => {
                let mut hasher = Sha256::new();
                for p in probs {
                    hasher.update(p.to_bits().to_le_bytes());
                }
                hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 0.0]), 1);
        assert_eq!(argmax(&[2.0, 2.0]), 0);
    }

    #[test]
    fn greedy_policy_layout() {
        let q = [0.0, 1.0, 5.0, 2.0, 1.0, 1.0];
        let p = Policy::greedy(1, 3, 2, &q);
        assert_eq!(p.as_slice(), &[1, 0, 0]);
    }

    #[test]
    fn digest_distinguishes_policies() {
        let a = Policy::constant(2, 2, 0);
        let b = Policy::constant(2, 2, 1);
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
    }
}
