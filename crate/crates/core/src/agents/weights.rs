//! Replays of the sequential Beta draws that define the aggregated
//! weights of a learning stage, for statistical verification.

use crate::error::{Error, Result};
use crate::samplers::Rng;

/// Aggregated weights `W^0..W^n`; `W^0` is the weight left on the prior.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    pub weights: Vec<f64>,
}

impl WeightVector {
    /// Builds `W^0 = prod(1 - w_q)` and `W^i = w_{i-1} prod_{q >= i}(1 - w_q)`.
    pub fn from_rates(rates: &[f64]) -> Self {
        let n = rates.len();
        let mut weights = vec![0.0; n + 1];
        let mut tail = 1.0;
        for i in (1..=n).rev() {
            weights[i] = rates[i - 1] * tail;
            tail *= 1.0 - rates[i - 1];
        }
        weights[0] = tail;
        Self { weights }
    }

    pub fn prior_weight(&self) -> f64 {
        self.weights[0]
    }
}

/// `J` weight vectors for one full stage of `n` updates with
/// `w_q ~ Beta(1/kappa, (q + n0)/kappa)`.
pub fn collect_stage_weights(kappa: f64, n0: f64, n: usize, j: usize, rng: &mut Rng) -> Result<Vec<WeightVector>> {
    if !(kappa > 0.0 && n0 > 0.0) {
        return Err(Error::param("kappa and n0 must be positive"));
    }
    let mut rates = vec![0.0; n];
    Ok((0..j)
        .map(|_| {
            for (q, w) in rates.iter_mut().enumerate() {
                *w = rng.beta(1.0 / kappa, (q as f64 + n0) / kappa);
            }
            WeightVector::from_rates(&rates)
        })
        .collect())
}

/// Same replay for the unstaged learning rate `w_q ~ Beta(H, q + n0)`.
/// With `n0 = 0` the first draw is `Beta(H, 0) = 1`, which erases the
/// prior immediately.
pub fn collect_randql_weights(horizon: usize, n0: f64, n: usize, j: usize, rng: &mut Rng) -> Result<Vec<WeightVector>> {
    if horizon == 0 || n0 < 0.0 {
        return Err(Error::param("horizon must be positive and n0 nonnegative"));
    }
    let mut rates = vec![0.0; n];
    Ok((0..j)
        .map(|_| {
            for (q, w) in rates.iter_mut().enumerate() {
                *w = rng.beta(horizon as f64, q as f64 + n0);
            }
            WeightVector::from_rates(&rates)
        })
        .collect())
}
