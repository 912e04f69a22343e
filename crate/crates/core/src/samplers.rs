//! Seeded random source and the distribution samplers every agent draws from.
//!
//! [`Rng`] wraps a ChaCha8 stream. Child streams are derived from the parent
//! *seed* and a label (never from the parent's current position), so the
//! stream a worker sees depends only on the derivation path.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Deterministic, splittable pseudo-random source.
///
/// Not `Sync`-shared by design: one owner per stream, children for workers.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream keyed by `label`. Independent of how much of `self` was consumed.
    pub fn derive(&self, label: &str) -> Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        Rng::new(u64::from_le_bytes(bytes))
    }

    /// Child stream keyed by `(label, index)`, e.g. one per ensemble member.
    pub fn derive_indexed(&self, label: &str, index: u64) -> Rng {
        self.derive(&format!("{label}#{index}"))
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform draw on `(0, 1)`.
    fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform integer in `0..n`. `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.inner.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.random::<u64>()
    }

    /// Gamma(shape, scale) draw.
    ///
    /// Marsaglia–Tsang for `shape >= 1`; for `shape < 1` a Gamma(shape + 1)
    /// draw is boosted by `u^(1/shape)`.
    pub fn sample_gamma(&mut self, shape: f64, scale: f64) -> Result<f64> {
        if !(shape > 0.0 && shape.is_finite()) || !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param(format!(
                "gamma requires shape > 0 and scale > 0, got shape={shape}, scale={scale}"
            )));
        }
        Ok(scale * self.log_standard_gamma(shape).exp())
    }

    /// Logarithm of a unit-scale Gamma(shape) draw. Working in log space keeps
    /// tiny shapes (e.g. `1/kappa` with large `kappa`) from underflowing to 0.
    fn log_standard_gamma(&mut self, shape: f64) -> f64 {
        if shape >= 1.0 {
            self.marsaglia_tsang(shape).ln()
        } else {
            let boost = self.uniform_open().ln() / shape;
            self.marsaglia_tsang(shape + 1.0).ln() + boost
        }
    }

    fn marsaglia_tsang(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let (x, v) = loop {
                let x: f64 = StandardNormal.sample(&mut self.inner);
                let v = 1.0 + c * x;
                if v > 0.0 {
                    break (x, v * v * v);
                }
            };
            let u = self.uniform_open();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Beta draw as `G1 / (G1 + G2)`. Degenerate parameters resolve deterministically:
    /// `alpha = 0` gives 0 and `beta = 0` gives 1.
    pub fn sample_beta(&mut self, params: BetaParams) -> f64 {
        let BetaParams { alpha, beta } = params;
        if alpha == 0.0 {
            return 0.0;
        }
        if beta == 0.0 {
            return 1.0;
        }
        if alpha >= 1.0 && beta >= 1.0 {
            let g1 = self.marsaglia_tsang(alpha);
            let g2 = self.marsaglia_tsang(beta);
            g1 / (g1 + g2)
        } else {
            let l1 = self.log_standard_gamma(alpha);
            let l2 = self.log_standard_gamma(beta);
            1.0 / (1.0 + (l2 - l1).exp())
        }
    }

    /// Beta draw for parameters the caller already knows to be valid.
    pub(crate) fn beta(&mut self, alpha: f64, beta: f64) -> f64 {
        debug_assert!(alpha >= 0.0 && beta >= 0.0 && alpha + beta > 0.0);
        self.sample_beta(BetaParams { alpha, beta })
    }

    /// Dirichlet draw. Zero concentrations yield exact zeros.
    pub fn sample_dirichlet(&mut self, alphas: &[f64]) -> Result<Vec<f64>> {
        if alphas.is_empty() {
            return Err(Error::param("dirichlet requires at least one concentration"));
        }
        if alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::param(format!(
                "dirichlet concentrations must be finite and nonnegative, got {alphas:?}"
            )));
        }
        if !alphas.iter().any(|a| *a > 0.0) {
            return Err(Error::param("dirichlet requires a positive concentration"));
        }
        let logs: Vec<f64> = alphas
            .iter()
            .map(|&a| {
                if a > 0.0 {
                    self.log_standard_gamma(a)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = out.iter().sum();
        for x in &mut out {
            *x /= total;
        }
        Ok(out)
    }

    /// Dirichlet draw for parameters already known to be valid (internal hot paths).
    pub(crate) fn dirichlet_unchecked(&mut self, alphas: &[f64], out: &mut [f64]) {
        let mut max = f64::NEG_INFINITY;
        for (o, &a) in out.iter_mut().zip(alphas) {
            *o = if a > 0.0 {
                self.log_standard_gamma(a)
            } else {
                f64::NEG_INFINITY
            };
            max = max.max(*o);
        }
        let mut total = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            total += *o;
        }
        for o in out.iter_mut() {
            *o /= total;
        }
    }

    /// N(mean, std^2). `std = 0` returns `mean` without consuming randomness.
    pub fn sample_gaussian(&mut self, mean: f64, std: f64) -> Result<f64> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::param(format!("gaussian std must be >= 0, got {std}")));
        }
        if std == 0.0 {
            return Ok(mean);
        }
        let z: f64 = StandardNormal.sample(&mut self.inner);
        Ok(mean + std * z)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn sample_bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("bernoulli p must lie in [0,1], got {p}")));
        }
        if p == 0.0 {
            return Ok(false);
        }
        if p == 1.0 {
            return Ok(true);
        }
        Ok(self.uniform() < p)
    }

    /// Index drawn from a probability vector by inverse CDF. Mass lost to
    /// rounding goes to the last index with positive probability.
    pub fn sample_categorical(&mut self, probs: &[f64]) -> usize {
        let u = self.uniform();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last = i;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }
}

/// Validated Beta parameters: both nonnegative, not both zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let ok = alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite();
        if !ok || alpha + beta <= 0.0 {
            return Err(Error::param(format!(
                "beta parameters must be nonnegative and not both zero, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}
