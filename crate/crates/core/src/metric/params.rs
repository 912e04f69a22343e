use serde::{Deserialize, Serialize};

use crate::agents::{
    check_delta, log_17_16, stage_length, theory_c0, HyperParams, ParamMode, PriorInit, StageSchedule,
};
use crate::error::{Error, Result};
use crate::stats::normal_cdf;

/// Diameter of the state box `[-1, 1]^2` in the infinity norm.
pub const D_MAX: f64 = 2.0;

/// How the prior count of a stage depends on the stage index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorCountRule {
    /// `n0` from the base parameters, the same for every stage.
    Constant,
    /// `ceil(tn0 + kappa + eps L / (H - 1) (e_k + tn0 + kappa))`, for a fixed net.
    Net,
    /// `ceil(tn0 + kappa + L d_max / (H - 1) (e_k + tn0 + kappa) / sqrt(H e_k - k - H^2))`,
    /// for adaptive partitions.
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricHyperParams {
    pub base: HyperParams,
    /// `L = L_r + (1 + L_F) L_V`.
    pub lipschitz: f64,
    /// Discretization level of a fixed net.
    pub epsilon: f64,
    /// Base prior count of the stage-dependent rules.
    pub tn0: f64,
    pub prior_count: PriorCountRule,
}

/// Ensemble-size constant of the metric analysis, `1 / log(4 / (3 + Phi(1)))`.
pub fn theory_cj_metric() -> f64 {
    1.0 / (4.0 / (3.0 + normal_cdf(1.0))).ln()
}

/// `ceil(tn0 + kappa + eps L / (H - 1) (e_k + tn0 + kappa))`.
pub fn net_prior_count(tn0: f64, kappa: f64, epsilon: f64, lipschitz: f64, horizon: usize, e_k: usize) -> f64 {
    // The H - 1 denominators degenerate at H = 1; treat them as 1 there.
    let hm1 = (horizon as f64 - 1.0).max(1.0);
    let base = tn0 + kappa;
    (base + epsilon * lipschitz / hm1 * (e_k as f64 + base)).ceil()
}

/// Adaptive-partition variant. The radicand `H e_k - k - H^2` is negative for
/// early stages and is clamped to 1.
pub fn adaptive_prior_count(tn0: f64, kappa: f64, lipschitz: f64, horizon: usize, k: usize, e_k: usize) -> f64 {
    let hm1 = (horizon as f64 - 1.0).max(1.0);
    let (h, e) = (horizon as f64, e_k as f64);
    let base = tn0 + kappa;
    let radicand = (h * e - k as f64 - h * h).max(1.0);
    (base + lipschitz * D_MAX / hm1 * (e + base) / radicand.sqrt()).ceil()
}

impl MetricHyperParams {
    /// Experiment defaults for the adaptive agents: J = 10, kappa = 10, n0 = 0.33, r0 = 1.
    pub fn practical() -> Self {
        Self {
            base: HyperParams {
                kappa: 10.0,
                n0: 0.33,
                ensemble_size: 10,
                r0: 1.0,
                mode: ParamMode::Practical,
                stage_schedule: StageSchedule::WithoutHFactor,
                prior_init: PriorInit::Flat,
            },
            lipschitz: 0.0,
            epsilon: 0.0,
            tn0: 0.0,
            prior_count: PriorCountRule::Constant,
        }
    }

    /// Fixed-net theory parameters; `log_net_size` is `log N_eps`.
    pub fn net_theory(
        horizon: usize,
        episodes: usize,
        delta: f64,
        epsilon: f64,
        log_net_size: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        Self::theory(
            horizon,
            episodes,
            delta,
            log_net_size,
            epsilon,
            lipschitz,
            PriorCountRule::Net,
        )
    }

    /// Adaptive-partition theory parameters with covering constant `C_N` and dimension `d_c`.
    pub fn adaptive_theory(
        horizon: usize,
        episodes: usize,
        delta: f64,
        covering_const: f64,
        covering_dim: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(covering_const > 0.0 && covering_dim >= 0.0) {
            return Err(Error::param(
                "covering constant must be positive and dimension nonnegative",
            ));
        }
        let log_size = covering_const.ln() + covering_dim * (8.0 * episodes as f64 / D_MAX).log2();
        Self::theory(
            horizon,
            episodes,
            delta,
            log_size,
            0.0,
            lipschitz,
            PriorCountRule::Adaptive,
        )
    }

    fn theory(
        horizon: usize,
        episodes: usize,
        delta: f64,
        log_size: f64,
        epsilon: f64,
        lipschitz: f64,
        rule: PriorCountRule,
    ) -> Result<Self> {
        check_delta(delta)?;
        if horizon < 2 || episodes == 0 {
            return Err(Error::param("metric theory parameters need H >= 2 and T >= 1"));
        }
        let (h, t) = (horizon as f64, episodes as f64);
        let e_pi = std::f64::consts::E * std::f64::consts::PI;
        let kappa = 2.0 * ((8.0 * h / delta).ln() + log_size + 3.0 * (e_pi * (2.0 * t + 1.0)).ln());
        let tn0 = (theory_c0() + 1.0 + log_17_16(t)) * kappa;
        let j = (theory_cj_metric() * ((2.0 * h * t / delta).ln() + log_size))
            .ceil()
            .max(1.0);
        let out = Self {
            base: HyperParams {
                kappa,
                n0: tn0,
                ensemble_size: j as usize,
                r0: 2.0,
                mode: ParamMode::Theory,
                stage_schedule: StageSchedule::WithHFactor,
                prior_init: PriorInit::Flat,
            },
            lipschitz,
            epsilon,
            tn0,
            prior_count: rule,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.lipschitz >= 0.0 && self.epsilon >= 0.0 && self.tn0 >= 0.0) {
            return Err(Error::param("L, epsilon and tn0 must be nonnegative"));
        }
        Ok(())
    }

    /// Prior count `n0(k)` used during stage `k`.
    pub fn prior_count(&self, k: usize, horizon: usize) -> f64 {
        let kappa = self.base.kappa;
        let e_k = stage_length(k, horizon, self.base.stage_schedule);
        match self.prior_count {
            PriorCountRule::Constant => self.base.n0,
            PriorCountRule::Net => net_prior_count(self.tn0, kappa, self.epsilon, self.lipschitz, horizon, e_k),
            PriorCountRule::Adaptive => adaptive_prior_count(self.tn0, kappa, self.lipschitz, horizon, k, e_k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net_params(tn0: f64, kappa: f64, epsilon: f64, l: f64) -> MetricHyperParams {
        let mut hp = MetricHyperParams::practical();
        hp.base.kappa = kappa;
        hp.base.stage_schedule = StageSchedule::WithHFactor;
        hp.tn0 = tn0;
        hp.epsilon = epsilon;
        hp.lipschitz = l;
        hp.prior_count = PriorCountRule::Net;
        hp
    }

    #[test]
    fn net_prior_count_example() {
        assert_eq!(net_prior_count(2.0, 1.0, 0.1, 5.0, 11, 10), 4.0);
        let hp = net_params(2.0, 1.0, 0.1, 5.0);
        for k in 0..5 {
            let e_k = stage_length(k, 11, StageSchedule::WithHFactor);
            assert_eq!(hp.prior_count(k, 11), net_prior_count(2.0, 1.0, 0.1, 5.0, 11, e_k));
        }
    }

    #[test]
    fn constant_rule_ignores_stage() {
        let hp = MetricHyperParams::practical();
        assert!((0..20).all(|k| hp.prior_count(k, 30) == 0.33));
    }

    #[test]
    fn adaptive_rule_is_finite_in_early_stages() {
        let mut hp = net_params(2.0, 1.0, 0.0, 5.0);
        hp.prior_count = PriorCountRule::Adaptive;
        for k in 0..50 {
            let n = hp.prior_count(k, 5);
            assert!(n.is_finite() && n >= 3.0);
        }
    }

    #[test]
    fn theory_constructors() {
        let hp = MetricHyperParams::net_theory(5, 100, 0.1, 0.1, 60f64.ln(), 2.0).unwrap();
        assert_eq!(hp.base.r0, 2.0);
        assert_eq!(hp.prior_count, PriorCountRule::Net);
        assert!(hp.tn0 > 1e4 * hp.base.kappa);
        let a = MetricHyperParams::adaptive_theory(5, 100, 0.1, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(a.prior_count, PriorCountRule::Adaptive);
        assert!(theory_cj_metric() > 20.0);
        assert!(MetricHyperParams::net_theory(1, 100, 0.1, 0.1, 1.0, 1.0).is_err());
    }
}
