use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::normal_cdf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamMode {
    Theory,
    Practical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageSchedule {
    /// `e_k = floor((1 + 1/H)^k * H)`.
    WithHFactor,
    /// `e_k = max(1, floor((1 + 1/H)^k))`, the short schedule used in practice.
    WithoutHFactor,
}

/// Initial (and reset) value of the staged temporary Q-values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorInit {
    /// `r(s, a) + r0 * (H - h - 1)`.
    Stepwise,
    /// `r0 * H` everywhere, as in the metric variants.
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Posterior inflation.
    pub kappa: f64,
    /// Prior pseudo-count.
    pub n0: f64,
    /// Ensemble size.
    pub ensemble_size: usize,
    /// Prior pseudo-reward.
    pub r0: f64,
    pub mode: ParamMode,
    pub stage_schedule: StageSchedule,
    pub prior_init: PriorInit,
}

/// Constant `c0` of the optimism analysis (about 1.5e4).
pub fn theory_c0() -> f64 {
    let l = (17.0f64 / 16.0).ln();
    let inner = 4.0 / l.sqrt() + 8.0 + 49.0 * 4.0 * 6.0f64.sqrt() / 9.0;
    8.0 / std::f64::consts::PI * inner * inner + 1.0
}

/// Constant `c_J = 1 / log(2 / (1 + Phi(1)))` sizing the ensemble.
pub fn theory_cj() -> f64 {
    1.0 / (2.0 / (1.0 + normal_cdf(1.0))).ln()
}

pub(crate) fn log_17_16(x: f64) -> f64 {
    x.ln() / (17.0f64 / 16.0).ln()
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

impl HyperParams {
    /// Defaults used in experiments: kappa = 1, n0 = 1/S, J = 10, r0 = 1.
    pub fn practical(states: usize) -> Self {
        Self {
            kappa: 1.0,
            n0: 1.0 / states.max(1) as f64,
            ensemble_size: 10,
            r0: 1.0,
            mode: ParamMode::Practical,
            stage_schedule: StageSchedule::WithoutHFactor,
            prior_init: PriorInit::Stepwise,
        }
    }

    /// Parameters for which the optimism guarantee holds with probability `1 - delta`.
    pub fn theory(states: usize, actions: usize, horizon: usize, episodes: usize, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        if states == 0 || actions == 0 || horizon == 0 || episodes == 0 {
            return Err(Error::param("theory parameters need S, A, H, T >= 1"));
        }
        let sah = (states * actions * horizon) as f64;
        let t = episodes as f64;
        let e_pi = std::f64::consts::E * std::f64::consts::PI;
        let kappa = 2.0 * ((8.0 * sah / delta).ln() + 3.0 * (e_pi * (2.0 * t + 1.0)).ln());
        let n0 = (kappa * (theory_c0() + log_17_16(t))).ceil();
        let j = (theory_cj() * (2.0 * sah * t / delta).ln()).ceil().max(1.0);
        Ok(Self {
            kappa,
            n0,
            ensemble_size: j as usize,
            r0: 2.0,
            mode: ParamMode::Theory,
            stage_schedule: StageSchedule::WithHFactor,
            prior_init: PriorInit::Stepwise,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(Error::param(format!("n0 must be positive, got {}", self.n0)));
        }
        if self.ensemble_size == 0 {
            return Err(Error::param("ensemble size J must be at least 1"));
        }
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            return Err(Error::param(format!("r0 must be nonnegative, got {}", self.r0)));
        }
        Ok(())
    }
}
