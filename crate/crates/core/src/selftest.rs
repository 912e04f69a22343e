//! Statistical self-checks shipped with the library so that users can verify
//! the samplers, the weight laws and the planner on their own machine.

use statrs::distribution::{Beta, ContinuousCDF, Gamma};

use crate::agents::{collect_randql_weights, collect_stage_weights};
use crate::envs::random_mdp;
use crate::error::{Error, Result};
use crate::oracle::{backward_induction, bellman_residual, brute_force_optimal};
use crate::samplers::{BetaParams, Rng};
use crate::stats::{ks_critical_value, ks_statistic, mean_and_std};

/// Suites accepted by [`run_suite`].
pub const SUITES: [&str; 4] = ["weights", "samplers", "oracle", "all"];

/// Significance of every KS test.
pub const KS_ALPHA: f64 = 0.001;

/// Width, in standard errors, of every mean test.
pub const MEAN_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }

    /// `PASS name: detail` or `FAIL name: detail`.
    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Sample mean within `MEAN_SIGMAS` standard errors of `expected`.
pub fn mean_check(name: impl Into<String>, xs: &[f64], expected: f64) -> Check {
    let (m, sd) = mean_and_std(xs);
    let tol = MEAN_SIGMAS * sd / (xs.len() as f64).sqrt();
    Check::new(
        name,
        (m - expected).abs() <= tol,
        format!("mean {m:.6} expected {expected:.6} tol {tol:.2e}"),
    )
}

/// One-sample KS test at `KS_ALPHA`.
pub fn ks_check(name: impl Into<String>, xs: &[f64], cdf: impl Fn(f64) -> f64) -> Check {
    let d = ks_statistic(xs, cdf);
    let crit = ks_critical_value(xs.len(), KS_ALPHA);
    Check::new(name, d <= crit, format!("D {d:.5} critical {crit:.5}"))
}

/// Runs one suite with `samples` draws per distributional check.
pub fn run_suite(suite: &str, samples: usize, seed: u64) -> Result<Vec<Check>> {
    if samples < 100 {
        return Err(Error::config(format!("need at least 100 samples, got {samples}")));
    }
    let rng = Rng::new(seed).derive("selftest");
    match suite {
        "weights" => Ok(weights_suite(samples, &mut rng.derive("weights"))),
        "samplers" => samplers_suite(samples, &mut rng.derive("samplers")),
        "oracle" => oracle_suite(20, &mut rng.derive("oracle")),
        "all" => {
            let mut out = weights_suite(samples, &mut rng.derive("weights"));
            out.extend(samplers_suite(samples, &mut rng.derive("samplers"))?);
            out.extend(oracle_suite(20, &mut rng.derive("oracle"))?);
            Ok(out)
        }
        other => Err(Error::config(format!(
            "unknown suite {other:?}; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

/// Stage weights with `kappa = 1, n0 = 3, n = 5` are `Dirichlet(3, 1, 1, 1, 1, 1)`,
/// so `W^0 ~ Beta(3, 5)` and `E[W^i] = 1/8`. Unstaged weights with `H = 2`
/// and `n0 = 1` leave `prod_{i<=n}(1 - 2/(i + 2))` on the prior.
pub fn weights_suite(samples: usize, rng: &mut Rng) -> Vec<Check> {
    let (n0, n) = (3.0, 5);
    let draws = collect_stage_weights(1.0, n0, n, samples, rng).expect("valid parameters");
    let total = n0 + n as f64;
    let mut out = Vec::new();
    for i in 0..=n {
        let xs: Vec<f64> = draws.iter().map(|v| v.weights[i]).collect();
        let expected = if i == 0 { n0 / total } else { 1.0 / total };
        out.push(mean_check(format!("stage weight W^{i} mean"), &xs, expected));
    }
    let w0: Vec<f64> = draws.iter().map(|v| v.prior_weight()).collect();
    let law = Beta::new(n0, n as f64).expect("valid beta");
    out.push(ks_check("stage weight W^0 ~ Beta(3, 5)", &w0, |x| law.cdf(x)));

    let per_n = (samples / 8).max(100);
    for n in 1..=8 {
        let draws = collect_randql_weights(2, 1.0, n, per_n, rng).expect("valid parameters");
        let xs: Vec<f64> = draws.iter().map(|v| v.prior_weight()).collect();
        let expected: f64 = (1..=n).map(|i| 1.0 - 2.0 / (i as f64 + 2.0)).product();
        out.push(mean_check(format!("randql prior weight n={n}"), &xs, expected));
    }
    out
}

pub fn samplers_suite(samples: usize, rng: &mut Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (a, b) in [(0.5, 0.5), (1.0, 1.0), (2.0, 7.0), (0.1, 3.0), (30.0, 4.0)] {
        let p = BetaParams::new(a, b)?;
        let xs: Vec<f64> = (0..samples).map(|_| rng.sample_beta(p)).collect();
        let law = Beta::new(a, b).expect("valid beta");
        out.push(ks_check(format!("Beta({a}, {b})"), &xs, |x| law.cdf(x)));
    }
    for shape in [0.3, 1.0, 4.5] {
        let xs = (0..samples)
            .map(|_| rng.sample_gamma(shape, 1.0))
            .collect::<Result<Vec<_>>>()?;
        let law = Gamma::new(shape, 1.0).expect("valid gamma");
        out.push(ks_check(format!("Gamma({shape}, 1)"), &xs, |x| law.cdf(x)));
    }
    let alphas = [0.5, 1.0, 2.5, 4.0];
    let total: f64 = alphas.iter().sum();
    let draws = (0..samples)
        .map(|_| rng.sample_dirichlet(&alphas))
        .collect::<Result<Vec<_>>>()?;
    for (i, a) in alphas.iter().enumerate() {
        let xs: Vec<f64> = draws.iter().map(|d| d[i]).collect();
        out.push(mean_check(format!("Dirichlet component {i} mean"), &xs, a / total));
    }
    let xs: Vec<f64> = (0..samples).map(|_| rng.standard_normal()).collect();
    out.push(ks_check("standard normal", &xs, crate::stats::normal_cdf));
    Ok(out)
}

/// Backward induction against exhaustive policy search on random small MDPs.
pub fn oracle_suite(instances: usize, rng: &mut Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for i in 0..instances {
        let s = 1 + rng.below(3);
        let a = 1 + rng.below(2);
        let h = 1 + rng.below(3);
        let spec = random_mdp(s, a, h, rng)?;
        let tables = backward_induction(&spec);
        let planned = tables.v(0, spec.initial_state());
        let brute = brute_force_optimal(&spec)?;
        let residual = bellman_residual(&spec, &tables);
        out.push(Check::new(
            format!("random MDP {i} (S={s} A={a} H={h})"),
            (planned - brute).abs() <= 1e-10 && residual <= 1e-12,
            format!("V* {planned:.12} brute {brute:.12} residual {residual:.1e}"),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_a_fixed_seed() {
        for suite in ["weights", "samplers", "oracle"] {
            for c in run_suite(suite, 20_000, 7).unwrap() {
                assert!(c.passed, "{}", c.line());
            }
        }
    }

    #[test]
    fn a_wrong_law_fails() {
        let mut rng = Rng::new(1);
        let xs: Vec<f64> = (0..5000).map(|_| rng.beta(2.0, 5.0)).collect();
        let law = Beta::new(3.0, 5.0).unwrap();
        assert!(!ks_check("x", &xs, |x| law.cdf(x)).passed);
        assert!(!mean_check("x", &xs, 0.375).passed);
    }

    #[test]
    fn bad_arguments() {
        assert!(run_suite("nope", 1000, 0).is_err());
        assert!(run_suite("weights", 10, 0).is_err());
        assert!(run_suite("all", 1000, 0).unwrap().len() > 30);
    }
}
