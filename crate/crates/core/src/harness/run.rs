use std::time::Instant;

use rayon::prelude::*;

use super::config::{AlgorithmConfig, AlgorithmName, Environment, ExperimentConfig, RegretMode};
use crate::agents::{
    Agent, OptQL, Psrl, RandQL, Rlsvi, SampledRandQL, StagedRandQL, TabularAgent, TabularTask, Ucbvi,
    UniformRandomAgent,
};
use crate::envs::{BallEnvSpec, BallState, TabularMdpSpec};
use crate::error::{Error, Result};
use crate::metric::{AdaptiveAgent, Cover, DiscreteCover, EpsNet, NetStagedRandQL, PriorCountRule};
use crate::oracle::{backward_induction, evaluate_snapshot};
use crate::samplers::Rng;

/// Net resolution used by `net_staged_randql` on the ball when none is configured.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Outcome of one `(algorithm, seed)` run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub algorithm: String,
    pub seed: u64,
    /// Cumulative regret (exact, empirical) or cumulative reward (reward_only), one entry per episode.
    pub series: Vec<f64>,
    pub wall_time: f64,
    /// Digest of the final greedy policy, for tabular environments.
    pub policy_digest: Option<String>,
}

/// Stream of the agent for `(label, seed)`.
pub fn agent_rng(master_seed: u64, label: &str, seed: u64) -> Rng {
    Rng::new(master_seed)
        .derive(&format!("agent/{label}"))
        .derive_indexed("seed", seed)
}

/// Environment stream for `seed`, shared by all algorithms (common random numbers).
pub fn env_rng(master_seed: u64, seed: u64) -> Rng {
    Rng::new(master_seed).derive("env").derive_indexed("seed", seed)
}

pub fn build_tabular_agent(
    cfg: &AlgorithmConfig,
    spec: &TabularMdpSpec,
    episodes: usize,
    rng: &Rng,
) -> Result<Box<dyn TabularAgent>> {
    let task = TabularTask::from_spec(spec);
    let (s, a, h) = (spec.states(), spec.actions(), spec.horizon());
    let hp = || cfg.tabular_params(s, a, h, episodes);
    Ok(match cfg.algorithm()? {
        AlgorithmName::Randql => Box::new(RandQL::new(task, hp()?, rng)?),
        AlgorithmName::SampledRandql => Box::new(SampledRandQL::new(task, hp()?, rng)?),
        AlgorithmName::StagedRandql => Box::new(StagedRandQL::new(task, hp()?, rng)?),
        AlgorithmName::Optql => Box::new(OptQL::new(task)),
        AlgorithmName::Ucbvi => Box::new(Ucbvi::new(task)),
        AlgorithmName::GreedyUcbvi => Box::new(Ucbvi::greedy(task)),
        AlgorithmName::Psrl => {
            let psrl = Psrl::new(task, rng);
            if cfg.reward_posterior.unwrap_or(false) {
                Box::new(psrl.with_reward_posterior())
            } else {
                Box::new(psrl)
            }
        }
        AlgorithmName::Rlsvi => Box::new(Rlsvi::new(task, rng)),
        AlgorithmName::NetStagedRandql => {
            let mut mhp = cfg.metric_params(h, episodes, 0.0, 0.0, ((s * a) as f64).ln())?;
            if cfg.mode != Some(crate::agents::ParamMode::Theory) {
                // On a tabular task the net agent mirrors the tabular defaults.
                mhp.base = hp()?;
                if cfg.prior_count.is_none() {
                    mhp.prior_count = PriorCountRule::Constant;
                }
            }
            Box::new(NetStagedRandQL::new(
                DiscreteCover { states: s, actions: a },
                h,
                mhp,
                rng,
            )?)
        }
        AlgorithmName::Uniform => Box::new(UniformRandomAgent::new(h, s, a, rng)),
        other => return Err(Error::config(format!("{} needs the ball environment", other.as_str()))),
    })
}

pub fn build_ball_agent(
    cfg: &AlgorithmConfig,
    env: &BallEnvSpec,
    episodes: usize,
    rng: &Rng,
) -> Result<Box<dyn Agent<BallState>>> {
    let h = env.horizon;
    let actions = env.n_actions();
    // Lipschitz constant L_r + (1 + L_F) L_V with L_V taken equal to L_r.
    let lipschitz = env.reward_lipschitz() * (2.0 + env.transition_lipschitz());
    Ok(match cfg.algorithm()? {
        AlgorithmName::NetStagedRandql => {
            let eps = cfg.epsilon.unwrap_or(DEFAULT_EPSILON);
            let net = EpsNet::new(eps, actions)?;
            let hp = cfg.metric_params(h, episodes, lipschitz, eps, (net.n_balls() as f64).ln())?;
            Box::new(NetStagedRandQL::new(net, h, hp, rng)?)
        }
        AlgorithmName::AdaptiveRandql => Box::new(AdaptiveAgent::randql(
            h,
            actions,
            cfg.metric_params(h, episodes, lipschitz, 0.0, 0.0)?,
            rng,
        )?),
        AlgorithmName::AdaptiveStagedRandql => Box::new(AdaptiveAgent::staged(
            h,
            actions,
            cfg.metric_params(h, episodes, lipschitz, 0.0, 0.0)?,
            rng,
        )?),
        AlgorithmName::AdaptiveQl => Box::new(AdaptiveAgent::optql(h, actions)),
        AlgorithmName::Uniform => Box::new(UniformRandomAgent::new(h, 1, actions, rng)),
        other => {
            return Err(Error::config(format!(
                "{} does not run on the ball environment",
                other.as_str()
            )))
        }
    })
}

/// Runs `episodes` episodes and returns the cumulative series together with
/// the digest of the last policy snapshot.
pub fn run_tabular(
    spec: &TabularMdpSpec,
    agent: &mut dyn TabularAgent,
    episodes: usize,
    mode: RegretMode,
    env_rng: &mut Rng,
) -> Result<(Vec<f64>, String)> {
    let v_star = backward_induction(spec).v(0, spec.initial_state());
    let mut series = Vec::with_capacity(episodes);
    let mut total = 0.0;
    for _ in 0..episodes {
        agent.begin_episode();
        let exact = match mode {
            RegretMode::Exact => Some(v_star - evaluate_snapshot(spec, &agent.policy_snapshot())?),
            _ => None,
        };
        let mut s = spec.initial_state();
        let mut ret = 0.0;
        for h in 0..spec.horizon() {
            let a = agent.act(h, &s);
            let out = spec.step(h, s, a, env_rng);
            agent.observe(h, &s, a, out.reward, &out.next_state);
            ret += out.reward;
            s = out.next_state;
        }
        total += match mode {
            RegretMode::Exact => exact.unwrap_or_default(),
            RegretMode::Empirical => v_star - ret,
            RegretMode::RewardOnly => ret,
        };
        series.push(total);
    }
    agent.begin_episode();
    Ok((series, agent.policy_snapshot().digest()))
}

/// Runs `episodes` episodes on the ball and returns the cumulative reward.
pub fn run_ball(
    env: &BallEnvSpec,
    agent: &mut dyn Agent<BallState>,
    episodes: usize,
    env_rng: &mut Rng,
) -> Result<Vec<f64>> {
    let mut series = Vec::with_capacity(episodes);
    let mut total = 0.0;
    for _ in 0..episodes {
        agent.begin_episode();
        let mut s = env.initial_state(env_rng);
        for h in 0..env.horizon {
            let a = agent.act(h, &s);
            let out = env.step(s, a, env_rng)?;
            agent.observe(h, &s, a, out.reward, &out.next_state);
            total += out.reward;
            s = out.next_state;
        }
        series.push(total);
    }
    Ok(series)
}

fn run_one(cfg: &ExperimentConfig, env: &Environment, alg: &AlgorithmConfig, seed: u64) -> Result<RunResult> {
    let start = Instant::now();
    let label = alg.label();
    let rng = agent_rng(cfg.master_seed, &label, seed);
    let mut erng = env_rng(cfg.master_seed, seed);
    let (series, digest) = match env {
        Environment::Tabular(spec) => {
            let mut agent = build_tabular_agent(alg, spec, cfg.episodes, &rng)?;
            let (series, digest) = run_tabular(spec, agent.as_mut(), cfg.episodes, cfg.regret_mode, &mut erng)?;
            (series, Some(digest))
        }
        Environment::Ball(b) => {
            let mut agent = build_ball_agent(alg, b, cfg.episodes, &rng)?;
            (run_ball(b, agent.as_mut(), cfg.episodes, &mut erng)?, None)
        }
    };
    Ok(RunResult {
        algorithm: label,
        seed,
        series,
        wall_time: start.elapsed().as_secs_f64(),
        policy_digest: digest,
    })
}

/// Runs every `(algorithm, seed)` pair, in parallel over `cfg.workers` threads.
/// Results come back ordered by `(algorithm label, seed)` and do not depend on
/// the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let env = cfg.env.build()?;
    if let Environment::Tabular(spec) = &env {
        let cells = (spec.horizon() * spec.states() * spec.actions() * spec.states()) as f64;
        if cfg.regret_mode == RegretMode::Exact && cells > 1e8 {
            return Err(Error::InstanceTooLarge {
                policies: cells,
                limit: 1e8,
            });
        }
    }
    let mut jobs: Vec<(&AlgorithmConfig, u64)> = cfg
        .algorithms
        .iter()
        .flat_map(|a| cfg.seeds.iter().map(move |s| (a, *s)))
        .collect();
    jobs.sort_by_cached_key(|(a, s)| (a.label(), *s));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<RunResult>> =
        pool.install(|| jobs.par_iter().map(|(a, s)| run_one(cfg, &env, a, *s)).collect());
    results.into_iter().collect()
}
