use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::{HyperParams, ParamMode, PriorInit, StageSchedule};
use crate::envs::{chain, gridworld, random_mdp, BallEnvSpec, GridNoise, TabularMdpSpec};
use crate::error::{Error, Result};
use crate::metric::{MetricHyperParams, PriorCountRule};
use crate::samplers::Rng;

/// Environment descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    Chain {
        length: usize,
        horizon: usize,
        #[serde(default = "default_wrong")]
        wrong: f64,
        #[serde(default = "default_left_reward")]
        left_reward: f64,
        #[serde(default = "default_right_reward")]
        right_reward: f64,
    },
    Gridworld {
        rows: usize,
        cols: usize,
        horizon: usize,
        #[serde(default = "default_wrong")]
        noise: f64,
        #[serde(default)]
        exclude_intended: bool,
    },
    RandomMdp {
        states: usize,
        actions: usize,
        horizon: usize,
        #[serde(default)]
        seed: u64,
    },
    /// A saved `TabularMdpSpec`.
    File { path: PathBuf },
    Ball {
        level: u8,
        /// Overrides the level's transition noise.
        #[serde(default)]
        sigma: Option<f64>,
    },
}

fn default_wrong() -> f64 {
    0.1
}

fn default_left_reward() -> f64 {
    0.05
}

fn default_right_reward() -> f64 {
    1.0
}

/// Instantiated environment.
#[derive(Clone, Debug, PartialEq)]
pub enum Environment {
    Tabular(TabularMdpSpec),
    Ball(BallEnvSpec),
}

impl Environment {
    pub fn horizon(&self) -> usize {
        match self {
            Environment::Tabular(s) => s.horizon(),
            Environment::Ball(b) => b.horizon,
        }
    }
}

impl EnvConfig {
    pub fn build(&self) -> Result<Environment> {
        Ok(match self {
            EnvConfig::Chain {
                length,
                horizon,
                wrong,
                left_reward,
                right_reward,
            } => Environment::Tabular(chain(*length, *horizon, *wrong, *left_reward, *right_reward)?),
            EnvConfig::Gridworld {
                rows,
                cols,
                horizon,
                noise,
                exclude_intended,
            } => {
                let mode = if *exclude_intended {
                    GridNoise::ExcludeIntended
                } else {
                    GridNoise::AllNeighbors
                };
                Environment::Tabular(gridworld(*rows, *cols, *horizon, *noise, mode)?)
            }
            EnvConfig::RandomMdp {
                states,
                actions,
                horizon,
                seed,
            } => Environment::Tabular(random_mdp(*states, *actions, *horizon, &mut Rng::new(*seed))?),
            EnvConfig::File { path } => Environment::Tabular(TabularMdpSpec::load(path)?),
            EnvConfig::Ball { level, sigma } => {
                let mut env = BallEnvSpec::level(*level)?;
                if let Some(s) = sigma {
                    env.sigma = *s;
                }
                env.validate()?;
                Environment::Ball(env)
            }
        })
    }
}

/// Names accepted in the `algorithms` list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    Randql,
    SampledRandql,
    StagedRandql,
    Optql,
    Ucbvi,
    GreedyUcbvi,
    Psrl,
    Rlsvi,
    NetStagedRandql,
    AdaptiveRandql,
    AdaptiveStagedRandql,
    AdaptiveQl,
    Uniform,
}

impl AlgorithmName {
    pub const ALL: [AlgorithmName; 13] = [
        AlgorithmName::Randql,
        AlgorithmName::SampledRandql,
        AlgorithmName::StagedRandql,
        AlgorithmName::Optql,
        AlgorithmName::Ucbvi,
        AlgorithmName::GreedyUcbvi,
        AlgorithmName::Psrl,
        AlgorithmName::Rlsvi,
        AlgorithmName::NetStagedRandql,
        AlgorithmName::AdaptiveRandql,
        AlgorithmName::AdaptiveStagedRandql,
        AlgorithmName::AdaptiveQl,
        AlgorithmName::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmName::Randql => "randql",
            AlgorithmName::SampledRandql => "sampled_randql",
            AlgorithmName::StagedRandql => "staged_randql",
            AlgorithmName::Optql => "optql",
            AlgorithmName::Ucbvi => "ucbvi",
            AlgorithmName::GreedyUcbvi => "greedy_ucbvi",
            AlgorithmName::Psrl => "psrl",
            AlgorithmName::Rlsvi => "rlsvi",
            AlgorithmName::NetStagedRandql => "net_staged_randql",
            AlgorithmName::AdaptiveRandql => "adaptive_randql",
            AlgorithmName::AdaptiveStagedRandql => "adaptive_staged_randql",
            AlgorithmName::AdaptiveQl => "adaptive_ql",
            AlgorithmName::Uniform => "uniform",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == name)
    }

    pub fn runs_on_tabular(self) -> bool {
        !matches!(
            self,
            AlgorithmName::AdaptiveRandql | AlgorithmName::AdaptiveStagedRandql | AlgorithmName::AdaptiveQl
        )
    }

    pub fn runs_on_ball(self) -> bool {
        matches!(
            self,
            AlgorithmName::NetStagedRandql
                | AlgorithmName::AdaptiveRandql
                | AlgorithmName::AdaptiveStagedRandql
                | AlgorithmName::AdaptiveQl
                | AlgorithmName::Uniform
        )
    }
}

/// One algorithm entry. Unset hyperparameters fall back to the algorithm's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub name: Option<AlgorithmName>,
    /// Name used in the output files; defaults to the algorithm name.
    pub label: Option<String>,
    pub mode: Option<ParamMode>,
    /// Confidence level of theory-mode parameters.
    pub delta: Option<f64>,
    pub kappa: Option<f64>,
    pub n0: Option<f64>,
    pub ensemble_size: Option<usize>,
    pub r0: Option<f64>,
    pub stage_schedule: Option<StageSchedule>,
    pub prior_init: Option<PriorInit>,
    /// Net resolution for `net_staged_randql` on the ball.
    pub epsilon: Option<f64>,
    pub lipschitz: Option<f64>,
    pub tn0: Option<f64>,
    pub prior_count: Option<PriorCountRule>,
    /// PSRL only: sample rewards from a Beta posterior instead of using the known ones.
    pub reward_posterior: Option<bool>,
}

impl AlgorithmConfig {
    pub fn named(name: AlgorithmName) -> Self {
        Self {
            name: Some(name),
            ..Self::default()
        }
    }

    pub fn algorithm(&self) -> Result<AlgorithmName> {
        self.name
            .ok_or_else(|| Error::config("every algorithm entry needs a name"))
    }

    pub fn label(&self) -> String {
        match (&self.label, self.name) {
            (Some(l), _) => l.clone(),
            (None, Some(n)) => n.as_str().to_string(),
            (None, None) => String::new(),
        }
    }

    fn theory(&self) -> bool {
        self.mode == Some(ParamMode::Theory)
    }

    fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.1)
    }

    /// Applies the explicit overrides on top of `hp`.
    fn apply(&self, hp: &mut HyperParams) {
        if let Some(x) = self.kappa {
            hp.kappa = x;
        }
        if let Some(x) = self.n0 {
            hp.n0 = x;
        }
        if let Some(x) = self.ensemble_size {
            hp.ensemble_size = x;
        }
        if let Some(x) = self.r0 {
            hp.r0 = x;
        }
        if let Some(x) = self.stage_schedule {
            hp.stage_schedule = x;
        }
        if let Some(x) = self.prior_init {
            hp.prior_init = x;
        }
    }

    /// Tabular hyperparameters for an `S x A x H` task over `episodes` episodes.
    pub fn tabular_params(
        &self,
        states: usize,
        actions: usize,
        horizon: usize,
        episodes: usize,
    ) -> Result<HyperParams> {
        let mut hp = if self.theory() {
            HyperParams::theory(states, actions, horizon, episodes, self.delta())?
        } else {
            HyperParams::practical(states)
        };
        self.apply(&mut hp);
        hp.validate()?;
        Ok(hp)
    }

    /// Metric hyperparameters. `log_net_size` is only used by the fixed-net theory rule.
    pub fn metric_params(
        &self,
        horizon: usize,
        episodes: usize,
        default_lipschitz: f64,
        epsilon: f64,
        log_net_size: f64,
    ) -> Result<MetricHyperParams> {
        let lipschitz = self.lipschitz.unwrap_or(default_lipschitz);
        let adaptive = matches!(
            self.name,
            Some(AlgorithmName::AdaptiveRandql | AlgorithmName::AdaptiveStagedRandql)
        );
        let mut hp = match (self.theory(), adaptive) {
            (true, true) => MetricHyperParams::adaptive_theory(horizon, episodes, self.delta(), 1.0, 2.0, lipschitz)?,
            (true, false) => {
                MetricHyperParams::net_theory(horizon, episodes, self.delta(), epsilon, log_net_size, lipschitz)?
            }
            (false, _) => MetricHyperParams {
                lipschitz,
                epsilon,
                ..MetricHyperParams::practical()
            },
        };
        self.apply(&mut hp.base);
        if let Some(x) = self.tn0 {
            hp.tn0 = x;
        }
        if let Some(x) = self.prior_count {
            hp.prior_count = x;
        }
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    /// `V*_1(s_1) - V^{pi_t}_1(s_1)` for the policy snapshot of each episode.
    Exact,
    /// `V*_1(s_1)` minus the realized return.
    Empirical,
    /// Realized return only.
    RewardOnly,
}

/// Full experiment description, read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub algorithms: Vec<AlgorithmConfig>,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub regret_mode: RegretMode,
    /// Directory receiving the CSV files and the manifest.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Worker threads; 0 or absent uses every core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Root of all random streams.
    #[serde(default)]
    pub master_seed: u64,
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub episodes: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub regret_mode: Option<RegretMode>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(x) = o.episodes {
            self.episodes = x;
        }
        if let Some(x) = &o.seeds {
            self.seeds = x.clone();
        }
        if let Some(x) = o.workers {
            self.workers = Some(x);
        }
        if let Some(x) = &o.output {
            self.output = Some(x.clone());
        }
        if let Some(x) = o.regret_mode {
            self.regret_mode = x;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::config("episodes must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("at least one algorithm is required"));
        }
        let ball = matches!(self.env, EnvConfig::Ball { .. });
        if ball && self.regret_mode != RegretMode::RewardOnly {
            return Err(Error::config(
                "continuous environments only support regret_mode = \"reward_only\"",
            ));
        }
        let mut labels = std::collections::BTreeSet::new();
        for a in &self.algorithms {
            let name = a.algorithm()?;
            if ball && !name.runs_on_ball() {
                return Err(Error::config(format!(
                    "{} does not run on the ball environment",
                    name.as_str()
                )));
            }
            if !ball && !name.runs_on_tabular() {
                return Err(Error::config(format!("{} needs the ball environment", name.as_str())));
            }
            if !labels.insert(a.label()) {
                return Err(Error::config(format!("duplicate algorithm label {:?}", a.label())));
            }
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        if seeds.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
episodes = 100
seeds = [0, 1]
regret_mode = "exact"

[env]
name = "chain"
length = 5
horizon = 10

[[algorithms]]
name = "randql"

[[algorithms]]
name = "staged_randql"
label = "staged_k2"
kappa = 2.0
"#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::from_toml(SAMPLE, Path::new("sample.toml")).unwrap();
        assert_eq!(cfg.algorithms[1].label(), "staged_k2");
        assert_eq!(cfg.algorithms[1].kappa, Some(2.0));
        let env = cfg.env.build().unwrap();
        assert_eq!(env.horizon(), 10);
        let back = ExperimentConfig::from_toml(&cfg.to_toml(), Path::new("echo")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_modes() {
        let bad = SAMPLE.replace("kappa = 2.0", "kapa = 2.0");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad, Path::new("x")),
            Err(Error::Parse { .. })
        ));
        let ball = SAMPLE.replace(
            "name = \"chain\"\nlength = 5\nhorizon = 10",
            "name = \"ball\"\nlevel = 1",
        );
        assert!(matches!(
            ExperimentConfig::from_toml(&ball, Path::new("x")),
            Err(Error::Config(_))
        ));
        let dup = SAMPLE.replace("label = \"staged_k2\"", "label = \"randql\"");
        assert!(ExperimentConfig::from_toml(&dup, Path::new("x")).is_err());
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = ExperimentConfig::from_toml(SAMPLE, Path::new("x")).unwrap();
        cfg.apply(&Overrides {
            seeds: Some(vec![7]),
            episodes: Some(3),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!((cfg.seeds.clone(), cfg.episodes), (vec![7], 3));
        assert!(cfg
            .apply(&Overrides {
                seeds: Some(vec![]),
                ..Overrides::default()
            })
            .is_err());
    }

    #[test]
    fn names_round_trip() {
        for a in AlgorithmName::ALL {
            assert_eq!(AlgorithmName::parse(a.as_str()), Some(a));
        }
    }

    #[test]
    fn parameter_resolution() {
        let a = AlgorithmConfig {
            n0: Some(0.5),
            ..AlgorithmConfig::named(AlgorithmName::Randql)
        };
        let hp = a.tabular_params(5, 2, 10, 100).unwrap();
        assert_eq!((hp.kappa, hp.n0, hp.ensemble_size), (1.0, 0.5, 10));
        let t = AlgorithmConfig {
            mode: Some(ParamMode::Theory),
            ..AlgorithmConfig::named(AlgorithmName::StagedRandql)
        };
        assert_eq!(t.tabular_params(2, 2, 2, 500).unwrap().r0, 2.0);
    }
}
