use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use randql::envs::{chain, gridworld, random_mdp, GridNoise, TabularMdpSpec};
use randql::harness::{
    aggregate, execute, expand_grid, AlgorithmName, ExperimentConfig, GridAxis, Overrides, RegretMode, OUTPUT_DIR_VAR,
};
use randql::oracle::backward_induction;
use randql::selftest::run_suite;
use randql::{Error, Rng};

fn algorithm_list() -> String {
    let names: Vec<&str> = AlgorithmName::ALL.iter().map(|a| a.as_str()).collect();
    format!(
        "Algorithms: {}\n\nThe output directory defaults to ${OUTPUT_DIR_VAR}, then ./results.",
        names.join(", ")
    )
}

#[derive(Parser, Debug)]
#[command(
    name = "randql",
    version,
    about = "Randomized Q-learning experiments on episodic MDPs"
)]
#[command(after_help = algorithm_list())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment described by a TOML config.
    #[command(after_help = algorithm_list())]
    Run(RunArgs),
    /// Run an experiment once per point of a hyperparameter grid.
    #[command(after_help = algorithm_list())]
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Grid axis `key=v1,v2,...`; repeat for a product grid.
        #[arg(long = "grid", required = true)]
        grid: Vec<String>,
    },
    /// Print the optimal value V*_1(s_1) of a tabular environment.
    Oracle(OracleArgs),
    /// Run the built-in statistical checks.
    Selftest {
        #[arg(value_parser = ["weights", "samplers", "oracle", "all"], default_value = "all")]
        suite: String,
        /// Draws per distributional check.
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Master seed of every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Seeds to run: `0,1,2` or a range `0..8`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Worker threads (0 uses every core).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Regret mode override.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Empirical,
    RewardOnly,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EnvArg {
    Chain,
    Gridworld,
    Random,
    File,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long, value_enum)]
    env: EnvArg,
    /// Chain length.
    #[arg(long = "L")]
    length: Option<usize>,
    /// Horizon.
    #[arg(long = "H")]
    horizon: Option<usize>,
    /// Chain slip or gridworld noise probability.
    #[arg(long, default_value_t = 0.1)]
    wrong: f64,
    #[arg(long, default_value_t = 0.05)]
    left_reward: f64,
    #[arg(long, default_value_t = 1.0)]
    right_reward: f64,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    /// Random MDP size.
    #[arg(long = "S")]
    states: Option<usize>,
    #[arg(long = "A")]
    actions: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Saved MDP file.
    #[arg(long)]
    path: Option<PathBuf>,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::Config(format!("bad --seeds value {text:?}; use `0,1,2` or `0..8`"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        );
        return if a < b { Ok((a..b).collect()) } else { Err(bad()) };
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    cfg.apply(&Overrides {
        episodes: args.episodes,
        seeds: args.seeds.as_deref().map(parse_seeds).transpose()?,
        workers: args.workers,
        output: args.output.clone(),
        regret_mode: args.mode.map(|m| match m {
            ModeArg::Exact => RegretMode::Exact,
            ModeArg::Empirical => RegretMode::Empirical,
            ModeArg::RewardOnly => RegretMode::RewardOnly,
        }),
    })?;
    Ok(cfg)
}

fn run(cfg: &ExperimentConfig) -> Result<(), Error> {
    let (results, files) = execute(cfg)?;
    for curve in aggregate(&results)? {
        let last = curve.mean.len() - 1;
        println!(
            "{:<32} final mean {:.6} std {:.6}",
            curve.algorithm, curve.mean[last], curve.std[last]
        );
    }
    println!("wrote {}", files.results.display());
    println!("wrote {}", files.aggregate.display());
    println!("wrote {}", files.manifest.display());
    Ok(())
}

fn required<T>(value: Option<T>, flag: &str, env: &str) -> Result<T, Error> {
    value.ok_or_else(|| Error::Config(format!("--env {env} requires {flag}")))
}

fn oracle_env(a: &OracleArgs) -> Result<TabularMdpSpec, Error> {
    match a.env {
        EnvArg::Chain => chain(
            required(a.length, "--L", "chain")?,
            required(a.horizon, "--H", "chain")?,
            a.wrong,
            a.left_reward,
            a.right_reward,
        ),
        EnvArg::Gridworld => gridworld(
            required(a.rows, "--rows", "gridworld")?,
            required(a.cols, "--cols", "gridworld")?,
            required(a.horizon, "--H", "gridworld")?,
            a.wrong,
            GridNoise::AllNeighbors,
        ),
        EnvArg::Random => random_mdp(
            required(a.states, "--S", "random")?,
            required(a.actions, "--A", "random")?,
            required(a.horizon, "--H", "random")?,
            &mut Rng::new(a.seed),
        ),
        EnvArg::File => TabularMdpSpec::load(required(a.path.as_ref(), "--path", "file")?),
    }
}

fn dispatch(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Run(args) => run(&load_config(&args)?).map(|_| true),
        Command::Sweep { run: args, grid } => {
            let axes = grid.iter().map(|g| GridAxis::parse(g)).collect::<Result<Vec<_>, _>>()?;
            let cfg = expand_grid(&load_config(&args)?, &axes)?;
            run(&cfg).map(|_| true)
        }
        Command::Oracle(args) => {
            let spec = oracle_env(&args)?;
            println!("{}", backward_induction(&spec).v(0, spec.initial_state()));
            Ok(true)
        }
        Command::Selftest { suite, samples, seed } => {
            let checks = run_suite(&suite, samples, seed)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{}", c.line());
            }
            println!("{} checks, {failed} failed", checks.len());
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // A failing self-check is a runtime failure, not bad input.
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
