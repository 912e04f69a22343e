//! Experiment orchestration: configs, parallel multi-seed runs, aggregation
//! and deterministic CSV output.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};

pub use config::{AlgorithmConfig, AlgorithmName, EnvConfig, Environment, ExperimentConfig, Overrides, RegretMode};
pub use output::{
    aggregate, format_value, read_csv, write_aggregate_csv, write_csv, write_manifest, AggregateCurve,
    AGGREGATE_COMMENT,
};
pub use run::{
    agent_rng, build_ball_agent, build_tabular_agent, env_rng, run_ball, run_experiment, run_tabular, RunResult,
    DEFAULT_EPSILON,
};

use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_VAR: &str = "RANDQL_OUTPUT_DIR";

/// Output directory: the config's, else `$RANDQL_OUTPUT_DIR`, else `results`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

/// Files written by [`execute`].
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFiles {
    pub results: PathBuf,
    pub aggregate: PathBuf,
    pub manifest: PathBuf,
}

impl OutputFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            results: dir.join("results.csv"),
            aggregate: dir.join("aggregate.csv"),
            manifest: dir.join("manifest.json"),
        }
    }
}

/// Runs the experiment and writes the results, the aggregate curves and the manifest.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Vec<RunResult>, OutputFiles)> {
    let results = run_experiment(cfg)?;
    let dir = output_dir(cfg);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let files = OutputFiles::in_dir(&dir);
    write_csv(&results, &files.results)?;
    write_aggregate_csv(&aggregate(&results)?, &files.aggregate)?;
    write_manifest(cfg, &results, &files.manifest)?;
    Ok((results, files))
}

/// One sweep axis, parsed from `key=v1,v2,...`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<f64>,
}

const SWEEP_KEYS: [&str; 8] = [
    "kappa",
    "n0",
    "ensemble_size",
    "r0",
    "epsilon",
    "lipschitz",
    "tn0",
    "delta",
];

impl GridAxis {
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, values) = spec
            .split_once('=')
            .ok_or_else(|| Error::config(format!("grid axis {spec:?} is not of the form key=v1,v2")))?;
        let key = key.trim();
        if !SWEEP_KEYS.contains(&key) {
            return Err(Error::config(format!(
                "cannot sweep {key:?}; sweepable keys: {}",
                SWEEP_KEYS.join(", ")
            )));
        }
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("bad grid value {v:?} for {key}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.is_empty() {
            return Err(Error::config(format!("grid axis {key} has no values")));
        }
        Ok(Self {
            key: key.to_string(),
            values,
        })
    }
}

fn set_key(a: &mut AlgorithmConfig, key: &str, v: f64) -> Result<()> {
    match key {
        "kappa" => a.kappa = Some(v),
        "n0" => a.n0 = Some(v),
        "ensemble_size" => {
            if v < 1.0 || v.fract() != 0.0 {
                return Err(Error::config(format!(
                    "ensemble_size must be a positive integer, got {v}"
                )));
            }
            a.ensemble_size = Some(v as usize)
        }
        "r0" => a.r0 = Some(v),
        "epsilon" => a.epsilon = Some(v),
        "lipschitz" => a.lipschitz = Some(v),
        "tn0" => a.tn0 = Some(v),
        "delta" => a.delta = Some(v),
        _ => return Err(Error::config(format!("cannot sweep {key:?}"))),
    }
    Ok(())
}

/// Replaces every algorithm by one copy per grid point, labelled
/// `label/key=value/...`, so a single experiment covers the whole grid.
pub fn expand_grid(cfg: &ExperimentConfig, axes: &[GridAxis]) -> Result<ExperimentConfig> {
    let mut points: Vec<Vec<(&str, f64)>> = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.key.as_str(), *v));
                    q
                })
            })
            .collect();
    }
    let mut out = cfg.clone();
    out.algorithms.clear();
    for a in &cfg.algorithms {
        for p in &points {
            let mut b = a.clone();
            let mut label = a.label();
            for (k, v) in p {
                set_key(&mut b, k, *v)?;
                label.push_str(&format!("/{k}={}", format_value(*v)));
            }
            b.label = Some(label);
            out.algorithms.push(b);
        }
    }
    out.validate()?;
    Ok(out)
}
