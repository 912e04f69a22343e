use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::RunResult;
use crate::error::{Error, Result};

/// Decimal rendering with 12 significant digits (the `%.12g` convention).
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let fixed = format!("{:.*}", (11 - exp) as usize, x);
    trim_zeros(&fixed).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes `algorithm,seed,episode,value` rows sorted by `(algorithm, seed, episode)`.
/// Episodes are numbered from 1.
pub fn write_csv(results: &[RunResult], path: &Path) -> Result<()> {
    let mut sorted: Vec<&RunResult> = results.iter().collect();
    sorted.sort_by(|a, b| (&a.algorithm, a.seed).cmp(&(&b.algorithm, b.seed)));
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["algorithm", "seed", "episode", "value"])
        .map_err(|e| csv_err(path, e))?;
    for r in sorted {
        let seed = r.seed.to_string();
        for (i, v) in r.series.iter().enumerate() {
            w.write_record([r.algorithm.as_str(), &seed, &(i + 1).to_string(), &format_value(*v)])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`write_csv`] back into per-run series.
pub fn read_csv(path: &Path) -> Result<Vec<RunResult>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut runs: Vec<RunResult> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let bad = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            message: format!("bad {what} in row {rec:?}"),
        };
        let algorithm = rec.get(0).ok_or_else(|| bad("algorithm"))?;
        let seed: u64 = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("seed"))?;
        let value: f64 = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("value"))?;
        match runs.last_mut() {
            Some(last) if last.algorithm == algorithm && last.seed == seed => last.series.push(value),
            _ => runs.push(RunResult {
                algorithm: algorithm.to_string(),
                seed,
                series: vec![value],
                wall_time: 0.0,
                policy_digest: None,
            }),
        }
    }
    Ok(runs)
}

/// Pointwise mean and population standard deviation over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateCurve {
    pub algorithm: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn aggregate(results: &[RunResult]) -> Result<Vec<AggregateCurve>> {
    let mut groups: BTreeMap<&str, Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        groups.entry(&r.algorithm).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(name, runs)| {
            let len = runs[0].series.len();
            if runs.iter().any(|r| r.series.len() != len) {
                return Err(Error::config(format!("runs of {name} have different episode counts")));
            }
            let n = runs.len() as f64;
            let mut mean = vec![0.0; len];
            let mut std = vec![0.0; len];
            for t in 0..len {
                let m = runs.iter().map(|r| r.series[t]).sum::<f64>() / n;
                let var = runs.iter().map(|r| (r.series[t] - m).powi(2)).sum::<f64>() / n;
                mean[t] = m;
                std[t] = var.sqrt();
            }
            Ok(AggregateCurve {
                algorithm: name.to_string(),
                mean,
                std,
            })
        })
        .collect()
}

pub const AGGREGATE_COMMENT: &str = "# std is the population standard deviation over seeds (divisor n)";

/// Writes `algorithm,episode,mean,std` after a comment line stating the std convention.
pub fn write_aggregate_csv(curves: &[AggregateCurve], path: &Path) -> Result<()> {
    let mut file = create(path)?;
    writeln!(file, "{AGGREGATE_COMMENT}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["algorithm", "episode", "mean", "std"])
        .map_err(|e| csv_err(path, e))?;
    for c in curves {
        for (i, (m, s)) in c.mean.iter().zip(&c.std).enumerate() {
            w.write_record([
                c.algorithm.as_str(),
                &(i + 1).to_string(),
                &format_value(*m),
                &format_value(*s),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct ManifestRun<'a> {
    algorithm: &'a str,
    seed: u64,
    wall_time_seconds: f64,
    policy_digest: Option<&'a str>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    git_describe: Option<String>,
    config: &'a ExperimentConfig,
    runs: Vec<ManifestRun<'a>>,
}

fn git_describe() -> Option<String> {
    let out = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
}

/// JSON manifest echoing the config with per-run wall times.
pub fn write_manifest(cfg: &ExperimentConfig, results: &[RunResult], path: &Path) -> Result<()> {
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        git_describe: git_describe(),
        config: cfg,
        runs: results
            .iter()
            .map(|r| ManifestRun {
                algorithm: &r.algorithm,
                seed: r.seed,
                wall_time_seconds: r.wall_time,
                policy_digest: r.policy_digest.as_deref(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(name: &str, seed: u64, series: Vec<f64>) -> RunResult {
        RunResult {
            algorithm: name.into(),
            seed,
            series,
            wall_time: 0.0,
            policy_digest: None,
        }
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(1.0), "1");
        assert_eq!(format_value(-2.5), "-2.5");
        assert_eq!(format_value(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_value(123456.7890123456), "123456.789012");
        assert_eq!(format_value(1e-7), "1e-7");
        assert_eq!(format_value(1.5e15), "1.5e15");
        assert_eq!(format_value(22.459_868_850_765_172), "22.4598688508");
    }

    #[test]
    fn aggregate_population_std() {
        let curves = aggregate(&[run("a", 0, vec![0.0, 1.0]), run("a", 1, vec![2.0, 1.0])]).unwrap();
        assert_eq!(curves[0].mean, vec![1.0, 1.0]);
        assert_eq!(curves[0].std, vec![1.0, 0.0]);
        let single = aggregate(&[run("b", 3, vec![4.0, 5.0])]).unwrap();
        assert_eq!(single[0].std, vec![0.0, 0.0]);
        assert!(aggregate(&[run("a", 0, vec![1.0]), run("a", 1, vec![1.0, 2.0])]).is_err());
    }

    #[test]
    fn aggregate_commutes_with_truncation() {
        let runs = vec![run("a", 0, vec![0.5, 1.5, 4.0]), run("a", 1, vec![1.0, 3.0, 3.5])];
        let full = aggregate(&runs).unwrap();
        let cut: Vec<RunResult> = runs.iter().map(|r| run("a", r.seed, r.series[..2].to_vec())).collect();
        let part = aggregate(&cut).unwrap();
        assert_eq!(part[0].mean[..], full[0].mean[..2]);
        assert_eq!(part[0].std[..], full[0].std[..2]);
    }

    #[test]
    fn empty_results_give_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_csv(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "algorithm,seed,episode,value\n");
    }

    #[test]
    fn csv_round_trip_and_sorting() {
        let dir = tempfile::tempdir().unwrap();
        let runs = vec![
            run("b,x", 1, vec![0.1, 0.30000000000000004]),
            run("a", 2, vec![1.0 / 3.0]),
            run("a", 0, vec![2.0 / 3.0, 1e-9]),
        ];
        let p1 = dir.path().join("1.csv");
        let p2 = dir.path().join("2.csv");
        write_csv(&runs, &p1).unwrap();
        let mut permuted = runs.clone();
        permuted.reverse();
        write_csv(&permuted, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        let back = read_csv(&p1).unwrap();
        assert_eq!(
            back.iter().map(|r| (r.algorithm.as_str(), r.seed)).collect::<Vec<_>>(),
            [("a", 0), ("a", 2), ("b,x", 1)]
        );
        for b in &back {
            let orig = runs
                .iter()
                .find(|r| r.algorithm == b.algorithm && r.seed == b.seed)
                .unwrap();
            for (x, y) in b.series.iter().zip(&orig.series) {
                assert!((x - y).abs() <= 5e-12 * y.abs());
                assert_eq!(format_value(*x), format_value(*y));
            }
        }
        // Writing the parsed values again reproduces the bytes.
        let p3 = dir.path().join("3.csv");
        write_csv(&back, &p3).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p3).unwrap());
    }

    #[test]
    fn aggregate_file_has_comment_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("agg.csv");
        write_aggregate_csv(&aggregate(&[run("a", 0, vec![1.0])]).unwrap(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, [AGGREGATE_COMMENT, "algorithm,episode,mean,std", "a,1,1,0"]);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = write_csv(&[], &blocker.join("sub.csv")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
