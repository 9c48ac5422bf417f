//! Seeded Monte-Carlo campaigns comparing the fixed-point theory against
//! empirical equilibria: parameter sweeps, pooled survivor histograms and
//! diversity time series under the step scenario.
//!
//! Reproducibility contract: trial `t` draws its matrix from the stream
//! `base_seed ^ t`, trials are independent work items reduced in trial-index
//! order, and emitted tables carry no timestamps, so identical configs give
//! byte-identical outputs regardless of thread count.

use crate::diversity::hill_number;
use crate::dynamics::{integrate_lv_with_stride, InteractionSchedule};
use crate::ensemble::{is_admissible, sample_interaction_matrix, EntryDist};
use crate::equilibrium::{compute_equilibrium, survivor_stats, SURVIVAL_THRESHOLD};
use crate::heuristics::{solve_heuristic_system, survivor_cdf, survivor_density, HeuristicSolution};
use crate::{LvError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Normal 97.5% quantile for the 95% confidence intervals.
const CI_FACTOR: f64 = 1.96;
pub const DEFAULT_BINS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    EquilibriumSweep,
    Histogram,
    DiversityTimeseries,
}

impl std::str::FromStr for Scenario {
    type Err = LvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equilibrium-sweep" => Ok(Scenario::EquilibriumSweep),
            "histogram" => Ok(Scenario::Histogram),
            "diversity-timeseries" => Ok(Scenario::DiversityTimeseries),
            other => Err(LvError::InvalidInput(format!(
                "unknown scenario '{other}' (expected equilibrium-sweep, histogram \
                 or diversity-timeseries)"
            ))),
        }
    }
}

/// Step-scenario parameters for the diversity time series.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StepParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub dist: EntryDist,
    pub alphas: Vec<f64>,
    pub mus: Vec<f64>,
    pub bins: usize,
    pub dynamics: Option<StepParams>,
}

impl CampaignConfig {
    /// Parses the key-value campaign file format. Lines are `key = value`,
    /// `#` starts a comment, lists are comma-separated.
    ///
    /// Keys: `scenario`, `n`, `trials` (required); `base_seed` (default:
    /// `fallback_seed`), `dist` (default: standard-gaussian), `alphas`,
    /// `mus`, `bins` (histogram, default 50); `alpha1`, `alpha2`, `t0`,
    /// `t_end` (required for diversity-timeseries), `dt` (default 0.01),
    /// `record_stride` (default 10).
    pub fn from_key_values(text: &str, fallback_seed: u64) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                LvError::InvalidInput(format!(
                    "config line {}: expected 'key = value', got '{raw_line}'",
                    lineno + 1
                ))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        let take = |map: &mut std::collections::BTreeMap<String, String>, key: &str| {
            map.remove(key)
        };
        let required = |v: Option<String>, key: &str| {
            v.ok_or_else(|| LvError::InvalidInput(format!("config is missing '{key}'")))
        };

        let scenario: Scenario = required(take(&mut map, "scenario"), "scenario")?.parse()?;
        let n = parse_num::<usize>(&required(take(&mut map, "n"), "n")?, "n")?;
        let trials = parse_num::<usize>(&required(take(&mut map, "trials"), "trials")?, "trials")?;
        let base_seed = match take(&mut map, "base_seed") {
            Some(v) => parse_num::<u64>(&v, "base_seed")?,
            None => fallback_seed,
        };
        let dist: EntryDist = match take(&mut map, "dist") {
            Some(v) => v.parse()?,
            None => EntryDist::StandardGaussian,
        };
        let alphas = match take(&mut map, "alphas") {
            Some(v) => parse_list(&v, "alphas")?,
            None => Vec::new(),
        };
        let mus = match take(&mut map, "mus") {
            Some(v) => parse_list(&v, "mus")?,
            None => vec![0.0],
        };
        let bins = match take(&mut map, "bins") {
            Some(v) => parse_num::<usize>(&v, "bins")?,
            None => DEFAULT_BINS,
        };
        let dynamics = if scenario == Scenario::DiversityTimeseries {
            Some(StepParams {
                alpha1: parse_num(&required(take(&mut map, "alpha1"), "alpha1")?, "alpha1")?,
                alpha2: parse_num(&required(take(&mut map, "alpha2"), "alpha2")?, "alpha2")?,
                t0: parse_num(&required(take(&mut map, "t0"), "t0")?, "t0")?,
                t_end: parse_num(&required(take(&mut map, "t_end"), "t_end")?, "t_end")?,
                dt: match take(&mut map, "dt") {
                    Some(v) => parse_num(&v, "dt")?,
                    None => crate::dynamics::DEFAULT_DT,
                },
                record_stride: match take(&mut map, "record_stride") {
                    Some(v) => parse_num(&v, "record_stride")?,
                    None => crate::dynamics::DEFAULT_RECORD_STRIDE,
                },
            })
        } else {
            None
        };
        if let Some(unknown) = map.keys().next() {
            return Err(LvError::InvalidInput(format!("unknown config key '{unknown}'")));
        }
        let cfg = CampaignConfig {
            scenario,
            n,
            trials,
            base_seed,
            dist,
            alphas,
            mus,
            bins,
            dynamics,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(LvError::InvalidInput("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(LvError::InvalidInput("trials must be at least 1".into()));
        }
        match self.scenario {
            Scenario::EquilibriumSweep => {
                if self.alphas.is_empty() || self.mus.is_empty() {
                    return Err(LvError::InvalidInput(
                        "equilibrium-sweep needs non-empty 'alphas' and 'mus' grids".into(),
                    ));
                }
            }
            Scenario::Histogram => {
                if self.alphas.len() != 1 || self.mus.len() != 1 {
                    return Err(LvError::InvalidInput(
                        "histogram needs exactly one alpha and one mu".into(),
                    ));
                }
                if self.bins == 0 {
                    return Err(LvError::InvalidInput("bins must be at least 1".into()));
                }
            }
            Scenario::DiversityTimeseries => {
                if self.mus.len() != 1 {
                    return Err(LvError::InvalidInput(
                        "diversity-timeseries needs exactly one mu".into(),
                    ));
                }
                if self.dynamics.is_none() {
                    return Err(LvError::InvalidInput(
                        "diversity-timeseries needs alpha1, alpha2, t0 and t_end".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed ^ trial as u64
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse::<T>()
        .map_err(|_| LvError::InvalidInput(format!("config value for '{key}' is invalid: '{s}'")))
}

fn parse_list(s: &str, key: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_num::<f64>(t, key))
        .collect()
}

/// One grid point of a theory-vs-empirics sweep: Monte-Carlo means with 95%
/// confidence half-widths next to the fixed-point prediction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub mu: f64,
    pub trials_used: usize,
    pub failures: usize,
    /// Set when more than 10% of the trials failed.
    pub flagged: bool,
    pub p_hat_mean: f64,
    pub p_hat_ci: f64,
    pub m_hat_mean: f64,
    pub m_hat_ci: f64,
    pub sigma_hat_mean: f64,
    pub sigma_hat_ci: f64,
    pub p_star: f64,
    pub m_star: f64,
    pub sigma_star: f64,
    pub delta_star: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

fn mean_and_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, CI_FACTOR * (var / n).sqrt())
}

/// Theory-vs-Monte-Carlo sweep over the `alphas x mus` grid. Every grid
/// point must be admissible.
pub fn run_equilibrium_sweep(cfg: &CampaignConfig) -> Result<SweepResult> {
    cfg.validate()?;
    for &alpha in &cfg.alphas {
        for &mu in &cfg.mus {
            if !is_admissible(alpha, mu) {
                return Err(LvError::InvalidInput(format!(
                    "sweep grid point (alpha, mu) = ({alpha}, {mu}) is not admissible"
                )));
            }
        }
    }
    let mut records = Vec::new();
    for &alpha in &cfg.alphas {
        for &mu in &cfg.mus {
            let theory = solve_heuristic_system(alpha, mu, None)?;
            let samples: Vec<Option<(f64, f64, f64)>> = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let b = sample_interaction_matrix(
                        cfg.n,
                        alpha,
                        mu,
                        cfg.dist,
                        cfg.trial_seed(trial),
                    )
                    .ok()?;
                    let eq = compute_equilibrium(&b).ok()?;
                    let stats = survivor_stats(&eq).ok()?;
                    Some((stats.p_hat, stats.m_hat, stats.sigma_hat))
                })
                .collect();
            let used: Vec<(f64, f64, f64)> = samples.iter().flatten().copied().collect();
            let failures = cfg.trials - used.len();
            if used.is_empty() {
                return Err(LvError::Numerical(format!(
                    "all {} trials failed at (alpha, mu) = ({alpha}, {mu})",
                    cfg.trials
                )));
            }
            let p: Vec<f64> = used.iter().map(|s| s.0).collect();
            let m: Vec<f64> = used.iter().map(|s| s.1).collect();
            let sigma: Vec<f64> = used.iter().map(|s| s.2).collect();
            let (p_hat_mean, p_hat_ci) = mean_and_ci(&p);
            let (m_hat_mean, m_hat_ci) = mean_and_ci(&m);
            let (sigma_hat_mean, sigma_hat_ci) = mean_and_ci(&sigma);
            records.push(SweepRecord {
                alpha,
                mu,
                trials_used: used.len(),
                failures,
                flagged: failures * 10 > cfg.trials,
                p_hat_mean,
                p_hat_ci,
                m_hat_mean,
                m_hat_ci,
                sigma_hat_mean,
                sigma_hat_ci,
                p_star: theory.p_star,
                m_star: theory.m_star,
                sigma_star: theory.sigma_star,
                delta_star: theory.delta_star,
            });
        }
    }
    Ok(SweepResult { records })
}

/// Pooled survivor histogram with the theoretical density overlay and the
/// Kolmogorov-Smirnov distance of the pooled sample against the analytic
/// distribution function (computed on the raw sample, not on bins).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistogramResult {
    pub alpha: f64,
    pub mu: f64,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub empirical_density: Vec<f64>,
    pub theory_density: Vec<f64>,
    pub ks_statistic: f64,
    pub sample_count: usize,
    pub trials_used: usize,
    pub failures: usize,
    pub theory: HeuristicSolution,
}

pub fn run_survivor_histogram(cfg: &CampaignConfig) -> Result<HistogramResult> {
    cfg.validate()?;
    if cfg.scenario != Scenario::Histogram {
        return Err(LvError::InvalidInput("config scenario is not 'histogram'".into()));
    }
    let (alpha, mu) = (cfg.alphas[0], cfg.mus[0]);
    let theory = solve_heuristic_system(alpha, mu, None)?;

    let per_trial: Vec<Option<Vec<f64>>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let b =
                sample_interaction_matrix(cfg.n, alpha, mu, cfg.dist, cfg.trial_seed(trial))
                    .ok()?;
            let eq = compute_equilibrium(&b).ok()?;
            Some(
                eq.x_star
                    .iter()
                    .copied()
                    .filter(|&x| x > SURVIVAL_THRESHOLD)
                    .collect::<Vec<f64>>(),
            )
        })
        .collect();
    let trials_used = per_trial.iter().flatten().count();
    let failures = cfg.trials - trials_used;
    let pooled: Vec<f64> = per_trial.into_iter().flatten().flatten().collect();
    if pooled.is_empty() {
        return Err(LvError::Numerical("no survivors pooled across trials".into()));
    }

    let mut sorted = pooled.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("abundances are finite"));
    let count = sorted.len() as f64;
    let mut ks_statistic: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = survivor_cdf(x, &theory);
        ks_statistic = ks_statistic.max(f - i as f64 / count);
        ks_statistic = ks_statistic.max((i + 1) as f64 / count - f);
    }

    let max = *sorted.last().expect("non-empty");
    let width = max / cfg.bins as f64;
    let mut counts = vec![0u64; cfg.bins];
    for &x in &pooled {
        let mut idx = (x / width) as usize;
        if idx >= cfg.bins {
            idx = cfg.bins - 1;
        }
        counts[idx] += 1;
    }
    let bin_edges: Vec<f64> = (0..=cfg.bins).map(|i| i as f64 * width).collect();
    let empirical_density: Vec<f64> =
        counts.iter().map(|&c| c as f64 / (count * width)).collect();
    let theory_density: Vec<f64> = (0..cfg.bins)
        .map(|i| survivor_density((i as f64 + 0.5) * width, &theory))
        .collect();

    Ok(HistogramResult {
        alpha,
        mu,
        bin_edges,
        counts,
        empirical_density,
        theory_density,
        ks_statistic,
        sample_count: pooled.len(),
        trials_used,
        failures,
        theory,
    })
}

/// Across-trial mean and quantiles of the Hill number along the step
/// scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeseriesResult {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q25: Vec<f64>,
    pub q50: Vec<f64>,
    pub q75: Vec<f64>,
    pub q95: Vec<f64>,
    pub trials_used: usize,
    pub failures: usize,
}

pub fn run_diversity_timeseries(cfg: &CampaignConfig) -> Result<TimeseriesResult> {
    cfg.validate()?;
    let params = cfg.dynamics.ok_or_else(|| {
        LvError::InvalidInput("diversity-timeseries needs step parameters".into())
    })?;
    let mu = cfg.mus[0];

    let per_trial: Vec<Option<(Vec<f64>, Vec<f64>)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let schedule = InteractionSchedule::step(
                cfg.n,
                cfg.dist,
                cfg.trial_seed(trial),
                mu,
                params.alpha1,
                params.alpha2,
                params.t0,
            )
            .ok()?;
            let x0 = vec![1.0; cfg.n];
            let traj = integrate_lv_with_stride(
                &schedule,
                &x0,
                params.t_end,
                params.dt,
                params.record_stride,
            )
            .ok()?;
            let hill: Option<Vec<f64>> =
                traj.states.iter().map(|s| hill_number(s).ok()).collect();
            Some((traj.times, hill?))
        })
        .collect();

    let trials_used = per_trial.iter().flatten().count();
    let failures = cfg.trials - trials_used;
    let successful: Vec<(Vec<f64>, Vec<f64>)> = per_trial.into_iter().flatten().collect();
    let (times, _) = successful
        .first()
        .cloned()
        .ok_or_else(|| LvError::Numerical("every trial of the time series failed".into()))?;

    let steps = times.len();
    let mut mean = vec![0.0; steps];
    let mut quantiles = vec![Vec::with_capacity(successful.len()); steps];
    for (_, hill) in &successful {
        debug_assert_eq!(hill.len(), steps);
        for (i, &h) in hill.iter().enumerate() {
            mean[i] += h;
            quantiles[i].push(h);
        }
    }
    for m in &mut mean {
        *m /= trials_used as f64;
    }
    let q = |level: f64| -> Vec<f64> {
        quantiles
            .iter()
            .map(|values| {
                let mut sorted = values.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                quantile_sorted(&sorted, level)
            })
            .collect()
    };
    let (q05, q25, q50, q75, q95) = (q(0.05), q(0.25), q(0.50), q(0.75), q(0.95));
    Ok(TimeseriesResult { times, mean, q05, q25, q50, q75, q95, trials_used, failures })
}

/// Linear-interpolation quantile of an already sorted sample.
fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn write_sweep_csv(result: &SweepResult, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "alpha,mu,trials_used,failures,flagged,p_hat_mean,p_hat_ci,m_hat_mean,m_hat_ci,\
         sigma_hat_mean,sigma_hat_ci,p_star,m_star,sigma_star,delta_star"
    )?;
    for r in &result.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.alpha,
            r.mu,
            r.trials_used,
            r.failures,
            r.flagged,
            r.p_hat_mean,
            r.p_hat_ci,
            r.m_hat_mean,
            r.m_hat_ci,
            r.sigma_hat_mean,
            r.sigma_hat_ci,
            r.p_star,
            r.m_star,
            r.sigma_star,
            r.delta_star
        )?;
    }
    Ok(())
}

pub fn write_histogram_csv(result: &HistogramResult, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "bin_lo,bin_hi,count,empirical_density,theory_density")?;
    for i in 0..result.counts.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            result.bin_edges[i],
            result.bin_edges[i + 1],
            result.counts[i],
            result.empirical_density[i],
            result.theory_density[i]
        )?;
    }
    Ok(())
}

pub fn write_timeseries_csv(result: &TimeseriesResult, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "time,hill1_mean,hill1_q05,hill1_q25,hill1_q50,hill1_q75,hill1_q95")?;
    for i in 0..result.times.len() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            result.times[i],
            result.mean[i],
            result.q05[i],
            result.q25[i],
            result.q50[i],
            result.q75[i],
            result.q95[i]
        )?;
    }
    Ok(())
}

/// Config echo, version, seed derivation rule and failure counts; written
/// next to the tables. Deliberately timestamp-free so reruns are
/// byte-identical.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignManifest {
    pub config: CampaignConfig,
    pub version: String,
    pub seed_rule: String,
    pub tables: Vec<String>,
    pub trials_used: usize,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks_statistic: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub files: Vec<PathBuf>,
    pub manifest: CampaignManifest,
}

/// Runs the configured scenario and writes one CSV per result table plus
/// `manifest.json` into `out_dir`.
pub fn run_campaign(cfg: &CampaignConfig, out_dir: &Path) -> Result<CampaignOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut tables = Vec::new();
    let (trials_used, failures, ks_statistic) = match cfg.scenario {
        Scenario::EquilibriumSweep => {
            let result = run_equilibrium_sweep(cfg)?;
            let path = out_dir.join("sweep.csv");
            let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write_sweep_csv(&result, &mut out)?;
            files.push(path);
            tables.push("sweep.csv".to_string());
            let used = result.records.iter().map(|r| r.trials_used).min().unwrap_or(0);
            let failures = result.records.iter().map(|r| r.failures).sum();
            (used, failures, None)
        }
        Scenario::Histogram => {
            let result = run_survivor_histogram(cfg)?;
            let path = out_dir.join("histogram.csv");
            let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write_histogram_csv(&result, &mut out)?;
            files.push(path);
            tables.push("histogram.csv".to_string());
            (result.trials_used, result.failures, Some(result.ks_statistic))
        }
        Scenario::DiversityTimeseries => {
            let result = run_diversity_timeseries(cfg)?;
            let path = out_dir.join("timeseries.csv");
            let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write_timeseries_csv(&result, &mut out)?;
            files.push(path);
            tables.push("timeseries.csv".to_string());
            (result.trials_used, result.failures, None)
        }
    };
    let manifest = CampaignManifest {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed_rule: "trial t samples from stream base_seed ^ t".to_string(),
        tables,
        trials_used,
        failures,
        ks_statistic,
    };
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    files.push(path);
    Ok(CampaignOutcome { files, manifest })
}
