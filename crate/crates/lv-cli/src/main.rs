//! `lv` — equilibria, survivor statistics and diversity dynamics of large
//! random Lotka-Volterra systems.
//!
//! Exit codes: 0 on success, 1 on configuration/domain errors, 2 on
//! numerical failures (solver non-convergence, ray termination, integration
//! breakdown).

// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Parser, Subcommand};
use lv_core::dynamics::{integrate_lv_with_stride, InteractionSchedule, DEFAULT_RECORD_STRIDE};
use lv_core::experiments::{run_campaign, CampaignConfig};
use lv_core::heuristics::{solve_heuristic_system, HeuristicSolution};
use lv_core::lcp::{default_max_pivots, lemke_solve, LcpProblem, LcpStatus};
use lv_core::{
    compute_equilibrium, diversity_report, sample_interaction_matrix, survivor_stats,
    symmetrized_top_eigenvalue, EntryDist, LvError, Mat,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "lv",
    version,
    about = "Random Lotka-Volterra systems: spectra, equilibria, survivor statistics, \
             dynamics and Monte-Carlo campaigns",
    after_help = "All randomness derives from --seed; a run is fully reproducible from \
                  its command line. Data goes to stdout (or --output), logs to stderr."
)]
struct Cli {
    /// Root seed for every random draw of this invocation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for multi-trial commands (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Write the primary output to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format where a choice exists (heuristic: csv|json,
    /// diversity: json|csv); other subcommands have a fixed format.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Log progress to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Top eigenvalue of B + B^T against its large-n prediction (JSON).
    Spectrum {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value = "standard-gaussian", value_parser = EntryDist::from_str)]
        dist: EntryDist,
        /// Also dump every eigenvalue of B + B^T to this CSV path (one per
        /// line) for spectrum histograms.
        #[arg(long)]
        eigenvalues: Option<PathBuf>,
    },
    /// Solve LCP(M, q) read from a CSV file: n matrix rows, then the q row
    /// (JSON out; exit 2 if the solver stops without a solution).
    Lcp {
        /// Input CSV; use '-' for stdin.
        #[arg(long)]
        input: String,
        /// Pivot budget (default 50 n).
        #[arg(long)]
        max_pivots: Option<usize>,
    },
    /// Equilibrium abundances and survivor statistics of one sampled system
    /// (JSON). Non-admissible parameters run with admissible=false.
    Equilibrium {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value = "standard-gaussian", value_parser = EntryDist::from_str)]
        dist: EntryDist,
    },
    /// Solve the survivor fixed point for (p*, m*, sigma*, delta*) on a
    /// point or grid (CSV rows; --format json for structured output).
    Heuristic {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        /// Inclusive grid start:step:end overriding --alpha.
        #[arg(long)]
        alpha_grid: Option<String>,
        /// Inclusive grid start:step:end overriding --mu.
        #[arg(long)]
        mu_grid: Option<String>,
    },
    /// Integrate the abundance dynamics, optionally with a step in the
    /// interaction strength at t0 (CSV: time, x_1..x_n).
    Dynamics {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha1: f64,
        /// Post-step interaction strength (requires --t0).
        #[arg(long)]
        alpha2: Option<f64>,
        /// Step time (requires --alpha2).
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long, default_value = "standard-gaussian", value_parser = EntryDist::from_str)]
        dist: EntryDist,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = lv_core::dynamics::DEFAULT_DT)]
        dt: f64,
        /// Record every k-th step.
        #[arg(long, default_value_t = DEFAULT_RECORD_STRIDE)]
        record_stride: usize,
        /// Uniform initial abundance.
        #[arg(long, default_value_t = 1.0)]
        x0: f64,
    },
    /// Shannon index and Hill number of an abundance vector read as one CSV
    /// row (JSON).
    Diversity {
        /// Input CSV; use '-' for stdin.
        #[arg(long)]
        input: String,
    },
    /// Run a Monte-Carlo campaign from a key-value config file, writing CSV
    /// tables and a manifest into a directory.
    Campaign {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Keys follow the documented external schema.
#[derive(Serialize, Deserialize)]
struct SpectrumOutput {
    n: usize,
    alpha: f64,
    mu: f64,
    seed: u64,
    lambda_max_sym: f64,
    predicted: f64,
    outlier_regime: bool,
}

#[derive(Serialize, Deserialize)]
struct EquilibriumOutput {
    x_star: Vec<f64>,
    p_hat: f64,
    m_hat: f64,
    sigma_hat: f64,
    survivors: Vec<usize>,
    admissible: bool,
}

#[derive(Serialize, Deserialize)]
struct DiversityOutput {
    shannon: f64,
    hill1: f64,
    survivor_count: usize,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if cli.threads > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()
        {
            eprintln!("error: could not size the thread pool: {e}");
            std::process::exit(1);
        }
    }
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(if e.is_numerical() { 2 } else { 1 });
        }
    }
}

fn run(cli: &Cli) -> Result<i32, LvError> {
    let format = cli.format.as_deref();
    match &cli.command {
        Command::Spectrum { n, alpha, mu, dist, eigenvalues } => {
            fixed_format(format, "json", "spectrum")?;
            let b = sample_interaction_matrix(*n, *alpha, *mu, *dist, cli.seed)?;
            let report = symmetrized_top_eigenvalue(&b)?;
            if let Some(path) = eigenvalues {
                let all = lv_core::ensemble::symmetrized_eigenvalues(&b)?;
                let mut text = String::from("eigenvalue\n");
                for v in all {
                    text.push_str(&format!("{v}\n"));
                }
                std::fs::write(path, text)?;
                log(cli, &format!("wrote eigenvalue dump to {}", path.display()));
            }
            let out = SpectrumOutput {
                n: *n,
                alpha: *alpha,
                mu: *mu,
                seed: cli.seed,
                lambda_max_sym: report.lambda_max_sym,
                predicted: report.predicted_lambda_max,
                outlier_regime: report.outlier_regime,
            };
            emit(cli, &to_json(&out)?)?;
            Ok(0)
        }
        Command::Lcp { input, max_pivots } => {
            fixed_format(format, "json", "lcp")?;
            let (m, q) = read_lcp_csv(&read_input(input)?)?;
            let n = q.len();
            let prob = LcpProblem::new(m, q)?;
            let sol = lemke_solve(&prob, max_pivots.unwrap_or_else(|| default_max_pivots(n)));
            let solved = sol.status == LcpStatus::Solved;
            emit(cli, &to_json(&sol)?)?;
            if solved {
                Ok(0)
            } else {
                log(cli, "solver stopped without a solution");
                Ok(2)
            }
        }
        Command::Equilibrium { n, alpha, mu, dist } => {
            fixed_format(format, "json", "equilibrium")?;
            let b = sample_interaction_matrix(*n, *alpha, *mu, *dist, cli.seed)?;
            let eq = compute_equilibrium(&b)?;
            if !eq.admissible {
                eprintln!(
                    "warning: (alpha, mu) = ({alpha}, {mu}) is outside the region with a \
                     guaranteed unique stable equilibrium"
                );
            }
            let stats = survivor_stats(&eq)?;
            let out = EquilibriumOutput {
                x_star: eq.x_star.clone(),
                p_hat: stats.p_hat,
                m_hat: stats.m_hat,
                sigma_hat: stats.sigma_hat,
                survivors: stats.survivors,
                admissible: eq.admissible,
            };
            emit(cli, &to_json(&out)?)?;
            Ok(0)
        }
        Command::Heuristic { alpha, mu, alpha_grid, mu_grid } => {
            let alphas = match alpha_grid {
                Some(spec) => parse_grid(spec)?,
                None => vec![alpha.ok_or_else(|| {
                    LvError::InvalidInput("either --alpha or --alpha-grid is required".into())
                })?],
            };
            let mus = match mu_grid {
                Some(spec) => parse_grid(spec)?,
                None => vec![*mu],
            };
            let mut solutions = Vec::new();
            for &a in &alphas {
                for &m in &mus {
                    solutions.push(solve_heuristic_system(a, m, None)?);
                }
            }
            let text = match format.unwrap_or("csv") {
                "csv" => heuristic_csv(&solutions),
                "json" => to_json(&solutions)?,
                other => {
                    return Err(LvError::InvalidInput(format!(
                        "heuristic emits csv or json, not '{other}'"
                    )))
                }
            };
            emit(cli, &text)?;
            Ok(0)
        }
        Command::Dynamics {
            n,
            alpha1,
            alpha2,
            t0,
            mu,
            dist,
            t_end,
            dt,
            record_stride,
            x0,
        } => {
            fixed_format(format, "csv", "dynamics")?;
            let schedule = match (alpha2, t0) {
                (Some(a2), Some(t0)) => {
                    InteractionSchedule::step(*n, *dist, cli.seed, *mu, *alpha1, *a2, *t0)?
                }
                (None, None) => {
                    InteractionSchedule::constant(*n, *dist, cli.seed, *mu, *alpha1)?
                }
                _ => {
                    return Err(LvError::InvalidInput(
                        "--alpha2 and --t0 must be given together".into(),
                    ))
                }
            };
            if !(*x0 > 0.0) {
                return Err(LvError::InvalidInput(format!(
                    "--x0 must be positive, got {x0}"
                )));
            }
            let traj =
                integrate_lv_with_stride(&schedule, &vec![*x0; *n], *t_end, *dt, *record_stride)?;
            let mut text = String::from("time");
            for k in 1..=*n {
                text.push_str(&format!(",x_{k}"));
            }
            text.push('\n');
            for (t, state) in traj.times.iter().zip(&traj.states) {
                text.push_str(&format!("{t}"));
                for v in state {
                    text.push_str(&format!(",{v}"));
                }
                text.push('\n');
            }
            emit(cli, &text)?;
            Ok(0)
        }
        Command::Diversity { input } => {
            let abundances = read_csv_row(&read_input(input)?)?;
            let report = diversity_report(&abundances)?;
            let out = DiversityOutput {
                shannon: report.shannon,
                hill1: report.hill1,
                survivor_count: report.survivor_count,
            };
            let text = match format.unwrap_or("json") {
                "json" => to_json(&out)?,
                "csv" => format!(
                    "shannon,hill1,survivor_count\n{},{},{}\n",
                    out.shannon, out.hill1, out.survivor_count
                ),
                other => {
                    return Err(LvError::InvalidInput(format!(
                        "diversity emits json or csv, not '{other}'"
                    )))
                }
            };
            emit(cli, &text)?;
            Ok(0)
        }
        Command::Campaign { config, out_dir } => {
            fixed_format(format, "csv", "campaign")?;
            let text = std::fs::read_to_string(config)?;
            let cfg = CampaignConfig::from_key_values(&text, cli.seed)?;
            let outcome = run_campaign(&cfg, out_dir)?;
            for file in &outcome.files {
                log(cli, &format!("wrote {}", file.display()));
            }
            println!("{}", out_dir.display());
            Ok(0)
        }
    }
}

fn log(cli: &Cli, message: &str) {
    if cli.verbose {
        eprintln!("{message}");
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, LvError> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Rejects --format on subcommands with a single documented format.
fn fixed_format(format: Option<&str>, fixed: &str, name: &str) -> Result<(), LvError> {
    match format {
        None => Ok(()),
        Some(f) if f == fixed => Ok(()),
        Some(other) => Err(LvError::InvalidInput(format!(
            "{name} always emits {fixed}, not '{other}'"
        ))),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), LvError> {
    match &cli.output {
        Some(path) => {
            std::fs::write(path, text)?;
            log(cli, &format!("wrote {}", path.display()));
        }
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
        }
    }
    Ok(())
}

fn read_input(spec: &str) -> Result<String, LvError> {
    if spec == "-" {
        use std::io::Read;
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        Ok(std::fs::read_to_string(spec)?)
    }
}

fn parse_f64(token: &str) -> Result<f64, LvError> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| LvError::InvalidInput(format!("not a number: '{}'", token.trim())))
}

fn read_csv_row(text: &str) -> Result<Vec<f64>, LvError> {
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or_else(|| LvError::InvalidInput("input contains no data row".into()))?;
    line.split(',').map(parse_f64).collect()
}

/// Matrix rows followed by the q row; all rows must have the matrix width.
fn read_lcp_csv(text: &str) -> Result<(Mat, Vec<f64>), LvError> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(parse_f64).collect::<Result<Vec<f64>, _>>())
        .collect::<Result<_, _>>()?;
    if rows.len() < 2 {
        return Err(LvError::InvalidInput(
            "LCP input needs at least one matrix row and the q row".into(),
        ));
    }
    let (q, m_rows) = rows.split_last().expect("len >= 2");
    if m_rows.len() != q.len() || m_rows.iter().any(|r| r.len() != q.len()) {
        return Err(LvError::InvalidInput(format!(
            "LCP input must be an n x n matrix followed by a length-n q row; \
             got {} matrix rows and a q of length {}",
            m_rows.len(),
            q.len()
        )));
    }
    Ok((Mat::from_rows(m_rows)?, q.clone()))
}

/// Inclusive numeric grid "start:step:end".
fn parse_grid(spec: &str) -> Result<Vec<f64>, LvError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(LvError::InvalidInput(format!(
            "grid must be start:step:end, got '{spec}'"
        )));
    }
    let (start, step, end) = (parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?);
    if !(step > 0.0) || end < start {
        return Err(LvError::InvalidInput(format!("grid '{spec}' is empty or decreasing")));
    }
    let mut values = Vec::new();
    let mut k = 0;
    loop {
        let v = start + k as f64 * step;
        if v > end + 1e-9 * step {
            break;
        }
        values.push(v);
        k += 1;
    }
    Ok(values)
}

fn heuristic_csv(solutions: &[HeuristicSolution]) -> String {
    let mut text = String::from("alpha,mu,p_star,m_star,sigma_star,delta_star,residual\n");
    for s in solutions {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.alpha, s.mu, s.p_star, s.m_star, s.sigma_star, s.delta_star, s.residual_norm
        ));
    }
    text
}
