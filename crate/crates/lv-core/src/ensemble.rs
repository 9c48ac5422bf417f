//! Sampling of the random interaction matrix
//! `B = A/(alpha sqrt(n)) + (mu/n) 11^T` and its spectral diagnostics.
//!
//! `A` has i.i.d. standardized entries (mean 0, variance 1); the diagonal is
//! sampled like the rest. The reproducibility contract is strict: the same
//! `(n, alpha, mu, dist, seed)` yields bit-identical entries, and Monte-Carlo
//! trial `t` uses the independent stream `seed ^ t`.

use crate::linalg::{symmetric_eigenvalues, Mat};
use crate::{LvError, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Entry distribution of the standardized matrix `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryDist {
    /// `N(0, 1)`.
    StandardGaussian,
    /// Uniform on `(-sqrt(3), sqrt(3))`, so the variance is 1.
    UniformSymSqrt3,
    /// Degenerate `A = 0`; test-only, leaves exactly the `mu/n` term.
    Zero,
}

impl EntryDist {
    pub fn tag(&self) -> &'static str {
        match self {
            EntryDist::StandardGaussian => "standard-gaussian",
            EntryDist::UniformSymSqrt3 => "uniform-sym-sqrt3",
            EntryDist::Zero => "zero",
        }
    }
}

impl std::fmt::Display for EntryDist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for EntryDist {
    type Err = LvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard-gaussian" | "gaussian" => Ok(EntryDist::StandardGaussian),
            "uniform-sym-sqrt3" | "uniform" => Ok(EntryDist::UniformSymSqrt3),
            "zero" => Ok(EntryDist::Zero),
            other => Err(LvError::InvalidInput(format!(
                "unknown entry distribution '{other}' \
                 (expected standard-gaussian, uniform-sym-sqrt3 or zero)"
            ))),
        }
    }
}

/// A realization of the interaction matrix together with its generating
/// parameters. Immutable after construction.
#[derive(Clone, Debug)]
pub struct InteractionMatrix {
    pub n: usize,
    pub alpha: f64,
    pub mu: f64,
    pub dist: EntryDist,
    pub seed: u64,
    entries: Mat,
}

impl InteractionMatrix {
    /// The realized `B`.
    pub fn entries(&self) -> &Mat {
        &self.entries
    }

    /// Exactly symmetrized matrix `B + B^T`.
    pub fn symmetrized(&self) -> Mat {
        let b = &self.entries;
        Mat::from_fn(self.n, self.n, |i, j| b[(i, j)] + b[(j, i)])
    }

    /// Scales a raw standardized realization of `A` into `B`. Used to share
    /// one `A` across several interaction strengths.
    pub fn from_raw(raw: &Mat, alpha: f64, mu: f64, dist: EntryDist, seed: u64) -> Result<Self> {
        check_params(raw.rows(), alpha)?;
        let n = raw.rows();
        let scale = 1.0 / (alpha * (n as f64).sqrt());
        let drift = mu / n as f64;
        let entries = Mat::from_fn(n, n, |i, j| raw[(i, j)] * scale + drift);
        Ok(InteractionMatrix { n, alpha, mu, dist, seed, entries })
    }
}

fn check_params(n: usize, alpha: f64) -> Result<()> {
    if n == 0 {
        return Err(LvError::InvalidInput("species count n must be at least 1".into()));
    }
    if !(alpha > 0.0) {
        return Err(LvError::InvalidInput(format!(
            "interaction strength alpha must be positive, got {alpha}"
        )));
    }
    Ok(())
}

/// Samples the standardized matrix `A` itself (no `1/(alpha sqrt(n))`
/// scaling, no drift).
pub fn sample_raw(n: usize, dist: EntryDist, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match dist {
        EntryDist::StandardGaussian => {
            Mat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
        }
        EntryDist::UniformSymSqrt3 => {
            Mat::from_fn(n, n, |_, _| rng.random::<f64>() * (2.0 * SQRT_3) - SQRT_3)
        }
        EntryDist::Zero => Mat::zeros(n, n),
    }
}

/// Samples `B = A/(alpha sqrt(n)) + (mu/n) 11^T`.
pub fn sample_interaction_matrix(
    n: usize,
    alpha: f64,
    mu: f64,
    dist: EntryDist,
    seed: u64,
) -> Result<InteractionMatrix> {
    check_params(n, alpha)?;
    InteractionMatrix::from_raw(&sample_raw(n, dist, seed), alpha, mu, dist, seed)
}

/// Spectral diagnostics of `B + B^T`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Top eigenvalue of the exactly symmetrized `B + B^T`.
    pub lambda_max_sym: f64,
    /// Large-`n` prediction from [`predicted_top_eigenvalue`].
    pub predicted_lambda_max: f64,
    /// True when `mu > 1/(sqrt(2) alpha)`, i.e. the top eigenvalue detaches
    /// from the semicircle bulk.
    pub outlier_regime: bool,
    /// Optional rough estimate of the spectral radius of the nonsymmetric
    /// `B` (diagnostic only).
    pub spectral_radius_estimate: Option<f64>,
}

/// Top eigenvalue of `B + B^T` with its theoretical prediction.
pub fn symmetrized_top_eigenvalue(b: &InteractionMatrix) -> Result<SpectralReport> {
    let eigenvalues = symmetric_eigenvalues(&b.symmetrized())?;
    let lambda_max_sym = *eigenvalues.last().expect("n >= 1");
    Ok(SpectralReport {
        lambda_max_sym,
        predicted_lambda_max: predicted_top_eigenvalue(b.alpha, b.mu),
        outlier_regime: is_outlier_regime(b.alpha, b.mu),
        spectral_radius_estimate: None,
    })
}

/// All eigenvalues of `B + B^T`, ascending (histogram dumps).
pub fn symmetrized_eigenvalues(b: &InteractionMatrix) -> Result<Vec<f64>> {
    symmetric_eigenvalues(&b.symmetrized())
}

fn is_outlier_regime(alpha: f64, mu: f64) -> bool {
    mu > 1.0 / (SQRT_2 * alpha)
}

/// Almost-sure limit of the top eigenvalue of `B + B^T`:
/// `2 mu + 1/(alpha^2 mu)` in the outlier regime `mu > 1/(sqrt(2) alpha)`,
/// else the semicircle edge `2 sqrt(2)/alpha`. Both branches agree at the
/// threshold.
pub fn predicted_top_eigenvalue(alpha: f64, mu: f64) -> f64 {
    debug_assert!(alpha > 0.0);
    if is_outlier_regime(alpha, mu) {
        2.0 * mu + 1.0 / (alpha * alpha * mu)
    } else {
        2.0 * SQRT_2 / alpha
    }
}

/// Admissible parameter region: `alpha > sqrt(2)` and
/// `mu < 1/2 + (1/2) sqrt(1 - 2/alpha^2)` (strict inequalities). Inside it,
/// `2I - (B + B^T)` is eventually positive definite and the equilibrium is
/// unique and globally stable.
pub fn is_admissible(alpha: f64, mu: f64) -> bool {
    alpha > SQRT_2 && mu < 0.5 + 0.5 * (1.0 - 2.0 / (alpha * alpha)).sqrt()
}

/// Rough spectral-radius estimate of the nonsymmetric `B` via the geometric
/// mean growth rate of repeated applications. Diagnostic only; the spectrum
/// of `B` itself is not load-bearing anywhere.
pub fn spectral_radius_estimate(b: &InteractionMatrix, iterations: usize) -> f64 {
    let n = b.n;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut w = vec![0.0; n];
    let mut log_growth = 0.0;
    let iterations = iterations.max(1);
    for _ in 0..iterations {
        b.entries.mat_vec_into(&v, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        log_growth += norm.ln();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    (log_growth / iterations as f64).exp()
}
