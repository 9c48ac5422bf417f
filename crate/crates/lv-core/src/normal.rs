//! Standard normal primitives: density, distribution function, quantile and
//! one-sided truncated moments. These back the heuristic fixed-point system
//! and the survivor-abundance density.

use crate::{LvError, Result};
use serde::{Deserialize, Serialize};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, computed through `erfc` so both
/// tails keep full relative accuracy.
#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

// Coefficients of Acklam's rational approximation to the normal quantile.
const QA: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.38357751867269e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const QB: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const QC: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const QD: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const QUANTILE_TAIL_SPLIT: f64 = 0.02425;

/// Standard normal quantile `Phi^{-1}(p)`.
///
/// Rational approximation refined by one Newton step against [`cdf`];
/// absolute error is well below 1e-9 over the whole open interval.
pub fn quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(LvError::InvalidInput(format!(
            "normal quantile needs p in (0, 1), got {p}"
        )));
    }
    let x = if p < QUANTILE_TAIL_SPLIT {
        let q = (-2.0 * p.ln()).sqrt();
        tail_rational(q)
    } else if p > 1.0 - QUANTILE_TAIL_SPLIT {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -tail_rational(q)
    } else {
        let q = p - 0.5;
        let r = q * q;
        q * (((((QA[0] * r + QA[1]) * r + QA[2]) * r + QA[3]) * r + QA[4]) * r + QA[5])
            / (((((QB[0] * r + QB[1]) * r + QB[2]) * r + QB[3]) * r + QB[4]) * r + 1.0)
    };
    // One Newton refinement against the CDF.
    let density = pdf(x);
    if density > 1e-300 {
        Ok(x - (cdf(x) - p) / density)
    } else {
        Ok(x)
    }
}

#[inline]
fn tail_rational(q: f64) -> f64 {
    (((((QC[0] * q + QC[1]) * q + QC[2]) * q + QC[3]) * q + QC[4]) * q + QC[5])
        / ((((QD[0] * q + QD[1]) * q + QD[2]) * q + QD[3]) * q + 1.0)
}

/// Conditional moments of `Z ~ N(0,1)` given `Z > -delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedMoments {
    pub delta: f64,
    /// `E[Z | Z > -delta]`
    pub mean: f64,
    /// `E[Z^2 | Z > -delta]`
    pub second: f64,
    /// `P(Z > -delta) = Phi(delta)`
    pub tail_prob: f64,
}

/// Closed forms: `mean = phi(delta)/Phi(delta)` and
/// `second = 1 - delta * phi(delta)/Phi(delta)`.
pub fn truncated_moments(delta: f64) -> Result<TruncatedMoments> {
    let tail_prob = cdf(delta);
    if !(tail_prob > 1e-300) {
        return Err(LvError::InvalidInput(format!(
            "truncation leaves no mass: Phi({delta}) underflows"
        )));
    }
    let mean = pdf(delta) / tail_prob;
    let second = 1.0 - delta * mean;
    Ok(TruncatedMoments { delta, mean, second, tail_prob })
}
