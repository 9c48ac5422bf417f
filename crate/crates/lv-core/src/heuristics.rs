//! The fixed-point system predicting the surviving-species statistics.
//!
//! For admissible `(alpha, mu)` the triple `(p, m, sigma)` of survivor
//! proportion, mean abundance and root second moment is characterized by
//! three equations. Writing `u = 1 + mu p m`, `delta = alpha u / (sigma
//! sqrt(p))` and `E_1 = E[Z | Z > -delta]`, `E_2 = E[Z^2 | Z > -delta]` for
//! a standard Gaussian `Z`:
//!
//! ```text
//! sigma sqrt(p) Phi^{-1}(1 - p) + alpha u                     = 0
//! u + (sigma sqrt(p)/alpha) E_1                               = m
//! u^2 + 2 u (sigma sqrt(p)/alpha) E_1 + (sigma^2 p/alpha^2) E_2 = sigma^2
//! ```
//!
//! The first equation is the order-statistics location of the survival
//! threshold (equivalently `p = Phi(delta)`), the other two are the first
//! and second conditional moments of the abundance representation
//! `x = u + (sigma sqrt(p)/alpha) Z` given `Z > -delta`. A surviving
//! abundance is therefore asymptotically a truncated Gaussian, whose density
//! and distribution function are exposed here as well.
//!
//! The solver evaluates the first equation in the restated form
//! `p - Phi(delta) = 0`. The two forms have identical roots, but the raw one
//! degenerates in floating point once `delta` exceeds about 8: its root
//! requires `1 - p = Phi(-delta)`, which underflows, while `p - Phi(delta)`
//! stays well-conditioned all the way into the weak-interaction limit where
//! `p* -> 1`.
//!
//! The solver is a damped Newton iteration with a forward-difference
//! Jacobian and backtracking on the residual norm, started at the feasible
//! limit `(0.99, 1, 1)` with a second basin fallback, and projected to keep
//! `p` in `(0, 1)` and `sigma` positive.

use crate::ensemble::is_admissible;
use crate::linalg::{solve, Mat};
use crate::normal;
pub use crate::normal::{truncated_moments, TruncatedMoments};
use crate::{LvError, Result};
use serde::{Deserialize, Serialize};

/// Standard normal quantile; see [`normal::quantile`].
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    normal::quantile(p)
}

/// Solution of the three-equation fixed point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeuristicSolution {
    pub p_star: f64,
    pub m_star: f64,
    pub sigma_star: f64,
    /// Standardized survival threshold
    /// `alpha (1 + mu p* m*) / (sigma* sqrt(p*))`.
    pub delta_star: f64,
    pub alpha: f64,
    pub mu: f64,
    /// Maximum absolute residual of the three equations at the solution.
    pub residual_norm: f64,
    pub iterations: usize,
}

const RESIDUAL_TARGET: f64 = 1e-12;
const RESIDUAL_ACCEPT: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200;
const FD_STEP: f64 = 1e-7;
const P_FLOOR: f64 = 1e-6;
const P_CEIL: f64 = 1.0 - 1e-12;
const SIGMA_FLOOR: f64 = 1e-6;

fn scaled(alpha: f64, mu: f64, p: f64, m: f64, sigma: f64) -> (f64, f64) {
    let u = 1.0 + mu * p * m;
    let delta = alpha * u / (sigma * p.sqrt());
    (u, delta)
}

fn residuals(alpha: f64, mu: f64, x: &[f64]) -> Result<Vec<f64>> {
    let (p, m, sigma) = (x[0], x[1], x[2]);
    let (u, delta) = scaled(alpha, mu, p, m, sigma);
    let tm = truncated_moments(delta)?;
    let spread = sigma * p.sqrt() / alpha;
    let r1 = p - tm.tail_prob;
    let r2 = u + spread * tm.mean - m;
    let r3 = u * u + 2.0 * u * spread * tm.mean + spread * spread * tm.second - sigma * sigma;
    Ok(vec![r1, r2, r3])
}

fn project_full(x: &mut [f64]) {
    x[0] = x[0].clamp(P_FLOOR, P_CEIL);
    x[2] = x[2].max(SIGMA_FLOOR);
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, &r| acc.max(r.abs()))
}

/// Damped Newton with forward-difference Jacobian. `project` keeps iterates
/// inside the domain of `f`.
fn damped_newton(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    project: &dyn Fn(&mut [f64]),
    max_iterations: usize,
) -> Result<(Vec<f64>, usize)> {
    let dim = x0.len();
    let mut x = x0.to_vec();
    project(&mut x);
    let mut fx = f(&x)?;
    for iteration in 0..max_iterations {
        let norm = inf_norm(&fx);
        if norm <= RESIDUAL_TARGET {
            return Ok((x, iteration));
        }
        // Forward differences, flipping direction at the domain edge.
        let mut jac = Mat::zeros(dim, dim);
        for j in 0..dim {
            let mut xh = x.clone();
            let mut h = FD_STEP;
            xh[j] += h;
            let mut probe = xh.clone();
            project(&mut probe);
            if probe[j] != xh[j] {
                h = -FD_STEP;
                xh[j] = x[j] + h;
            }
            let fh = f(&xh)?;
            for i in 0..dim {
                jac[(i, j)] = (fh[i] - fx[i]) / h;
            }
        }
        let neg_fx: Vec<f64> = fx.iter().map(|r| -r).collect();
        let step = solve(&jac, &neg_fx).map_err(|_| {
            LvError::Numerical(format!(
                "singular Jacobian in fixed-point solve (iteration {iteration}, residual {norm:.3e})"
            ))
        })?;
        // Backtracking line search on the residual norm.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial: Vec<f64> =
                x.iter().zip(&step).map(|(xi, si)| xi + lambda * si).collect();
            project(&mut trial);
            if let Ok(ft) = f(&trial) {
                if inf_norm(&ft) < (1.0 - 1e-4 * lambda) * norm {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if norm <= RESIDUAL_ACCEPT {
                return Ok((x, iteration));
            }
            return Err(LvError::Numerical(format!(
                "fixed-point solve stalled at residual {norm:.3e} (iteration {iteration})"
            )));
        }
    }
    let norm = inf_norm(&fx);
    if norm <= RESIDUAL_ACCEPT {
        return Ok((x, max_iterations));
    }
    Err(LvError::Numerical(format!(
        "fixed-point solve did not converge in {max_iterations} iterations \
         (last residual {norm:.3e})"
    )))
}

/// Solves the three-equation system for `(p*, m*, sigma*)`.
///
/// Requires admissible `(alpha, mu)`. The default start is the feasible
/// limit `(0.99, 1, 1)`; on failure a second start `(0.7, 1.2, 1.2)` is
/// tried.
pub fn solve_heuristic_system(
    alpha: f64,
    mu: f64,
    init: Option<(f64, f64, f64)>,
) -> Result<HeuristicSolution> {
    if !is_admissible(alpha, mu) {
        return Err(LvError::InvalidInput(format!(
            "(alpha, mu) = ({alpha}, {mu}) is outside the admissible region \
             {{alpha > sqrt(2), mu < 1/2 + (1/2) sqrt(1 - 2/alpha^2)}}"
        )));
    }
    let f = move |x: &[f64]| residuals(alpha, mu, x);
    let mut starts: Vec<[f64; 3]> = Vec::new();
    if let Some((p, m, s)) = init {
        starts.push([p, m, s]);
    }
    starts.push([0.99, 1.0, 1.0]);
    starts.push([0.7, 1.2, 1.2]);

    let mut last_err = None;
    for start in &starts {
        match damped_newton(&f, start, &project_full, MAX_ITERATIONS) {
            Ok((x, iterations)) => {
                let fx = residuals(alpha, mu, &x)?;
                let residual_norm = inf_norm(&fx);
                if residual_norm > RESIDUAL_ACCEPT {
                    last_err = Some(LvError::Numerical(format!(
                        "fixed-point residual {residual_norm:.3e} above 1e-10"
                    )));
                    continue;
                }
                let (p, m, sigma) = (x[0], x[1], x[2]);
                let (_, delta) = scaled(alpha, mu, p, m, sigma);
                return Ok(HeuristicSolution {
                    p_star: p,
                    m_star: m,
                    sigma_star: sigma,
                    delta_star: delta,
                    alpha,
                    mu,
                    residual_norm,
                    iterations,
                });
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one start attempted"))
}

/// Centered (`mu = 0`) reduction: two equations in `(p, sigma)` with
/// `delta = alpha/(sigma sqrt(p))`. Returns `(p*, sigma*)`.
pub fn solve_centered_system(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > std::f64::consts::SQRT_2) {
        return Err(LvError::InvalidInput(format!(
            "centered system needs alpha > sqrt(2), got {alpha}"
        )));
    }
    let f = move |x: &[f64]| -> Result<Vec<f64>> {
        let (p, sigma) = (x[0], x[1]);
        let delta = alpha / (sigma * p.sqrt());
        let tm = truncated_moments(delta)?;
        let spread = sigma * p.sqrt() / alpha;
        let r1 = p - tm.tail_prob;
        let r2 = 1.0 + 2.0 * spread * tm.mean + spread * spread * tm.second - sigma * sigma;
        Ok(vec![r1, r2])
    };
    let project = |x: &mut [f64]| {
        x[0] = x[0].clamp(P_FLOOR, P_CEIL);
        x[1] = x[1].max(SIGMA_FLOOR);
    };
    for start in [[0.99, 1.0], [0.7, 1.2]] {
        if let Ok((x, _)) = damped_newton(&f, &start, &project, MAX_ITERATIONS) {
            let fx = f(&x)?;
            if inf_norm(&fx) <= RESIDUAL_ACCEPT {
                return Ok((x[0], x[1]));
            }
        }
    }
    Err(LvError::Numerical(format!(
        "centered fixed-point solve failed at alpha = {alpha}"
    )))
}

/// Density of a surviving abundance: the law of
/// `1 + mu p* m* + (sigma* sqrt(p*)/alpha) Z` conditioned on `Z > -delta*`,
/// i.e. `f(y) = (c / Phi(delta*)) phi(c y - delta*)` on `y > 0` with
/// `c = alpha/(sigma* sqrt(p*))`.
pub fn survivor_density(y: f64, sol: &HeuristicSolution) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let c = sol.alpha / (sol.sigma_star * sol.p_star.sqrt());
    c * normal::pdf(c * y - sol.delta_star) / normal::cdf(sol.delta_star)
}

/// Distribution function matching [`survivor_density`].
pub fn survivor_cdf(y: f64, sol: &HeuristicSolution) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let c = sol.alpha / (sol.sigma_star * sol.p_star.sqrt());
    let tail = normal::cdf(sol.delta_star);
    let val = (normal::cdf(c * y - sol.delta_star) - (1.0 - tail)) / tail;
    val.clamp(0.0, 1.0)
}

/// Second-order approximation of the Hill number of order 1 at equilibrium:
/// `n p* (3/2 - sigma*^2 / (2 m*^2))`.
pub fn hill_approximation(n: usize, sol: &HeuristicSolution) -> f64 {
    let ratio = sol.sigma_star * sol.sigma_star / (sol.m_star * sol.m_star);
    n as f64 * sol.p_star * (1.5 - 0.5 * ratio)
}
