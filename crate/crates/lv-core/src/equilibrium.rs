//! From an interaction matrix to the unique non-invadable equilibrium.
//!
//! The equilibrium conditions
//! `x_k (1 - x_k + (Bx)_k) = 0`, `1 - x_k + (Bx)_k <= 0`, `x >= 0`
//! are exactly `x in LCP(I - B, -1)`.

use crate::ensemble::{is_admissible, EntryDist, InteractionMatrix};
use crate::lcp::{default_max_pivots, lemke_solve, LcpProblem, LcpStatus};
use crate::linalg::Mat;
use crate::{LvError, Result};
use serde::{Deserialize, Serialize};

/// Abundances below this threshold count as extinct.
pub const SURVIVAL_THRESHOLD: f64 = 1e-8;

/// Equilibrium abundances together with the parameters of the matrix that
/// produced them.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub x_star: Vec<f64>,
    pub n: usize,
    pub alpha: f64,
    pub mu: f64,
    pub dist: EntryDist,
    pub seed: u64,
    /// False when `(alpha, mu)` lies outside the region where uniqueness and
    /// global stability are guaranteed; the solve still proceeds.
    pub admissible: bool,
    pub solver_status: LcpStatus,
    pub pivots: usize,
}

/// Empirical survivor statistics of an equilibrium: proportion, mean and
/// root second moment over the surviving set only. Note `sigma_hat` squares
/// to the second moment, not the variance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurvivorStats {
    pub p_hat: f64,
    pub m_hat: f64,
    pub sigma_hat: f64,
    pub survivors: Vec<usize>,
}

/// Solves `LCP(I - B, -1)` for the equilibrium of the Lotka-Volterra system
/// with interaction matrix `B`. Non-admissible parameters are allowed and
/// only flagged.
pub fn compute_equilibrium(b: &InteractionMatrix) -> Result<Equilibrium> {
    let n = b.n;
    let entries = b.entries();
    let m = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - entries[(i, j)]
    });
    let prob = LcpProblem::new(m, vec![-1.0; n]).expect("square by construction");
    let sol = lemke_solve(&prob, default_max_pivots(n));
    if sol.status != LcpStatus::Solved {
        return Err(LvError::Unsolved { status: sol.status, pivots: sol.pivots });
    }
    Ok(Equilibrium {
        x_star: sol.z,
        n,
        alpha: b.alpha,
        mu: b.mu,
        dist: b.dist,
        seed: b.seed,
        admissible: is_admissible(b.alpha, b.mu),
        solver_status: sol.status,
        pivots: sol.pivots,
    })
}

/// Survivor statistics over the set `S = { i : x*_i > SURVIVAL_THRESHOLD }`.
pub fn survivor_stats(eq: &Equilibrium) -> Result<SurvivorStats> {
    let survivors: Vec<usize> =
        (0..eq.n).filter(|&i| eq.x_star[i] > SURVIVAL_THRESHOLD).collect();
    if survivors.is_empty() {
        return Err(LvError::InvalidInput(
            "empty survivor set: no abundance above the survival threshold".into(),
        ));
    }
    let count = survivors.len() as f64;
    let sum: f64 = survivors.iter().map(|&i| eq.x_star[i]).sum();
    let sum_sq: f64 = survivors.iter().map(|&i| eq.x_star[i] * eq.x_star[i]).sum();
    Ok(SurvivorStats {
        p_hat: count / eq.n as f64,
        m_hat: sum / count,
        sigma_hat: (sum_sq / count).sqrt(),
        survivors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::sample_interaction_matrix;

    fn synthetic(x: Vec<f64>) -> Equilibrium {
        Equilibrium {
            n: x.len(),
            x_star: x,
            alpha: 2.0,
            mu: 0.0,
            dist: EntryDist::Zero,
            seed: 0,
            admissible: true,
            solver_status: LcpStatus::Solved,
            pivots: 0,
        }
    }

    #[test]
    fn zero_interactions_give_the_logistic_fixed_point() {
        let b = sample_interaction_matrix(7, 2.0, 0.0, EntryDist::Zero, 0).unwrap();
        let eq = compute_equilibrium(&b).unwrap();
        for &x in &eq.x_star {
            assert!((x - 1.0).abs() < 1e-12);
        }
        let stats = survivor_stats(&eq).unwrap();
        assert_eq!(stats.p_hat, 1.0);
        assert!((stats.m_hat - 1.0).abs() < 1e-12);
        assert!((stats.sigma_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_drift_two_species() {
        // A = 0, mu = 0.5 at n = 2 makes B = 0.25 * ones; x = 1 + Bx gives
        // x = (2, 2).
        let b = sample_interaction_matrix(2, 1.0, 0.5, EntryDist::Zero, 0).unwrap();
        let eq = compute_equilibrium(&b).unwrap();
        assert!((eq.x_star[0] - 2.0).abs() < 1e-10);
        assert!((eq.x_star[1] - 2.0).abs() < 1e-10);
        assert!(!eq.admissible, "alpha = 1 is outside the admissible region");
    }

    #[test]
    fn equilibrium_conditions_hold_on_a_random_instance() {
        let b = sample_interaction_matrix(60, 2.0, 0.1, EntryDist::StandardGaussian, 5).unwrap();
        let eq = compute_equilibrium(&b).unwrap();
        let bx = b.entries().mat_vec(&eq.x_star);
        for k in 0..60 {
            let growth = 1.0 - eq.x_star[k] + bx[k];
            assert!(eq.x_star[k] * growth <= 1e-8, "complementarity fails at {k}");
            assert!(growth <= 1e-8, "non-invadability fails at {k}");
            assert!(eq.x_star[k] >= 0.0);
        }
    }

    #[test]
    fn survivor_stats_examples() {
        let all_one = survivor_stats(&synthetic(vec![1.0; 4])).unwrap();
        assert_eq!(all_one.p_hat, 1.0);
        assert_eq!(all_one.m_hat, 1.0);
        assert_eq!(all_one.sigma_hat, 1.0);

        let half = survivor_stats(&synthetic(vec![0.0, 2.0])).unwrap();
        assert_eq!(half.p_hat, 0.5);
        assert_eq!(half.m_hat, 2.0);
        assert_eq!(half.sigma_hat, 2.0);
        assert_eq!(half.survivors, vec![1]);

        let mixed = survivor_stats(&synthetic(vec![0.0, 1.0, 3.0])).unwrap();
        assert!((mixed.p_hat - 2.0 / 3.0).abs() < 1e-15);
        assert!((mixed.m_hat - 2.0).abs() < 1e-15);
        assert!((mixed.sigma_hat - 5.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_survivor_set_is_an_error() {
        assert!(survivor_stats(&synthetic(vec![0.0, 0.0])).is_err());
    }
}
