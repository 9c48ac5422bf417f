//! Equilibria and surviving species of large random Lotka-Volterra systems.
//!
//! The library is organized around one pipeline:
//!
//! 1. [`ensemble`] samples the random interaction matrix
//!    `B = A/(alpha sqrt(n)) + mu/n * 11^T` and predicts its spectral
//!    diagnostics (top eigenvalue of `B + B^T`, admissible parameter region).
//! 2. [`lcp`] solves the Linear Complementarity Problem `LCP(M, q)` by Lemke
//!    pivoting, with a brute-force enumerator and a P-matrix test as oracles
//!    for small instances.
//! 3. [`equilibrium`] maps an interaction matrix to the unique non-invadable
//!    equilibrium via `LCP(I - B, -1)` and extracts empirical survivor
//!    statistics `(p_hat, m_hat, sigma_hat)`.
//! 4. [`heuristics`] solves the three-equation fixed point predicting the
//!    limits `(p*, m*, sigma*)` of those statistics, and evaluates the
//!    truncated-Gaussian density of survivor abundances.
//! 5. [`dynamics`] integrates the Lotka-Volterra ODE with a fixed or
//!    step-changing interaction strength (fixed-step RK4).
//! 6. [`diversity`] computes Shannon diversity and the Hill number of
//!    order 1.
//! 7. [`experiments`] orchestrates seeded, reproducible Monte-Carlo
//!    campaigns comparing theory against empirics.

// `!(x > 0.0)` guards reject NaN along with the out-of-range values; the
// suggested `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index-based loops mirror the usual notation of the numerical kernels.
#![allow(clippy::needless_range_loop)]

pub mod diversity;
pub mod dynamics;
pub mod ensemble;
pub mod equilibrium;
pub mod experiments;
pub mod heuristics;
pub mod lcp;
pub mod linalg;
pub mod normal;

pub use diversity::{diversity_report, hill_number, shannon_index, DiversityReport};
pub use dynamics::{detect_convergence, integrate_lv, InteractionSchedule, Trajectory};
pub use ensemble::{
    is_admissible, predicted_top_eigenvalue, sample_interaction_matrix,
    symmetrized_top_eigenvalue, EntryDist, InteractionMatrix, SpectralReport,
};
pub use equilibrium::{compute_equilibrium, survivor_stats, Equilibrium, SurvivorStats};
pub use heuristics::{
    hill_approximation, solve_centered_system, solve_heuristic_system, survivor_cdf,
    survivor_density, HeuristicSolution,
};
pub use lcp::{
    brute_force_solve, is_p_matrix, lemke_solve, verify_solution, LcpProblem, LcpSolution,
    LcpStatus,
};
pub use linalg::Mat;

/// Errors produced by the library.
///
/// `InvalidInput` covers configuration and domain violations (exit code 1 in
/// the CLI); the remaining variants are numerical failures (exit code 2).
#[derive(Debug, thiserror::Error)]
pub enum LvError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("LCP solver stopped with status {status:?} after {pivots} pivots")]
    Unsolved { status: lcp::LcpStatus, pivots: usize },
    #[error(
        "integration produced a non-positive abundance in component {component} at t = {time}; \
         try a smaller dt"
    )]
    NonPositiveState { time: f64, component: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl LvError {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            LvError::Numerical(_) | LvError::Unsolved { .. } | LvError::NonPositiveState { .. }
        )
    }
}

impl From<serde_json::Error> for LvError {
    fn from(e: serde_json::Error) -> Self {
        LvError::InvalidInput(format!("JSON error: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, LvError>;
