//! Linear Complementarity Problem solver.
//!
//! `LCP(M, q)`: find `z >= 0`, `w = Mz + q >= 0` with `w_k z_k = 0` for all
//! `k`. The workhorse is Lemke's complementary pivoting with the all-ones
//! covering vector and a lexicographic minimum-ratio test, so termination
//! does not rely on nondegeneracy. A brute-force enumerator over all `2^n`
//! supports and a principal-minor P-matrix test serve as oracles for small
//! instances.

use crate::linalg::{det, solve, Mat};
use crate::{LvError, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Entries smaller than this never qualify as pivots.
const PIVOT_EPS: f64 = 1e-10;
/// Output values below this magnitude are clamped to exactly 0 so support
/// sets are crisp.
const OUTPUT_CLAMP: f64 = 1e-12;
/// Sign tolerance for the brute-force enumeration.
const SIGN_TOL: f64 = 1e-9;
/// Tie tolerance inside the lexicographic ratio test.
const RATIO_TIE_EPS: f64 = 1e-9;
/// Largest size accepted by the exponential-cost oracles.
const MAX_ENUMERATION_SIZE: usize = 20;
/// Row-parallel pivot updates pay off only for large tableaus.
const PARALLEL_PIVOT_THRESHOLD: usize = 256;

/// Problem data for `LCP(M, q)`.
#[derive(Clone, Debug)]
pub struct LcpProblem {
    m: Mat,
    q: Vec<f64>,
}

impl LcpProblem {
    pub fn new(m: Mat, q: Vec<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(LvError::InvalidInput("LCP matrix must be square".into()));
        }
        if m.rows() != q.len() {
            return Err(LvError::InvalidInput(format!(
                "LCP dimensions disagree: {}x{} matrix vs length-{} q",
                m.rows(),
                m.cols(),
                q.len()
            )));
        }
        Ok(LcpProblem { m, q })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn matrix(&self) -> &Mat {
        &self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LcpStatus {
    Solved,
    /// Lemke hit a secondary ray; no solution along this path.
    RayTermination,
    /// Pivot budget exhausted.
    MaxPivots,
}

/// Solver output. On a non-`Solved` status `z` and `w` are empty.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LcpSolution {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    /// Indices with `z_i > 0` after clamping.
    pub support: Vec<usize>,
    pub pivots: usize,
    pub status: LcpStatus,
}

/// Default pivot budget, generous for well-conditioned P-matrix instances.
pub fn default_max_pivots(n: usize) -> usize {
    50 * n
}

/// Row updates are deferred and applied in batches of this many pivots.
const FLUSH_BATCH: usize = 32;

/// Lemke tableau for `I w - M z - d z0 = q` with column layout
/// `[w_0..w_{n-1} | z_0..z_{n-1} | z0 | rhs]`. The `w` block starts as the
/// identity and accumulates the inverse of the current basis, whose rows
/// close the lexicographic ratio order.
///
/// Rank-one pivot updates are not applied to the full tableau immediately:
/// up to [`FLUSH_BATCH`] normalized pivot rows and their elimination factors
/// are kept aside, entries are materialized on demand as
/// `base[i][j] - sum_b factor[b][i] * pivot_row[b][j]`, and the accumulated
/// rank-k update is flushed as one blocked pass. This keeps every pivot's
/// memory traffic proportional to a few vectors instead of the whole
/// tableau; the arithmetic is the classical elimination, just regrouped.
struct Tableau {
    n: usize,
    width: usize,
    /// `n x width`, stale by up to `pending` pivots.
    base: Vec<f64>,
    /// `FLUSH_BATCH x n` elimination factors, one row per pending pivot.
    factors: Vec<f64>,
    /// `FLUSH_BATCH x width` normalized pivot rows.
    pivot_rows: Vec<f64>,
    pending: usize,
    /// Current right-hand side, updated eagerly (it is read every pivot).
    rhs: Vec<f64>,
    /// Two generic perturbation columns, updated eagerly like `rhs`. Ties
    /// on the rhs ratios are broken against these first; being dense and
    /// generic they discriminate immediately, while the identity columns
    /// of the `w` block remain the formal tail of the lexicographic order.
    tie_cols: [Vec<f64>; 2],
}

impl Tableau {
    fn new(prob: &LcpProblem) -> Self {
        let n = prob.dim();
        let width = 2 * n + 2;
        let mut base = vec![0.0; n * width];
        for i in 0..n {
            let row = &mut base[i * width..(i + 1) * width];
            row[i] = 1.0;
            for j in 0..n {
                row[n + j] = -prob.m[(i, j)];
            }
            row[2 * n] = -1.0;
            row[2 * n + 1] = prob.q[i];
        }
        // Fixed-seed generic perturbation columns; with the identity basis
        // B^{-1} g = g.
        let mut rng = ChaCha8Rng::seed_from_u64(0x1e0_5eed);
        let tie_cols = [
            (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
            (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        ];
        Tableau {
            n,
            width,
            base,
            factors: vec![0.0; FLUSH_BATCH * n],
            pivot_rows: vec![0.0; FLUSH_BATCH * width],
            pending: 0,
            rhs: prob.q.clone(),
            tie_cols,
        }
    }

    /// Current value of a single entry.
    fn entry(&self, i: usize, j: usize) -> f64 {
        let mut v = self.base[i * self.width + j];
        for b in 0..self.pending {
            v -= self.factors[b * self.n + i] * self.pivot_rows[b * self.width + j];
        }
        v
    }

    /// Materializes the current column `jc` into `out`.
    fn column(&self, jc: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.base[i * self.width + jc];
        }
        for b in 0..self.pending {
            let p = self.pivot_rows[b * self.width + jc];
            if p != 0.0 {
                let factors = &self.factors[b * self.n..(b + 1) * self.n];
                for (o, f) in out.iter_mut().zip(factors) {
                    *o -= f * p;
                }
            }
        }
    }

    /// Materializes the current row `r` into `out`.
    fn row(&self, r: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.base[r * self.width..(r + 1) * self.width]);
        for b in 0..self.pending {
            let f = self.factors[b * self.n + r];
            if f != 0.0 {
                let pivot_row = &self.pivot_rows[b * self.width..(b + 1) * self.width];
                for (o, p) in out.iter_mut().zip(pivot_row) {
                    *o -= f * p;
                }
            }
        }
    }

    /// Records the pivot on `(r, jc)`. `col` must hold the materialized
    /// current entering column; `row_buf` is scratch of length `width`.
    fn pivot(&mut self, r: usize, jc: usize, col: &[f64], row_buf: &mut [f64]) {
        self.row(r, row_buf);
        let pivot_element = col[r];
        let inv = 1.0 / pivot_element;
        for v in row_buf.iter_mut() {
            *v *= inv;
        }
        row_buf[jc] = 1.0;

        let b = self.pending;
        self.pivot_rows[b * self.width..(b + 1) * self.width].copy_from_slice(row_buf);
        let factors = &mut self.factors[b * self.n..(b + 1) * self.n];
        factors.copy_from_slice(col);
        // The pivot row itself transforms as row /= pivot, which in deferred
        // form is a factor of (pivot - 1) against the normalized row.
        factors[r] = pivot_element - 1.0;

        let factors = &self.factors[b * self.n..(b + 1) * self.n];
        let p_rhs = row_buf[self.width - 1];
        for (v, f) in self.rhs.iter_mut().zip(factors) {
            *v -= f * p_rhs;
        }
        for tie in self.tie_cols.iter_mut() {
            let p_tie = tie[r] * inv;
            for (v, f) in tie.iter_mut().zip(factors) {
                *v -= f * p_tie;
            }
        }

        self.pending += 1;
        if self.pending == FLUSH_BATCH {
            self.flush();
        }
    }

    /// Applies the pending rank-k update to the stored tableau. Per entry
    /// the subtractions run in pivot order, so flushed values are bit-equal
    /// to eager elimination. Column tiles keep the pivot-row panel resident
    /// in cache while a block of tableau rows streams over it.
    fn flush(&mut self) {
        let pending = self.pending;
        if pending == 0 {
            return;
        }
        const COLUMN_TILE: usize = 512;
        let n = self.n;
        let width = self.width;
        let factors = &self.factors;
        let pivot_rows = &self.pivot_rows;
        let block_rows = 64.min(n);
        let update = |(block_idx, block): (usize, &mut [f64])| {
            let row0 = block_idx * block_rows;
            let rows_here = block.len() / width;
            let mut row_factors = [0.0; FLUSH_BATCH];
            for tile_start in (0..width).step_by(COLUMN_TILE) {
                let tile_end = (tile_start + COLUMN_TILE).min(width);
                for local in 0..rows_here {
                    for (b, rf) in row_factors.iter_mut().enumerate().take(pending) {
                        *rf = factors[b * n + row0 + local];
                    }
                    let row = &mut block[local * width + tile_start..local * width + tile_end];
                    for (b, &f) in row_factors.iter().enumerate().take(pending) {
                        if f != 0.0 {
                            let p = &pivot_rows[b * width + tile_start..b * width + tile_end];
                            for (v, pv) in row.iter_mut().zip(p) {
                                *v -= f * pv;
                            }
                        }
                    }
                }
            }
        };
        if n >= PARALLEL_PIVOT_THRESHOLD {
            self.base.par_chunks_mut(block_rows * width).enumerate().for_each(update);
        } else {
            self.base.chunks_mut(block_rows * width).enumerate().for_each(update);
        }
        self.pending = 0;
    }

    /// Lexicographic minimum-ratio test: among rows with a positive entry
    /// in the entering column, minimizes `rhs_i / col_i` and resolves ties
    /// through [`Tableau::break_ties`]. Ties are detected with a small
    /// relative tolerance so roundoff does not mask them.
    fn lex_ratio_argmin(&self, col: &[f64]) -> Option<usize> {
        let mut ties: Vec<usize> = Vec::new();
        let mut min_ratio = f64::INFINITY;
        for (i, &a) in col.iter().enumerate() {
            if a > PIVOT_EPS {
                let ratio = self.rhs[i] / a;
                if ratio < min_ratio - RATIO_TIE_EPS * (1.0 + ratio.abs() + min_ratio.abs()) {
                    min_ratio = ratio;
                    ties.clear();
                    ties.push(i);
                } else if ratio
                    <= min_ratio + RATIO_TIE_EPS * (1.0 + ratio.abs() + min_ratio.abs())
                {
                    min_ratio = min_ratio.min(ratio);
                    ties.push(i);
                }
            }
        }
        if ties.is_empty() {
            return None;
        }
        // Re-filter against the final minimum: earlier entries may have
        // joined when the running minimum was still larger.
        ties.retain(|&i| {
            let ratio = self.rhs[i] / col[i];
            ratio <= min_ratio + RATIO_TIE_EPS * (1.0 + ratio.abs() + min_ratio.abs())
        });
        Some(self.break_ties(ties, col))
    }

    /// Breaks a rhs-tied candidate set lexicographically: the two generic
    /// perturbation columns almost always single out a row in one pass; the
    /// `w`-block identity columns complete the order for adversarially
    /// degenerate data.
    fn break_ties(&self, mut ties: Vec<usize>, col: &[f64]) -> usize {
        for tie_col in &self.tie_cols {
            if ties.len() == 1 {
                return ties[0];
            }
            filter_by_minimum(&mut ties, |i| tie_col[i] / col[i]);
        }
        for c in 0..self.n {
            if ties.len() == 1 {
                break;
            }
            filter_by_minimum(&mut ties, |i| self.entry(i, c) / col[i]);
        }
        // Fully tied rows cannot happen with an invertible basis; the first
        // (smallest-index) candidate keeps the choice deterministic anyway.
        ties[0]
    }
}

/// Keeps the candidates whose value is minimal within a small relative
/// tolerance.
fn filter_by_minimum(ties: &mut Vec<usize>, value: impl Fn(usize) -> f64) {
    let values: Vec<f64> = ties.iter().map(|&i| value(i)).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut keep = 0;
    for k in 0..ties.len() {
        if values[k] <= min + RATIO_TIE_EPS * (1.0 + values[k].abs() + min.abs()) {
            ties[keep] = ties[k];
            keep += 1;
        }
    }
    ties.truncate(keep);
}

/// Lemke's algorithm with covering vector `d = 1`.
pub fn lemke_solve(prob: &LcpProblem, max_pivots: usize) -> LcpSolution {
    let n = prob.dim();
    let q = prob.q();

    if q.iter().all(|&v| v >= 0.0) {
        let w: Vec<f64> = q.iter().map(|&v| clamp(v)).collect();
        return LcpSolution {
            z: vec![0.0; n],
            w,
            support: Vec::new(),
            pivots: 0,
            status: LcpStatus::Solved,
        };
    }

    let z0_col = 2 * n;
    let z0_id = 2 * n;
    let mut tableau = Tableau::new(prob);
    let mut basis: Vec<usize> = (0..n).collect();
    let mut col = vec![0.0; n];
    let mut row_buf = vec![0.0; tableau.width];

    // First pivot: z0 enters on the lexicographically smallest row among the
    // most negative right-hand sides. This makes the basis lex-feasible.
    let q_min = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let unit = vec![1.0; n];
    let ties: Vec<usize> = (0..n).filter(|&i| tableau.rhs[i] == q_min).collect();
    let r = tableau.break_ties(ties, &unit);
    tableau.column(z0_col, &mut col);
    tableau.pivot(r, z0_col, &col, &mut row_buf);
    let mut leaving = basis[r];
    basis[r] = z0_id;
    let mut pivots = 1;

    loop {
        if leaving == z0_id {
            return extract_solution(prob, &tableau.rhs, &basis, pivots);
        }
        if pivots >= max_pivots {
            return failed(pivots, LcpStatus::MaxPivots);
        }
        let entering = complement(leaving, n);
        tableau.column(entering, &mut col);

        let row = match tableau.lex_ratio_argmin(&col) {
            Some(row) => row,
            None => return failed(pivots, LcpStatus::RayTermination),
        };

        tableau.pivot(row, entering, &col, &mut row_buf);
        leaving = basis[row];
        basis[row] = entering;
        pivots += 1;
    }
}

fn failed(pivots: usize, status: LcpStatus) -> LcpSolution {
    LcpSolution { z: Vec::new(), w: Vec::new(), support: Vec::new(), pivots, status }
}

#[inline]
fn clamp(v: f64) -> f64 {
    if v.abs() < OUTPUT_CLAMP {
        0.0
    } else {
        v
    }
}

fn complement(var: usize, n: usize) -> usize {
    debug_assert!(var < 2 * n);
    if var < n {
        var + n
    } else {
        var - n
    }
}

/// Reads basic values off the final right-hand side, then tightens the
/// solution by re-solving the restricted system `M_SS z_S = -q_S` on the
/// support found by the pivoting. The refinement is kept only if it
/// preserves all sign conditions; otherwise the raw tableau values stand.
fn extract_solution(
    prob: &LcpProblem,
    rhs: &[f64],
    basis: &[usize],
    pivots: usize,
) -> LcpSolution {
    let n = prob.dim();
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (row, &var) in basis.iter().enumerate() {
        let value = clamp(rhs[row]);
        if var < n {
            w[var] = value;
        } else if var < 2 * n {
            z[var - n] = value;
        } else {
            debug_assert!(false, "z0 still basic in a solved tableau");
        }
    }

    let support: Vec<usize> = (0..n).filter(|&i| z[i] > 0.0).collect();
    if let Some((z_ref, w_ref)) = refine_on_support(prob, &support) {
        z = z_ref;
        w = w_ref;
    }
    let support: Vec<usize> = (0..n).filter(|&i| z[i] > 0.0).collect();
    LcpSolution { z, w, support, pivots, status: LcpStatus::Solved }
}

fn refine_on_support(prob: &LcpProblem, support: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    if support.is_empty() {
        return None;
    }
    let sub = prob.m.principal_submatrix(support);
    let rhs: Vec<f64> = support.iter().map(|&i| -prob.q[i]).collect();
    let z_s = solve(&sub, &rhs).ok()?;
    if z_s.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let n = prob.dim();
    let mut z = vec![0.0; n];
    for (&i, &v) in support.iter().zip(&z_s) {
        z[i] = v;
    }
    let mut w = prob.m.mat_vec(&z);
    for (wi, qi) in w.iter_mut().zip(&prob.q) {
        *wi += qi;
    }
    let mut in_support = vec![false; n];
    for &i in support {
        in_support[i] = true;
    }
    for (i, wi) in w.iter_mut().enumerate() {
        if in_support[i] {
            *wi = 0.0;
        } else if *wi < -SIGN_TOL {
            return None;
        } else {
            *wi = clamp(*wi).max(0.0);
        }
    }
    Some((z, w))
}

/// Result of the exhaustive support enumeration.
#[derive(Clone, Debug)]
pub struct BruteForceEnumeration {
    /// Every distinct solution found, in support-mask order.
    pub solutions: Vec<LcpSolution>,
    /// Number of supports skipped because the restricted system was singular.
    pub singular_supports: usize,
}

/// Enumerates all `2^n` supports, solving the restricted linear system for
/// each and keeping the candidates that satisfy the sign conditions within
/// 1e-9. Guarded to `n <= 20`.
pub fn brute_force_solve(prob: &LcpProblem) -> Result<BruteForceEnumeration> {
    let n = prob.dim();
    if n > MAX_ENUMERATION_SIZE {
        return Err(LvError::InvalidInput(format!(
            "brute-force enumeration is limited to n <= {MAX_ENUMERATION_SIZE}, got {n}"
        )));
    }
    let mut solutions: Vec<LcpSolution> = Vec::new();
    let mut singular_supports = 0;
    for mask in 0u64..(1u64 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let z = if support.is_empty() {
            vec![0.0; n]
        } else {
            let sub = prob.m.principal_submatrix(&support);
            let rhs: Vec<f64> = support.iter().map(|&i| -prob.q[i]).collect();
            let z_s = match solve(&sub, &rhs) {
                Ok(z_s) => z_s,
                Err(_) => {
                    singular_supports += 1;
                    continue;
                }
            };
            if z_s.iter().any(|&v| v < -SIGN_TOL) {
                continue;
            }
            let mut z = vec![0.0; n];
            for (&i, &v) in support.iter().zip(&z_s) {
                z[i] = v.max(0.0);
            }
            z
        };
        let mut w = prob.m.mat_vec(&z);
        for (wi, qi) in w.iter_mut().zip(&prob.q) {
            *wi += qi;
        }
        let feasible = (0..n).all(|i| {
            if mask & (1 << i) != 0 {
                w[i].abs() <= SIGN_TOL
            } else {
                w[i] >= -SIGN_TOL
            }
        });
        if !feasible {
            continue;
        }
        let z: Vec<f64> = z.into_iter().map(clamp).collect();
        let w: Vec<f64> = w.into_iter().map(|v| clamp(v).max(0.0)).collect();
        let duplicate = solutions.iter().any(|s| {
            s.z.iter().zip(&z).all(|(a, b)| (a - b).abs() <= SIGN_TOL)
        });
        if duplicate {
            continue;
        }
        let support: Vec<usize> = (0..n).filter(|&i| z[i] > 0.0).collect();
        solutions.push(LcpSolution { z, w, support, pivots: 0, status: LcpStatus::Solved });
    }
    Ok(BruteForceEnumeration { solutions, singular_supports })
}

/// Checks nonnegativity, the affine relation `w = Mz + q` and
/// complementarity, all within `tol` (the affine residual is scaled by the
/// natural magnitude `1 + |q| + |M||z|`).
pub fn verify_solution(prob: &LcpProblem, sol: &LcpSolution, tol: f64) -> bool {
    let n = prob.dim();
    if sol.z.len() != n || sol.w.len() != n {
        return false;
    }
    let z_norm = sol.z.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let q_norm = prob.q.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let scale = 1.0 + q_norm + prob.m.inf_norm() * z_norm;
    let affine = prob.m.mat_vec(&sol.z);
    for i in 0..n {
        if sol.z[i] < -tol || sol.w[i] < -tol {
            return false;
        }
        if (sol.w[i] - (affine[i] + prob.q[i])).abs() > tol * scale {
            return false;
        }
        if sol.z[i].min(sol.w[i]) > tol {
            return false;
        }
    }
    true
}

/// P-matrix test: every principal minor strictly positive (with a 1e-12
/// guard). Cost is exponential; guarded to `n <= 20`.
pub fn is_p_matrix(m: &Mat) -> Result<bool> {
    if !m.is_square() {
        return Err(LvError::InvalidInput("P-matrix test needs a square matrix".into()));
    }
    let n = m.rows();
    if n > MAX_ENUMERATION_SIZE {
        return Err(LvError::InvalidInput(format!(
            "P-matrix test is limited to n <= {MAX_ENUMERATION_SIZE}, got {n}"
        )));
    }
    for mask in 1u64..(1u64 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if det(&m.principal_submatrix(&idx)) <= 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Builds `M = I + c G` from a standardized noise matrix; small `c` keeps
/// it a P-matrix.
pub fn identity_plus_scaled(g: &Mat, c: f64) -> Mat {
    let n = g.rows();
    Mat::from_fn(n, n, |i, j| if i == j { 1.0 + c * g[(i, j)] } else { c * g[(i, j)] })
}
