//! Minimal dense linear algebra: row-major matrices, LU solves and
//! eigenvalues of symmetric matrices (Householder tridiagonalization
//! followed by implicit-shift QL).

use crate::{LvError, Result};

/// Dense row-major `f64` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(LvError::InvalidInput("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LvError::InvalidInput("matrix rows have unequal lengths".into()));
        }
        Ok(Mat { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `out = self * x`.
    pub fn mat_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *o = acc;
        }
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mat_vec_into(x, &mut out);
        out
    }

    /// Principal submatrix on the given (sorted or unsorted) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Mat {
        Mat::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Operator infinity norm (maximum absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

const SINGULAR_PIVOT: f64 = 1e-13;

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
    sign: f64,
}

pub fn lu_factor(a: &Mat) -> Result<Lu> {
    if !a.is_square() {
        return Err(LvError::InvalidInput("LU factorization needs a square matrix".into()));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    // Scale factors for implicit scaled pivoting.
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let m = lu.row(i).iter().map(|v| v.abs()).fold(0.0, f64::max);
            if m > 0.0 {
                1.0 / m
            } else {
                0.0
            }
        })
        .collect();
    let mut scale = scale;
    for k in 0..n {
        let mut pivot_row = k;
        let mut best = 0.0;
        for i in k..n {
            let cand = scale[perm[i]] * lu[(i, k)].abs();
            if cand > best {
                best = cand;
                pivot_row = i;
            }
        }
        if lu[(pivot_row, k)].abs() < SINGULAR_PIVOT {
            return Err(LvError::Numerical(format!(
                "singular matrix in LU factorization (pivot {} at column {})",
                lu[(pivot_row, k)],
                k
            )));
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            perm.swap(k, pivot_row);
            scale.swap(k, pivot_row);
            sign = -sign;
        }
        let inv_pivot = 1.0 / lu[(k, k)];
        for i in (k + 1)..n {
            let factor = lu[(i, k)] * inv_pivot;
            lu[(i, k)] = factor;
            if factor != 0.0 {
                for j in (k + 1)..n {
                    lu[(i, j)] -= factor * lu[(k, j)];
                }
            }
        }
    }
    Ok(Lu { lu, perm, sign })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "right-hand side has wrong length");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    pub fn det(&self) -> f64 {
        let n = self.lu.rows();
        (0..n).fold(self.sign, |acc, i| acc * self.lu[(i, i)])
    }
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    Ok(lu_factor(a)?.solve(b))
}

/// Determinant via Gaussian elimination; returns 0 for (numerically)
/// singular matrices instead of erroring.
pub fn det(a: &Mat) -> f64 {
    assert!(a.is_square(), "determinant needs a square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut sign = 1.0;
    for k in 0..n {
        let mut pivot_row = k;
        let mut best = m[(k, k)].abs();
        for i in (k + 1)..n {
            if m[(i, k)].abs() > best {
                best = m[(i, k)].abs();
                pivot_row = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(pivot_row, j)];
                m[(pivot_row, j)] = tmp;
            }
            sign = -sign;
        }
        for i in (k + 1)..n {
            let factor = m[(i, k)] / m[(k, k)];
            if factor != 0.0 {
                for j in (k + 1)..n {
                    m[(i, j)] -= factor * m[(k, j)];
                }
            }
        }
    }
    (0..n).fold(sign, |acc, i| acc * m[(i, i)])
}

/// Maximum number of implicit-shift QL iterations per eigenvalue.
const MAX_QL_ITERATIONS: usize = 50;

/// Eigenvalues of a symmetric matrix, ascending.
///
/// The input must be exactly symmetric; only its lower triangle is read.
pub fn symmetric_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(LvError::InvalidInput("eigenvalue computation needs a square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut work = a.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut work, n, &mut d, &mut e);
    ql_implicit_shift(&mut d, &mut e)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    Ok(d)
}

/// Householder reduction of a symmetric matrix to tridiagonal form,
/// eigenvalues-only variant (no transformation accumulation). On return `d`
/// holds the diagonal and `e[1..]` the subdiagonal.
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..i {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..i {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..i {
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..i {
                        g_acc += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..i {
                    let f_j = a[i * n + j];
                    e[j] -= hh * f_j;
                    let g_j = e[j];
                    for k in 0..=j {
                        a[j * n + k] -= f_j * e[k] + g_j * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i * n + i];
    }
}

/// QL with implicit shifts on a symmetric tridiagonal matrix (`d` diagonal,
/// `e[1..]` subdiagonal). Overwrites `d` with the eigenvalues.
fn ql_implicit_shift(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == MAX_QL_ITERATIONS {
                return Err(LvError::Numerical(format!(
                    "tridiagonal QL failed to converge within {} iterations",
                    MAX_QL_ITERATIONS
                )));
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflowed = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflowed {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
