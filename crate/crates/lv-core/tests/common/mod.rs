//! Shared oracles for the integration tests. Everything here is an
//! independent computation path: quadrature instead of closed forms,
//! bisection instead of rational approximations.

#![allow(dead_code)]

/// Standard normal density (local copy so the oracles do not depend on the
/// library's `normal` module).
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Adaptive Simpson quadrature with Richardson correction. The interval is
/// first cut into unit-width panels so narrow features cannot slip between
/// the initial sample points.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let panels = ((b - a).abs().ceil() as usize).clamp(1, 4096);
    let h = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    (0..panels)
        .map(|i| adaptive_simpson(f, a + i as f64 * h, a + (i + 1) as f64 * h, panel_tol))
        .sum()
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, fm: f64, b: f64, fb: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, flm, m, fm);
        let right = simpson(m, fm, frm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, fa, fm, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 60)
}

/// `Phi(x)` by quadrature of the density from -40 (mass below is ~1e-350).
pub fn cdf_by_quadrature(x: f64) -> f64 {
    integrate(&phi, -40.0, x, 1e-14)
}

/// Conditional moments `E[Z^k | Z > -delta]`, `k = 1, 2`, by quadrature.
pub fn truncated_moments_by_quadrature(delta: f64) -> (f64, f64) {
    let upper = (-delta).max(0.0) + 45.0;
    let mass = integrate(&phi, -delta, upper, 1e-15);
    let first = integrate(&|z: f64| z * phi(z), -delta, upper, 1e-15) / mass;
    let second = integrate(&|z: f64| z * z * phi(z), -delta, upper, 1e-15) / mass;
    (first, second)
}

/// Inverse of a monotone increasing function by bisection on `[lo, hi]`.
pub fn bisect(f: &dyn Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) <= target && f(hi) >= target, "bisection bracket does not contain the target");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sample mean and (n-1)-normalized standard deviation.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
