//! Statistical properties of the sampled interaction matrices and the
//! convergence of their spectral diagnostics to the large-n predictions.

mod common;

use common::mean_and_std;
use lv_core::ensemble::{
    predicted_top_eigenvalue, sample_interaction_matrix, spectral_radius_estimate,
    symmetrized_top_eigenvalue, EntryDist,
};
use rayon::prelude::*;

#[test]
fn entry_moments_match_the_model() {
    // Entries are A_ij/(alpha sqrt(n)) + mu/n: over the n^2 samples the mean
    // sits within 3 standard errors of mu/n and the variance within 3
    // standard errors of 1/(alpha^2 n).
    let (n, alpha, mu) = (500usize, 2.0, 0.2);
    for dist in [EntryDist::StandardGaussian, EntryDist::UniformSymSqrt3] {
        let b = sample_interaction_matrix(n, alpha, mu, dist, 2718).unwrap();
        let entries = b.entries().as_slice();
        let count = entries.len() as f64;
        let (mean, std) = mean_and_std(entries);

        let target_mean = mu / n as f64;
        let se_mean = std / count.sqrt();
        assert!(
            (mean - target_mean).abs() <= 3.0 * se_mean,
            "{dist}: sample mean {mean:.3e} vs {target_mean:.3e} (3 SE = {:.3e})",
            3.0 * se_mean
        );

        let target_var = 1.0 / (alpha * alpha * n as f64);
        let var = std * std;
        // SE of the sample variance; the entry kurtosis is 3 for the
        // Gaussian and 9/5 for the uniform.
        let kurtosis = match dist {
            EntryDist::StandardGaussian => 3.0,
            _ => 1.8,
        };
        let se_var = target_var * ((kurtosis - 1.0) / count).sqrt();
        assert!(
            (var - target_var).abs() <= 3.0 * se_var,
            "{dist}: sample variance {var:.4e} vs {target_var:.4e} (3 SE = {:.3e})",
            3.0 * se_var
        );
    }
}

#[test]
fn spectral_convergence_over_twenty_seeds() {
    // Sample mean of lambda_max(B + B^T) within 5% of the prediction in
    // both the outlier and the semicircle-edge regimes.
    let alpha = std::f64::consts::SQRT_2;
    for mu in [1.5, 0.0] {
        let predicted = predicted_top_eigenvalue(alpha, mu);
        let values: Vec<f64> = (0..20u64)
            .collect::<Vec<u64>>()
            .into_par_iter()
            .map(|seed| {
                let b = sample_interaction_matrix(
                    1000,
                    alpha,
                    mu,
                    EntryDist::StandardGaussian,
                    3000 + seed,
                )
                .unwrap();
                symmetrized_top_eigenvalue(&b).unwrap().lambda_max_sym
            })
            .collect();
        let (mean, _) = mean_and_std(&values);
        assert!(
            (mean - predicted).abs() <= 0.05 * predicted,
            "mu = {mu}: mean {mean:.4} vs predicted {predicted:.4}"
        );
    }
}

#[test]
fn nonsymmetric_radius_diagnostic_tracks_the_bulk_and_the_outlier() {
    // Centered case: the bulk spectrum fills the disk of radius 1/alpha,
    // so the growth-rate estimate sits within 1/alpha +- 0.1.
    let b = sample_interaction_matrix(1000, 1.0, 0.0, EntryDist::StandardGaussian, 55).unwrap();
    let rho = spectral_radius_estimate(&b, 300);
    assert!((rho - 1.0).abs() <= 0.1, "bulk radius estimate {rho}");

    // With a strong drift the single outlier eigenvalue near mu dominates.
    let b = sample_interaction_matrix(1000, 1.0, 2.0, EntryDist::StandardGaussian, 56).unwrap();
    let rho = spectral_radius_estimate(&b, 300);
    assert!((rho - 2.0).abs() <= 0.1, "outlier radius estimate {rho}");
}
