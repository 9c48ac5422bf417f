//! Campaign-level properties: byte-identical reproducibility, closure of
//! the confidence intervals around the theory, histogram sanity and the
//! qualitative diversity response to a step in interaction strength.

mod common;

use lv_core::experiments::{
    run_campaign, run_diversity_timeseries, run_equilibrium_sweep, run_survivor_histogram,
    CampaignConfig, Scenario, StepParams,
};
use lv_core::EntryDist;
use std::path::PathBuf;

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lv-core-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn read_all(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn campaign_outputs_are_byte_identical_across_reruns() {
    let configs = [
        CampaignConfig {
            scenario: Scenario::EquilibriumSweep,
            n: 60,
            trials: 8,
            base_seed: 99,
            dist: EntryDist::StandardGaussian,
            alphas: vec![2.0, 2.5],
            mus: vec![0.0],
            bins: 50,
            dynamics: None,
        },
        CampaignConfig {
            scenario: Scenario::Histogram,
            n: 150,
            trials: 3,
            base_seed: 7,
            dist: EntryDist::UniformSymSqrt3,
            alphas: vec![1.8],
            mus: vec![0.0],
            bins: 25,
            dynamics: None,
        },
        CampaignConfig {
            scenario: Scenario::DiversityTimeseries,
            n: 20,
            trials: 4,
            base_seed: 3,
            dist: EntryDist::StandardGaussian,
            alphas: Vec::new(),
            mus: vec![0.0],
            bins: 50,
            dynamics: Some(StepParams {
                alpha1: 2.5,
                alpha2: 1.5,
                t0: 10.0,
                t_end: 30.0,
                dt: 0.05,
                record_stride: 20,
            }),
        },
    ];
    for (i, cfg) in configs.iter().enumerate() {
        let dir_a = scratch_dir(&format!("repro-a{i}"));
        let dir_b = scratch_dir(&format!("repro-b{i}"));
        run_campaign(cfg, &dir_a).unwrap();
        run_campaign(cfg, &dir_b).unwrap();
        let a = read_all(&dir_a);
        let b = read_all(&dir_b);
        assert!(!a.is_empty());
        assert_eq!(a, b, "scenario {i} produced different bytes on rerun");
        let _ = std::fs::remove_dir_all(&dir_a);
        let _ = std::fs::remove_dir_all(&dir_b);
    }
}

#[test]
fn sweep_records_close_around_the_theory() {
    // Desk-scale version of the theory-vs-empirics closure: the theoretical
    // value lies inside the 95% interval or within 0.02 absolute.
    let cfg = CampaignConfig {
        scenario: Scenario::EquilibriumSweep,
        n: 200,
        trials: 40,
        base_seed: 5,
        dist: EntryDist::StandardGaussian,
        alphas: vec![2.0],
        mus: vec![-0.2, 0.0, 0.2],
        bins: 50,
        dynamics: None,
    };
    let result = run_equilibrium_sweep(&cfg).unwrap();
    assert_eq!(result.records.len(), 3);
    for r in &result.records {
        assert_eq!(r.trials_used, 40);
        assert!(!r.flagged);
        for (mean, ci, star) in [
            (r.p_hat_mean, r.p_hat_ci, r.p_star),
            (r.m_hat_mean, r.m_hat_ci, r.m_star),
            (r.sigma_hat_mean, r.sigma_hat_ci, r.sigma_star),
        ] {
            let inside_ci = (mean - star).abs() <= ci;
            let close = (mean - star).abs() <= 0.02;
            assert!(
                inside_ci || close,
                "(alpha, mu) = ({}, {}): {mean} vs {star} (ci {ci})",
                r.alpha,
                r.mu
            );
        }
    }
}

#[test]
fn histogram_tracks_the_theoretical_density() {
    let cfg = CampaignConfig {
        scenario: Scenario::Histogram,
        n: 500,
        trials: 4,
        base_seed: 17,
        dist: EntryDist::StandardGaussian,
        alphas: vec![2.0],
        mus: vec![0.2],
        bins: 40,
        dynamics: None,
    };
    let result = run_survivor_histogram(&cfg).unwrap();
    assert_eq!(result.trials_used, 4);
    assert!(result.sample_count > 1500);
    assert!(result.ks_statistic < 0.1, "ks = {}", result.ks_statistic);
    assert_eq!(result.counts.iter().sum::<u64>() as usize, result.sample_count);
    // Densities integrate to ~1 over the binned range.
    let width = result.bin_edges[1] - result.bin_edges[0];
    let emp_mass: f64 = result.empirical_density.iter().map(|d| d * width).sum();
    assert!((emp_mass - 1.0).abs() < 1e-9);
}

#[test]
fn diversity_drops_and_spreads_after_the_step() {
    let base = CampaignConfig {
        scenario: Scenario::DiversityTimeseries,
        n: 50,
        trials: 30,
        base_seed: 21,
        dist: EntryDist::StandardGaussian,
        alphas: Vec::new(),
        mus: vec![0.0],
        bins: 50,
        dynamics: Some(StepParams {
            alpha1: 2.5,
            alpha2: 1.5,
            t0: 30.0,
            t_end: 90.0,
            dt: 0.02,
            record_stride: 50,
        }),
    };
    let result = run_diversity_timeseries(&base).unwrap();
    assert_eq!(result.trials_used, 30);
    let idx_before = result.times.iter().position(|&t| t >= 29.0).unwrap();
    let last = result.times.len() - 1;
    assert!(
        result.mean[last] < result.mean[idx_before] - 2.0,
        "mean Hill number should drop after the step: {} -> {}",
        result.mean[idx_before],
        result.mean[last]
    );
    let spread_before = result.q95[idx_before] - result.q05[idx_before];
    let spread_after = result.q95[last] - result.q05[last];
    assert!(
        spread_after > 2.0 * spread_before,
        "across-trial variability should grow after the drop: {spread_before} -> {spread_after}"
    );

    // Lower drift slows the transition: farther from its final plateau
    // shortly after the step.
    let gap_at = |mu: f64| -> f64 {
        let mut cfg = base.clone();
        cfg.mus = vec![mu];
        let r = run_diversity_timeseries(&cfg).unwrap();
        let probe = r.times.iter().position(|&t| t >= 34.0).unwrap();
        let last = r.times.len() - 1;
        (r.mean[probe] - r.mean[last]).abs()
    };
    let slow = gap_at(-0.5);
    let fast = gap_at(0.5);
    assert!(
        slow > fast,
        "mu = -0.5 should settle more slowly than mu = 0.5: gaps {slow} vs {fast}"
    );
}

#[test]
fn timeseries_times_follow_the_recording_stride() {
    let cfg = CampaignConfig {
        scenario: Scenario::DiversityTimeseries,
        n: 10,
        trials: 2,
        base_seed: 1,
        dist: EntryDist::StandardGaussian,
        alphas: Vec::new(),
        mus: vec![0.0],
        bins: 50,
        dynamics: Some(StepParams {
            alpha1: 2.5,
            alpha2: 1.5,
            t0: 5.0,
            t_end: 20.0,
            dt: 0.01,
            record_stride: 100,
        }),
    };
    let result = run_diversity_timeseries(&cfg).unwrap();
    assert_eq!(result.times[0], 0.0);
    assert!((result.times[1] - 1.0).abs() < 1e-12);
    assert!((result.times.last().unwrap() - 20.0).abs() < 1e-9);
    for q in [&result.q05, &result.q25, &result.q50, &result.q75, &result.q95] {
        assert_eq!(q.len(), result.times.len());
    }
}
