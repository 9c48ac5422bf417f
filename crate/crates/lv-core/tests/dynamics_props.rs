//! Integrator properties: fourth-order convergence on the logistic problem,
//! positivity, and long-run agreement with the LCP equilibrium in both the
//! constant and step scenarios.

mod common;

use lv_core::dynamics::{detect_convergence, integrate_lv_with_stride, InteractionSchedule};
use lv_core::ensemble::EntryDist;
use lv_core::equilibrium::{compute_equilibrium, survivor_stats, SURVIVAL_THRESHOLD};

fn logistic_exact(x0: f64, t: f64) -> f64 {
    x0 * t.exp() / (1.0 + x0 * (t.exp() - 1.0))
}

#[test]
fn rk4_shows_fourth_order_convergence() {
    let schedule = InteractionSchedule::constant(1, EntryDist::Zero, 0, 0.0, 2.0).unwrap();
    let max_error = |dt: f64| -> f64 {
        let traj = integrate_lv_with_stride(&schedule, &[0.5], 2.0, dt, 1).unwrap();
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(t, x)| (x[0] - logistic_exact(0.5, *t)).abs())
            .fold(0.0, f64::max)
    };
    let ratio = max_error(0.02) / max_error(0.01);
    assert!(
        (12.0..=20.0).contains(&ratio),
        "halving dt should cut the error ~16x, got {ratio}"
    );
}

#[test]
fn long_runs_land_on_the_lcp_equilibrium() {
    // Ten seeds at n = 10, alpha = 2.5: the trajectory endpoint must match
    // the LCP equilibrium to 1e-4 and extinct species must have decayed
    // below 1e-3.
    for seed in 0..10u64 {
        let schedule =
            InteractionSchedule::constant(10, EntryDist::StandardGaussian, seed, 0.0, 2.5)
                .unwrap();
        let eq = compute_equilibrium(schedule.initial_matrix()).unwrap();
        let traj = integrate_lv_with_stride(&schedule, &[1.0; 10], 200.0, 0.01, 100).unwrap();
        let end = traj.final_state();
        for (i, (got, want)) in end.iter().zip(&eq.x_star).enumerate() {
            assert!(
                (got - want).abs() <= 1e-4,
                "seed {seed} component {i}: endpoint {got} vs equilibrium {want}"
            );
            if *want <= SURVIVAL_THRESHOLD {
                assert!(*got < 1e-3, "seed {seed}: extinct species {i} still at {got}");
            }
        }
        assert!(traj.states.iter().all(|s| s.iter().all(|&v| v > 0.0)));
    }
}

#[test]
fn feasibility_threshold_separates_full_support_from_extinctions() {
    // sqrt(2 ln 10) ~ 2.14: above it (alpha = 2.5) the equilibrium is
    // typically feasible, below it (alpha = 1.5) extinctions appear.
    let mut full_support_at_weak = 0;
    let mut extinctions_at_strong = 0;
    for seed in 0..10u64 {
        let schedule = InteractionSchedule::step(
            10,
            EntryDist::StandardGaussian,
            seed,
            0.0,
            2.5,
            1.5,
            50.0,
        )
        .unwrap();
        let weak = survivor_stats(&compute_equilibrium(schedule.initial_matrix()).unwrap())
            .unwrap();
        if weak.p_hat == 1.0 {
            full_support_at_weak += 1;
        }
        let strong = survivor_stats(&compute_equilibrium(schedule.final_matrix()).unwrap())
            .unwrap();
        if strong.p_hat < 1.0 {
            extinctions_at_strong += 1;
        }
    }
    assert!(
        full_support_at_weak >= 7,
        "alpha = 2.5 should usually be feasible at n = 10, got {full_support_at_weak}/10"
    );
    assert!(
        extinctions_at_strong >= 6,
        "alpha = 1.5 should usually lose species at n = 10, got {extinctions_at_strong}/10"
    );
}

#[test]
fn step_scenario_reaches_the_new_equilibrium() {
    // One ten-species community, interaction strength stepping 2.5 -> 1.5
    // at t0 = 50: the dynamics move from the first equilibrium to the
    // second, with a smooth transition after the jump.
    let seed = 3;
    let schedule =
        InteractionSchedule::step(10, EntryDist::StandardGaussian, seed, 0.0, 2.5, 1.5, 50.0)
            .unwrap();
    let eq1 = compute_equilibrium(schedule.initial_matrix()).unwrap();
    let eq2 = compute_equilibrium(schedule.final_matrix()).unwrap();
    let stats2 = survivor_stats(&eq2).unwrap();
    assert!(stats2.p_hat < 1.0, "seed chosen so the strong regime loses species");

    let traj = integrate_lv_with_stride(&schedule, &[1.0; 10], 250.0, 0.01, 10).unwrap();

    // Before the step the state sits on the first equilibrium...
    let pre_step = traj
        .times
        .iter()
        .position(|&t| t >= 49.9)
        .expect("recorded point just before t0");
    for i in 0..10 {
        assert!((traj.states[pre_step][i] - eq1.x_star[i]).abs() < 1e-3);
    }
    // ...and afterwards converges to the second one.
    let t_conv = detect_convergence(&traj, &eq2.x_star, 1e-3)
        .expect("trajectory converges to the post-step equilibrium");
    assert!(t_conv >= 50.0, "convergence to the new equilibrium happens after t0");
    for i in 0..10 {
        if eq2.x_star[i] <= SURVIVAL_THRESHOLD {
            assert!(traj.final_state()[i] < 1e-3);
        }
    }
}
