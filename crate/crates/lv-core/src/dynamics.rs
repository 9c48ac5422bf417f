//! Lotka-Volterra dynamics `dx_k/dt = x_k (1 - x_k + (B_t x)_k)` under a
//! fixed or step-changing interaction strength, integrated by fixed-step
//! RK4 for reproducibility.

use crate::ensemble::{is_admissible, sample_raw, EntryDist, InteractionMatrix};
use crate::{LvError, Result};
use serde::{Deserialize, Serialize};

/// Integration scheme tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Rk4,
}

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_RECORD_STRIDE: usize = 10;
/// Fixed-step RK4 needs a modest step for these stiffness-free systems.
pub const MAX_DT: f64 = 0.1;

/// Interaction strength over time: either constant `alpha1`, or a step from
/// `alpha1` to `alpha2` at `t0`. Both regimes share the same realization of
/// the raw matrix `A`; only the `1/(alpha sqrt(n))` scaling changes.
#[derive(Clone, Debug)]
pub struct InteractionSchedule {
    pub n: usize,
    pub mu: f64,
    pub alpha1: f64,
    /// `Some((alpha2, t0))` for the step kind.
    pub step: Option<(f64, f64)>,
    initial: InteractionMatrix,
    switched: Option<InteractionMatrix>,
}

impl InteractionSchedule {
    /// Constant interaction strength; `(alpha1, mu)` must be admissible.
    pub fn constant(
        n: usize,
        dist: EntryDist,
        seed: u64,
        mu: f64,
        alpha1: f64,
    ) -> Result<Self> {
        check_admissible(alpha1, mu)?;
        let raw = sample_raw(n, dist, seed);
        let initial = InteractionMatrix::from_raw(&raw, alpha1, mu, dist, seed)?;
        Ok(InteractionSchedule { n, mu, alpha1, step: None, initial, switched: None })
    }

    /// Step from `alpha1` to `alpha2` at time `t0 >= 0`; both regimes must
    /// be admissible.
    pub fn step(
        n: usize,
        dist: EntryDist,
        seed: u64,
        mu: f64,
        alpha1: f64,
        alpha2: f64,
        t0: f64,
    ) -> Result<Self> {
        check_admissible(alpha1, mu)?;
        check_admissible(alpha2, mu)?;
        if !(t0 >= 0.0) {
            return Err(LvError::InvalidInput(format!("step time t0 must be >= 0, got {t0}")));
        }
        let raw = sample_raw(n, dist, seed);
        let initial = InteractionMatrix::from_raw(&raw, alpha1, mu, dist, seed)?;
        let switched = InteractionMatrix::from_raw(&raw, alpha2, mu, dist, seed)?;
        Ok(InteractionSchedule {
            n,
            mu,
            alpha1,
            step: Some((alpha2, t0)),
            initial,
            switched: Some(switched),
        })
    }

    /// `alpha(t)`.
    pub fn alpha_at(&self, t: f64) -> f64 {
        match self.step {
            Some((alpha2, t0)) if t >= t0 => alpha2,
            _ => self.alpha1,
        }
    }

    /// Interaction matrix of the initial regime.
    pub fn initial_matrix(&self) -> &InteractionMatrix {
        &self.initial
    }

    /// Interaction matrix of the post-step regime (the initial one for the
    /// constant kind).
    pub fn final_matrix(&self) -> &InteractionMatrix {
        self.switched.as_ref().unwrap_or(&self.initial)
    }
}

fn check_admissible(alpha: f64, mu: f64) -> Result<()> {
    if !is_admissible(alpha, mu) {
        return Err(LvError::InvalidInput(format!(
            "(alpha, mu) = ({alpha}, {mu}) is outside the admissible region; \
             the schedule requires a unique stable equilibrium in every regime"
        )));
    }
    Ok(())
}

/// Time-stamped abundance states from the integrator.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial state")
    }
}

/// Integrates the system from `x0 > 0` to `t_end`, recording every
/// [`DEFAULT_RECORD_STRIDE`]-th step.
pub fn integrate_lv(
    schedule: &InteractionSchedule,
    x0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    integrate_lv_with_stride(schedule, x0, t_end, dt, DEFAULT_RECORD_STRIDE)
}

/// Integrator with an explicit recording stride (states kept every
/// `record_stride` steps; the initial and final states are always kept).
///
/// The step discontinuity is aligned to the step grid: the switch happens at
/// the step index nearest `t0/dt`, so no RK4 stage straddles the jump.
pub fn integrate_lv_with_stride(
    schedule: &InteractionSchedule,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    if x0.len() != schedule.n {
        return Err(LvError::InvalidInput(format!(
            "initial state has length {}, schedule expects {}",
            x0.len(),
            schedule.n
        )));
    }
    if let Some((i, &bad)) = x0.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(LvError::InvalidInput(format!(
            "initial abundances must be strictly positive; component {i} is {bad}"
        )));
    }
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(LvError::InvalidInput(format!(
            "dt must lie in (0, {MAX_DT}], got {dt}"
        )));
    }
    if !(t_end > 0.0) {
        return Err(LvError::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    let record_stride = record_stride.max(1);

    let n = schedule.n;
    let steps = ((t_end / dt).round() as usize).max(1);
    let switch_step = schedule.step.map(|(_, t0)| (t0 / dt).round() as usize);

    let mut x = x0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let mut bx = vec![0.0; n];

    let mut times = Vec::with_capacity(steps / record_stride + 2);
    let mut states = Vec::with_capacity(steps / record_stride + 2);
    times.push(0.0);
    states.push(x.clone());

    for step in 0..steps {
        let b = match switch_step {
            Some(s0) if step >= s0 => schedule.final_matrix().entries(),
            _ => schedule.initial_matrix().entries(),
        };

        // dx_k = x_k (1 - x_k + (Bx)_k)
        let derivative = |state: &[f64], out: &mut [f64], bx: &mut [f64]| {
            b.mat_vec_into(state, bx);
            for i in 0..n {
                out[i] = state[i] * (1.0 - state[i] + bx[i]);
            }
        };

        derivative(&x, &mut k1, &mut bx);
        for i in 0..n {
            stage[i] = x[i] + 0.5 * dt * k1[i];
        }
        derivative(&stage, &mut k2, &mut bx);
        for i in 0..n {
            stage[i] = x[i] + 0.5 * dt * k2[i];
        }
        derivative(&stage, &mut k3, &mut bx);
        for i in 0..n {
            stage[i] = x[i] + dt * k3[i];
        }
        derivative(&stage, &mut k4, &mut bx);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let t = (step + 1) as f64 * dt;
        if let Some(component) = x.iter().position(|&v| !(v > 0.0)) {
            return Err(LvError::NonPositiveState { time: t, component });
        }
        if (step + 1) % record_stride == 0 || step + 1 == steps {
            times.push(t);
            states.push(x.clone());
        }
    }

    Ok(Trajectory { times, states, dt, scheme: Scheme::Rk4 })
}

/// Earliest recorded time from which the trajectory stays within `tol`
/// (sup-norm) of `target`, or `None` if the final state is still away.
pub fn detect_convergence(traj: &Trajectory, target: &[f64], tol: f64) -> Option<f64> {
    assert_eq!(
        target.len(),
        traj.states.first().map_or(0, Vec::len),
        "target dimension must match the trajectory"
    );
    let within = |state: &[f64]| {
        state.iter().zip(target).all(|(x, t)| (x - t).abs() <= tol)
    };
    let mut first_good: Option<usize> = None;
    for (i, state) in traj.states.iter().enumerate() {
        if within(state) {
            first_good.get_or_insert(i);
        } else {
            first_good = None;
        }
    }
    first_good.map(|i| traj.times[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_species() -> InteractionSchedule {
        InteractionSchedule::constant(1, EntryDist::Zero, 0, 0.0, 2.0).unwrap()
    }

    #[test]
    fn logistic_fixed_point_is_stationary() {
        let traj = integrate_lv(&single_species(), &[1.0], 5.0, 0.01).unwrap();
        for state in &traj.states {
            assert!((state[0] - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn logistic_converges_to_carrying_capacity() {
        let traj = integrate_lv(&single_species(), &[0.5], 20.0, 0.01).unwrap();
        assert!((traj.final_state()[0] - 1.0).abs() < 1e-6);
        assert!((traj.final_time() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn states_stay_positive() {
        let schedule =
            InteractionSchedule::constant(10, EntryDist::StandardGaussian, 11, 0.0, 2.5).unwrap();
        let traj = integrate_lv(&schedule, &[1.0; 10], 50.0, 0.01).unwrap();
        for state in &traj.states {
            assert!(state.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn oversized_step_reports_the_failing_component() {
        // x0 far above carrying capacity makes the RK4 update overshoot
        // through zero at dt = 0.1.
        let err = integrate_lv(&single_species(), &[50.0], 1.0, 0.1).unwrap_err();
        match err {
            LvError::NonPositiveState { component, .. } => assert_eq!(component, 0),
            other => panic!("expected NonPositiveState, got {other:?}"),
        }
    }

    #[test]
    fn input_validation() {
        let s = single_species();
        assert!(integrate_lv(&s, &[0.0], 1.0, 0.01).is_err());
        assert!(integrate_lv(&s, &[1.0], 1.0, 0.2).is_err());
        assert!(integrate_lv(&s, &[1.0], -1.0, 0.01).is_err());
        assert!(integrate_lv(&s, &[1.0, 1.0], 1.0, 0.01).is_err());
        assert!(InteractionSchedule::constant(3, EntryDist::Zero, 0, 0.0, 1.0).is_err());
        assert!(InteractionSchedule::step(3, EntryDist::Zero, 0, 0.0, 2.5, 1.2, 5.0).is_err());
        assert!(InteractionSchedule::step(3, EntryDist::Zero, 0, 0.0, 2.5, 1.5, -1.0).is_err());
    }

    #[test]
    fn schedule_switches_at_t0() {
        let s = InteractionSchedule::step(4, EntryDist::StandardGaussian, 7, 0.1, 2.5, 1.6, 3.0)
            .unwrap();
        assert_eq!(s.alpha_at(0.0), 2.5);
        assert_eq!(s.alpha_at(2.999), 2.5);
        assert_eq!(s.alpha_at(3.0), 1.6);
        assert_eq!(s.alpha_at(100.0), 1.6);
        assert_eq!(s.initial_matrix().alpha, 2.5);
        assert_eq!(s.final_matrix().alpha, 1.6);
        // Same raw A under both scalings.
        let b1 = s.initial_matrix().entries();
        let b2 = s.final_matrix().entries();
        let ratio = (b1[(0, 1)] - 0.1 / 4.0) / (b2[(0, 1)] - 0.1 / 4.0);
        assert!((ratio - 1.6 / 2.5).abs() < 1e-12);
    }

    #[test]
    fn convergence_detection() {
        let target = vec![1.0];
        let constant = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![vec![1.0], vec![1.0], vec![1.0]],
            dt: 1.0,
            scheme: Scheme::Rk4,
        };
        assert_eq!(detect_convergence(&constant, &target, 1e-12), Some(0.0));

        let traj = integrate_lv(&single_species(), &[0.4], 30.0, 0.01).unwrap();
        let t = detect_convergence(&traj, &target, 1e-3).expect("logistic converges");
        assert!(t > 0.0 && t < 30.0);

        let away = detect_convergence(&traj, &[5.0], 1e-3);
        assert_eq!(away, None);
    }
}
