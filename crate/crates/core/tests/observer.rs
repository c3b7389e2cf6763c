use tbt_core::controller::{estimate_reaction_torque, ObserverState};
use tbt_core::dynamics::{gravity_torque, step_rk4};
use tbt_core::{JointState, ManipulatorParams, TorquePair, CONTROL_PERIOD, PHYSICS_STEP};

/// Run a robot under piecewise-constant motor torque and a constant
/// external torque, feeding the observer once per control tick.
fn simulate(
    params: &ManipulatorParams,
    ext: TorquePair,
    motor: impl Fn(f64, &JointState) -> TorquePair,
    seconds: f64,
) -> Vec<(f64, TorquePair)> {
    let wc = 30.0;
    let mut obs = ObserverState::new(wc);
    let mut s = JointState::at_rest(0.1, 0.2);
    let mut applied = TorquePair::ZERO;
    let mut out = Vec::new();
    let ticks = (seconds / CONTROL_PERIOD).round() as usize;
    let sub = (CONTROL_PERIOD / PHYSICS_STEP).round() as usize;
    for k in 0..ticks {
        let t = k as f64 * CONTROL_PERIOD;
        let (next, est) = estimate_reaction_torque(&s, applied, params, &obs, CONTROL_PERIOD);
        obs = next;
        out.push((t, est));
        applied = motor(t, &s);
        for _ in 0..sub {
            s = step_rk4(&s, applied, ext, params, PHYSICS_STEP).unwrap();
        }
    }
    out
}

fn hold_pitch(params: ManipulatorParams) -> impl Fn(f64, &JointState) -> TorquePair {
    move |_, s| TorquePair::new(0.0, gravity_torque(s.theta2, &params) - 2.0 * (s.theta2 - 0.2) - 0.3 * s.omega2)
}

#[test]
fn step_disturbance_is_recovered_within_one_percent() {
    let p = ManipulatorParams::default();
    for (axis, ext) in [(0, TorquePair::new(0.5, 0.0)), (1, TorquePair::new(0.0, 0.5))] {
        let trace = simulate(&p, ext, hold_pitch(p), 1.0);
        let settle = 5.0 / 30.0;
        for (t, est) in trace.iter().filter(|(t, _)| *t >= settle + CONTROL_PERIOD) {
            let got = if axis == 0 { est.tau1 } else { est.tau2 };
            assert!((got - 0.5).abs() <= 0.005, "axis {axis} t {t}: {got}");
        }
    }
}

#[test]
fn no_disturbance_gives_near_zero_estimate() {
    let p = ManipulatorParams::default();
    let drive = move |t: f64, s: &JointState| {
        TorquePair::new(
            0.05 * (2.0 * t).sin(),
            gravity_torque(s.theta2, &p) + 0.1 * (3.0 * t).cos() - 0.5 * s.theta2,
        )
    };
    let trace = simulate(&p, TorquePair::ZERO, drive, 5.0);
    let worst = trace
        .iter()
        .map(|(_, e)| e.tau1.abs().max(e.tau2.abs()))
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-3, "worst {worst:e}");
}

#[test]
fn first_sample_is_zero() {
    let p = ManipulatorParams::default();
    let trace = simulate(&p, TorquePair::new(0.3, 0.3), hold_pitch(p), 0.1);
    assert_eq!(trace[0].1, TorquePair::ZERO);
}
