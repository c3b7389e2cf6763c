//! Yaw–pitch manipulator model shared by the leader and follower robots.
//!
//! The arm is a vertical yaw joint carrying a horizontal pitch joint whose
//! link is dominated by a point mass at the handle. Angles are kept
//! unwrapped so that reflections about an initial condition stay well
//! defined over long runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// State magnitude above which an integration step is reported as divergent.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("integration diverged: |{component}| = {value:e} exceeds bound {bound:e}")]
    Divergence {
        component: &'static str,
        value: f64,
        bound: f64,
    },
    #[error("invalid manipulator parameter: {0}")]
    InvalidParams(String),
}

/// Physical constants of one manipulator.
///
/// `ext_torque_sign` is the sign with which the external torque of each
/// joint enters its equation of motion. The default `[1, -1]` places the
/// yaw disturbance as `tau1 + tau_e1` and the pitch disturbance as
/// `tau2 - tau_e2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManipulatorParams {
    /// Handle point mass (kg).
    pub point_mass: f64,
    /// Distance from the pitch axis to the point mass (m).
    pub link_length: f64,
    /// Yaw-axis inertia of the first link and motor (kg·m²).
    pub yaw_inertia: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Viscous friction per joint (N·m·s/rad).
    pub friction: [f64; 2],
    pub ext_torque_sign: [f64; 2],
}

impl Default for ManipulatorParams {
    fn default() -> Self {
        Self {
            point_mass: 0.5,
            link_length: 0.2,
            yaw_inertia: 0.01,
            gravity: 9.81,
            friction: [0.0, 0.0],
            ext_torque_sign: [1.0, -1.0],
        }
    }
}

impl ManipulatorParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |what: &str| Err(DynamicsError::InvalidParams(what.to_string()));
        if !(self.point_mass > 0.0 && self.point_mass.is_finite()) {
            return bad("point_mass must be positive");
        }
        if !(self.link_length > 0.0 && self.link_length.is_finite()) {
            return bad("link_length must be positive");
        }
        if !(self.yaw_inertia > 0.0 && self.yaw_inertia.is_finite()) {
            return bad("yaw_inertia must be positive");
        }
        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            return bad("gravity must be non-negative");
        }
        if self.friction.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
            return bad("friction must be non-negative");
        }
        if self.ext_torque_sign.iter().any(|s| s.abs() != 1.0) {
            return bad("ext_torque_sign entries must be +1 or -1");
        }
        Ok(())
    }

    /// `m_p * l2^2`, the pitch inertia.
    pub fn pitch_inertia(&self) -> f64 {
        self.point_mass * self.link_length * self.link_length
    }

    /// Yaw inertia seen at pitch angle `theta2`; bounded below by `yaw_inertia`.
    pub fn effective_yaw_inertia(&self, theta2: f64) -> f64 {
        let c = theta2.cos();
        self.pitch_inertia() * c * c + self.yaw_inertia
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState {
    pub theta1: f64,
    pub theta2: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl JointState {
    pub fn at_rest(theta1: f64, theta2: f64) -> Self {
        Self {
            theta1,
            theta2,
            omega1: 0.0,
            omega2: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.is_finite()
            && self.theta2.is_finite()
            && self.omega1.is_finite()
            && self.omega2.is_finite()
    }

    fn components(&self) -> [(&'static str, f64); 4] {
        [
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
        ]
    }
}

/// Torque on each joint; used for motor commands and for external torques.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TorquePair {
    pub tau1: f64,
    pub tau2: f64,
}

impl TorquePair {
    pub const ZERO: TorquePair = TorquePair {
        tau1: 0.0,
        tau2: 0.0,
    };

    pub fn new(tau1: f64, tau2: f64) -> Self {
        Self { tau1, tau2 }
    }
}

/// Joint accelerations for the given state and torques. The inertia matrix is
/// diagonal and its yaw entry never drops below `yaw_inertia`, so this cannot fail.
pub fn forward_accel(
    state: &JointState,
    tau_motor: TorquePair,
    tau_ext: TorquePair,
    params: &ManipulatorParams,
) -> (f64, f64) {
    let (s, c) = state.theta2.sin_cos();
    let ml2 = params.pitch_inertia();
    let [b1, b2] = params.friction;
    let [e1, e2] = params.ext_torque_sign;

    let coriolis = 2.0 * ml2 * c * s * state.omega1 * state.omega2;
    let rhs1 = tau_motor.tau1 + e1 * tau_ext.tau1 - b1 * state.omega1 + coriolis;
    let alpha1 = rhs1 / (ml2 * c * c + params.yaw_inertia);

    let centrifugal = ml2 * c * s * state.omega1 * state.omega1;
    let rhs2 = tau_motor.tau2 + e2 * tau_ext.tau2
        - b2 * state.omega2
        - centrifugal
        - gravity_torque(state.theta2, params);
    let alpha2 = rhs2 / ml2;

    (alpha1, alpha2)
}

/// Torque the pitch motor must add to hold the link against gravity.
pub fn gravity_torque(theta2: f64, params: &ManipulatorParams) -> f64 {
    params.point_mass * params.gravity * params.link_length * theta2.cos()
}

/// Kinetic plus potential energy (J), potential measured from the horizontal.
pub fn total_energy(state: &JointState, params: &ManipulatorParams) -> f64 {
    let kinetic = 0.5 * params.effective_yaw_inertia(state.theta2) * state.omega1 * state.omega1
        + 0.5 * params.pitch_inertia() * state.omega2 * state.omega2;
    let potential =
        params.point_mass * params.gravity * params.link_length * state.theta2.sin();
    kinetic + potential
}

fn derivative(
    state: &JointState,
    tau_motor: TorquePair,
    tau_ext: TorquePair,
    params: &ManipulatorParams,
    pitch_locked: bool,
) -> JointState {
    let (a1, a2) = forward_accel(state, tau_motor, tau_ext, params);
    if pitch_locked {
        return JointState {
            theta1: state.omega1,
            theta2: 0.0,
            omega1: a1,
            omega2: 0.0,
        };
    }
    JointState {
        theta1: state.omega1,
        theta2: state.omega2,
        omega1: a1,
        omega2: a2,
    }
}

fn offset(state: &JointState, d: &JointState, h: f64) -> JointState {
    JointState {
        theta1: state.theta1 + h * d.theta1,
        theta2: state.theta2 + h * d.theta2,
        omega1: state.omega1 + h * d.omega1,
        omega2: state.omega2 + h * d.omega2,
    }
}

/// One classical Runge–Kutta step with torques held over the step.
pub fn step_rk4(
    state: &JointState,
    tau_motor: TorquePair,
    tau_ext: TorquePair,
    params: &ManipulatorParams,
    dt: f64,
) -> Result<JointState, DynamicsError> {
    step_rk4_bounded(state, tau_motor, tau_ext, params, dt, DEFAULT_DIVERGENCE_BOUND)
}

pub fn step_rk4_bounded(
    state: &JointState,
    tau_motor: TorquePair,
    tau_ext: TorquePair,
    params: &ManipulatorParams,
    dt: f64,
    bound: f64,
) -> Result<JointState, DynamicsError> {
    step_rk4_constrained(state, tau_motor, tau_ext, params, dt, bound, false)
}

/// RK4 step that can hold the pitch joint mechanically fixed, leaving a
/// one-degree-of-freedom yaw system. A locked joint must start at rest.
pub fn step_rk4_constrained(
    state: &JointState,
    tau_motor: TorquePair,
    tau_ext: TorquePair,
    params: &ManipulatorParams,
    dt: f64,
    bound: f64,
    pitch_locked: bool,
) -> Result<JointState, DynamicsError> {
    debug_assert!(dt > 0.0);
    debug_assert!(!pitch_locked || state.omega2 == 0.0);
    let lock = pitch_locked;
    let k1 = derivative(state, tau_motor, tau_ext, params, lock);
    let k2 = derivative(&offset(state, &k1, 0.5 * dt), tau_motor, tau_ext, params, lock);
    let k3 = derivative(&offset(state, &k2, 0.5 * dt), tau_motor, tau_ext, params, lock);
    let k4 = derivative(&offset(state, &k3, dt), tau_motor, tau_ext, params, lock);

    let w = dt / 6.0;
    let combine = |x: f64, a: f64, b: f64, c: f64, d: f64| x + w * (a + 2.0 * b + 2.0 * c + d);
    let next = JointState {
        theta1: combine(state.theta1, k1.theta1, k2.theta1, k3.theta1, k4.theta1),
        theta2: combine(state.theta2, k1.theta2, k2.theta2, k3.theta2, k4.theta2),
        omega1: combine(state.omega1, k1.omega1, k2.omega1, k3.omega1, k4.omega1),
        omega2: combine(state.omega2, k1.omega2, k2.omega2, k3.omega2, k4.omega2),
    };

    for (component, value) in next.components() {
        if !value.is_finite() || value.abs() > bound {
            return Err(DynamicsError::Divergence {
                component,
                value,
                bound,
            });
        }
    }
    Ok(next)
}
