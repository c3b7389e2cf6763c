//! Four-channel force-reflecting bilateral controller with a momentum-based
//! reaction-torque observer, one instance per robot.

use serde::{Deserialize, Serialize};

use crate::dynamics::{gravity_torque, JointState, ManipulatorParams, TorquePair};

/// Which end of the teleoperation link a controller drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Leader,
    Follower,
}

impl Side {
    /// Sign applied to the local force estimate before it enters the force
    /// channel. The follower reports the reaction of its environment so that
    /// the ideal response is equal forces on both sides.
    pub fn force_sign(self) -> f64 {
        match self {
            Side::Leader => 1.0,
            Side::Follower => -1.0,
        }
    }

    pub fn peer(self) -> Side {
        match self {
            Side::Leader => Side::Follower,
            Side::Follower => Side::Leader,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Leader => "leader",
            Side::Follower => "follower",
        }
    }
}

/// The four signals exchanged per direction per tick, in wire order
/// `[theta1, theta2, tau_e1, tau_e2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SignalVector {
    pub theta1: f64,
    pub theta2: f64,
    pub tau_e1: f64,
    pub tau_e2: f64,
}

impl SignalVector {
    pub fn new(theta1: f64, theta2: f64, tau_e1: f64, tau_e2: f64) -> Self {
        Self {
            theta1,
            theta2,
            tau_e1,
            tau_e2,
        }
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.theta1, self.theta2, self.tau_e1, self.tau_e2]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerGains {
    /// Position gains (N·m/rad).
    pub kp: [f64; 2],
    /// Local velocity damping (N·m·s/rad).
    pub kd: [f64; 2],
    /// Force-channel gains (dimensionless).
    pub kf: [f64; 2],
    /// Motor saturation per joint (N·m).
    pub torque_limit: [f64; 2],
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp: [5.0, 5.0],
            kd: [0.25, 0.25],
            kf: [1.0, 1.0],
            torque_limit: [1.3, 2.4],
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), String> {
        for i in 0..2 {
            if !(self.kp[i] > 0.0 && self.kp[i].is_finite()) {
                return Err(format!("kp[{i}] must be positive"));
            }
            if !(self.kd[i] >= 0.0 && self.kd[i].is_finite()) {
                return Err(format!("kd[{i}] must be non-negative"));
            }
            if !(self.kf[i] >= 0.0 && self.kf[i].is_finite()) {
                return Err(format!("kf[{i}] must be non-negative"));
            }
            if !(self.torque_limit[i] > 0.0) {
                return Err(format!("torque_limit[{i}] must be positive"));
            }
        }
        Ok(())
    }
}

/// Momentum observer state.
///
/// The residual `r_i = wc * (p_i - p_i(0) - integral)` follows the external
/// torque (as it enters joint `i`) through a first-order lag with cutoff
/// `wc`. `integral` accumulates the modelled momentum rate plus the
/// residual itself; the state-dependent part is integrated with the
/// trapezoidal rule across ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverState {
    pub cutoff: f64,
    pub initial_momentum: [f64; 2],
    pub filtered_momentum: [f64; 2],
    pub tau_e_hat: [f64; 2],
    residual: [f64; 2],
    prev_nonlinear: [f64; 2],
    initialized: bool,
}

impl ObserverState {
    pub fn new(cutoff: f64) -> Self {
        assert!(cutoff > 0.0, "observer cutoff must be positive");
        Self {
            cutoff,
            initial_momentum: [0.0; 2],
            filtered_momentum: [0.0; 2],
            tau_e_hat: [0.0; 2],
            residual: [0.0; 2],
            prev_nonlinear: [0.0; 2],
            initialized: false,
        }
    }

    pub fn estimate(&self) -> TorquePair {
        TorquePair::new(self.tau_e_hat[0], self.tau_e_hat[1])
    }
}

/// Generalized momentum of each joint.
pub fn joint_momentum(state: &JointState, params: &ManipulatorParams) -> [f64; 2] {
    [
        params.effective_yaw_inertia(state.theta2) * state.omega1,
        params.pitch_inertia() * state.omega2,
    ]
}

/// State-dependent part of the momentum rate, so that
/// `dp_i/dt = tau_i + nonlinear_i + sign_i * tau_e_i`.
/// The Coriolis term of the yaw joint cancels against the derivative of
/// its configuration-dependent inertia.
pub fn momentum_rate_bias(state: &JointState, params: &ManipulatorParams) -> [f64; 2] {
    let (s, c) = state.theta2.sin_cos();
    let ml2 = params.pitch_inertia();
    [
        -params.friction[0] * state.omega1,
        -params.friction[1] * state.omega2
            - ml2 * c * s * state.omega1 * state.omega1
            - gravity_torque(state.theta2, params),
    ]
}

/// Advance the observer by one control period.
///
/// `tau_cmd` is the motor torque that was actually applied since the
/// previous call. The first call latches the initial momentum and returns a
/// zero estimate.
pub fn estimate_reaction_torque(
    state: &JointState,
    tau_cmd: TorquePair,
    params: &ManipulatorParams,
    obs: &ObserverState,
    dt: f64,
) -> (ObserverState, TorquePair) {
    debug_assert!(dt > 0.0);
    let mut next = *obs;
    let momentum = joint_momentum(state, params);
    let bias = momentum_rate_bias(state, params);

    if !obs.initialized {
        next.initialized = true;
        next.initial_momentum = momentum;
        next.filtered_momentum = [0.0; 2];
        next.residual = [0.0; 2];
        next.prev_nonlinear = bias;
        next.tau_e_hat = [0.0; 2];
        return (next, TorquePair::ZERO);
    }

    let tau = [tau_cmd.tau1, tau_cmd.tau2];
    for i in 0..2 {
        let rate = tau[i] + 0.5 * (obs.prev_nonlinear[i] + bias[i]) + obs.residual[i];
        next.filtered_momentum[i] = obs.filtered_momentum[i] + dt * rate;
        next.residual[i] =
            obs.cutoff * (momentum[i] - obs.initial_momentum[i] - next.filtered_momentum[i]);
        next.tau_e_hat[i] = params.ext_torque_sign[i] * next.residual[i];
    }
    next.prev_nonlinear = bias;
    (next, next.estimate())
}

/// Four-channel control law, applied per joint:
///
/// `tau = kp (theta_remote - theta_local) - kd omega_local + kf (f_remote - f_local)`
///
/// where `f` is the force slot of each side's transmitted signal vector (already
/// framed with [`Side::force_sign`]). Gravity compensation and saturation are
/// applied by [`BilateralController`].
pub fn four_channel_command(
    local: &SignalVector,
    local_rates: [f64; 2],
    remote: &SignalVector,
    gains: &ControllerGains,
) -> TorquePair {
    let tau1 = gains.kp[0] * (remote.theta1 - local.theta1) - gains.kd[0] * local_rates[0]
        + gains.kf[0] * (remote.tau_e1 - local.tau_e1);
    let tau2 = gains.kp[1] * (remote.theta2 - local.theta2) - gains.kd[1] * local_rates[1]
        + gains.kf[1] * (remote.tau_e2 - local.tau_e2);
    TorquePair::new(tau1, tau2)
}

/// One robot's controller: observer, force framing, control law, local
/// gravity compensation and motor saturation.
#[derive(Debug, Clone)]
pub struct BilateralController {
    pub side: Side,
    pub gains: ControllerGains,
    pub params: ManipulatorParams,
    pub gravity_comp: bool,
    observer: ObserverState,
    last_applied: TorquePair,
}

impl BilateralController {
    pub fn new(
        side: Side,
        gains: ControllerGains,
        params: ManipulatorParams,
        observer_cutoff: f64,
        gravity_comp: bool,
    ) -> Self {
        Self {
            side,
            gains,
            params,
            gravity_comp,
            observer: ObserverState::new(observer_cutoff),
            last_applied: TorquePair::ZERO,
        }
    }

    /// Update the observer with the current measurement and return the
    /// signal vector this side transmits.
    pub fn observe(&mut self, state: &JointState, dt: f64) -> SignalVector {
        let (obs, _) =
            estimate_reaction_torque(state, self.last_applied, &self.params, &self.observer, dt);
        self.observer = obs;
        self.outgoing(state)
    }

    /// Zero the pitch channel of the observer, used when the pitch joint is
    /// mechanically locked.
    pub fn clear_pitch_estimate(&mut self) {
        self.observer.tau_e_hat[1] = 0.0;
        self.observer.residual[1] = 0.0;
        self.observer.filtered_momentum[1] = 0.0;
    }

    pub fn outgoing(&self, state: &JointState) -> SignalVector {
        let k = self.side.force_sign();
        SignalVector::new(
            state.theta1,
            state.theta2,
            k * self.observer.tau_e_hat[0],
            k * self.observer.tau_e_hat[1],
        )
    }

    pub fn estimate(&self) -> TorquePair {
        self.observer.estimate()
    }

    /// Compute and latch the motor command for the coming tick.
    pub fn command(
        &mut self,
        state: &JointState,
        local: &SignalVector,
        remote: &SignalVector,
    ) -> TorquePair {
        let mut tau = four_channel_command(
            local,
            [state.omega1, state.omega2],
            remote,
            &self.gains,
        );
        if self.gravity_comp {
            tau.tau2 += gravity_torque(state.theta2, &self.params);
        }
        let [l1, l2] = self.gains.torque_limit;
        tau.tau1 = tau.tau1.clamp(-l1, l1);
        tau.tau2 = tau.tau2.clamp(-l2, l2);
        self.last_applied = tau;
        tau
    }

    pub fn last_applied(&self) -> TorquePair {
        self.last_applied
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracking_achieved_gives_zero_command() {
        let g = ControllerGains::default();
        let v = SignalVector::new(0.3, -0.2, 0.05, 0.1);
        let tau = four_channel_command(&v, [0.0, 0.0], &v, &g);
        assert_eq!(tau, TorquePair::ZERO);
    }

    #[test]
    fn position_channel_contribution() {
        let g = ControllerGains::default();
        let local = SignalVector::default();
        let remote = SignalVector::new(0.1, 0.0, 0.0, 0.0);
        let tau = four_channel_command(&local, [0.0, 0.0], &remote, &g);
        assert!((tau.tau1 - 0.5).abs() < 1e-15);
        assert_eq!(tau.tau2, 0.0);
    }

    #[test]
    fn damping_and_force_channel() {
        let g = ControllerGains::default();
        let local = SignalVector::new(0.0, 0.0, 0.2, 0.0);
        let remote = SignalVector::new(0.0, 0.0, -0.1, 0.4);
        let tau = four_channel_command(&local, [1.0, -2.0], &remote, &g);
        assert!((tau.tau1 - (-0.25 - 0.3)).abs() < 1e-15);
        assert!((tau.tau2 - (0.5 + 0.4)).abs() < 1e-15);
    }

    #[test]
    fn gravity_compensation_and_saturation() {
        let p = ManipulatorParams::default();
        let mut c = BilateralController::new(Side::Leader, ControllerGains::default(), p, 30.0, true);
        let s = JointState::default();
        let v = c.outgoing(&s);
        let tau = c.command(&s, &v, &v);
        assert!((tau.tau2 - 0.981).abs() < 1e-12);

        let far = SignalVector::new(100.0, -100.0, 0.0, 0.0);
        let tau = c.command(&s, &v, &far);
        assert_eq!(tau.tau1, 1.3);
        assert_eq!(tau.tau2, -2.4);
        assert_eq!(c.last_applied(), tau);
    }

    #[test]
    fn follower_reports_reaction() {
        let p = ManipulatorParams::default();
        let mut c = BilateralController::new(Side::Follower, ControllerGains::default(), p, 30.0, false);
        c.observer.tau_e_hat = [0.25, -0.5];
        let v = c.outgoing(&JointState::at_rest(0.1, 0.2));
        assert_eq!(v, SignalVector::new(0.1, 0.2, -0.25, 0.5));
    }

    #[test]
    fn first_observer_call_latches_momentum() {
        let p = ManipulatorParams::default();
        let s = JointState {
            theta1: 0.0,
            theta2: 0.3,
            omega1: 1.0,
            omega2: -0.5,
        };
        let (obs, est) = estimate_reaction_torque(&s, TorquePair::ZERO, &p, &ObserverState::new(30.0), 0.02);
        assert_eq!(est, TorquePair::ZERO);
        assert_eq!(obs.initial_momentum, joint_momentum(&s, &p));
    }
}
