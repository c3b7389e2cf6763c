//! External torques: a scripted operator on the leader handle and a
//! spring-damper wall in front of the follower.

use serde::{Deserialize, Serialize};

use crate::dynamics::{JointState, ManipulatorParams, TorquePair};

/// `amplitude * sin(2 pi (t - start) / period)` for `start <= t < stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidSegment {
    pub amplitude: f64,
    pub period: f64,
    pub start: f64,
    pub stop: f64,
}

impl SinusoidSegment {
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.start && t < self.stop
    }

    pub fn value(&self, t: f64) -> f64 {
        if !self.is_active(t) {
            return 0.0;
        }
        let phase = std::f64::consts::TAU * (t - self.start) / self.period;
        self.amplitude * phase.sin()
    }

    pub fn rate(&self, t: f64) -> f64 {
        if !self.is_active(t) {
            return 0.0;
        }
        let w = std::f64::consts::TAU / self.period;
        self.amplitude * w * (w * (t - self.start)).cos()
    }

    fn validate(&self, axis: &str) -> Result<(), String> {
        let finite = [self.amplitude, self.period, self.start, self.stop]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.period <= 0.0 || self.start >= self.stop {
            return Err(format!(
                "operator.{axis}: need finite values, period > 0 and start < stop"
            ));
        }
        Ok(())
    }
}

/// Scripted operator: tracks `origin + segment(t)` on each axis through a
/// spring-damper hand impedance while the segment is active, and lets go
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorProfile {
    pub yaw: SinusoidSegment,
    pub pitch: SinusoidSegment,
    /// Hand stiffness per axis (N·m/rad).
    pub stiffness: [f64; 2],
    /// Hand damping per axis (N·m·s/rad).
    pub damping: [f64; 2],
}

impl Default for OperatorProfile {
    fn default() -> Self {
        Self {
            yaw: SinusoidSegment {
                amplitude: -0.2,
                period: 15.0,
                start: 25.0,
                stop: 55.0,
            },
            pitch: SinusoidSegment {
                amplitude: 0.1,
                period: 25.0,
                start: 0.0,
                stop: 25.0,
            },
            stiffness: [2.0, 2.0],
            damping: [0.2, 0.2],
        }
    }
}

impl OperatorProfile {
    pub fn validate(&self) -> Result<(), String> {
        self.yaw.validate("yaw")?;
        self.pitch.validate("pitch")?;
        for i in 0..2 {
            if !(self.stiffness[i] >= 0.0 && self.damping[i] >= 0.0) {
                return Err("operator stiffness and damping must be non-negative".into());
            }
        }
        Ok(())
    }

    /// Reference angles at time `t`.
    pub fn reference(&self, t: f64, origin: [f64; 2]) -> [f64; 2] {
        [origin[0] + self.yaw.value(t), origin[1] + self.pitch.value(t)]
    }
}

/// Map a physically applied torque into the external-torque slot of the
/// equations of motion.
pub fn to_model_frame(physical: [f64; 2], params: &ManipulatorParams) -> TorquePair {
    TorquePair::new(
        params.ext_torque_sign[0] * physical[0],
        params.ext_torque_sign[1] * physical[1],
    )
}

/// Operator torque on the leader, in the model's external-torque frame.
pub fn operator_torque(
    t: f64,
    profile: &OperatorProfile,
    leader: &JointState,
    origin: [f64; 2],
    params: &ManipulatorParams,
) -> TorquePair {
    let segs = [&profile.yaw, &profile.pitch];
    let theta = [leader.theta1, leader.theta2];
    let omega = [leader.omega1, leader.omega2];
    let mut phys = [0.0; 2];
    for i in 0..2 {
        if segs[i].is_active(t) {
            let r = origin[i] + segs[i].value(t);
            let rd = segs[i].rate(t);
            phys[i] = profile.stiffness[i] * (r - theta[i]) + profile.damping[i] * (rd - omega[i]);
        }
    }
    to_model_frame(phys, params)
}

/// One-sided contact on one axis. A wall at a negative angle stops motion
/// below it; at zero or a positive angle it stops motion above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallAxis {
    pub enabled: bool,
    /// Contact angle (rad).
    pub angle: f64,
    pub stiffness: f64,
    pub damping: f64,
}

impl WallAxis {
    fn normal(&self) -> f64 {
        if self.angle < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Depth past the contact angle (positive when in contact).
    pub fn penetration(&self, theta: f64) -> f64 {
        self.normal() * (theta - self.angle)
    }

    /// Restoring torque; never pulls the link into the wall.
    pub fn torque(&self, theta: f64, omega: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let depth = self.penetration(theta);
        if depth <= 0.0 {
            return 0.0;
        }
        let push = (self.stiffness * depth + self.damping * self.normal() * omega).max(0.0);
        -self.normal() * push
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WallModel {
    pub yaw: WallAxis,
    pub pitch: WallAxis,
}

impl Default for WallModel {
    fn default() -> Self {
        Self {
            yaw: WallAxis {
                enabled: false,
                angle: (-5.0f64).to_radians(),
                stiffness: 200.0,
                damping: 2.0,
            },
            pitch: WallAxis {
                enabled: false,
                angle: 3.0f64.to_radians(),
                stiffness: 200.0,
                damping: 2.0,
            },
        }
    }
}

impl WallModel {
    pub fn set_enabled(&mut self, on: bool) {
        self.yaw.enabled = on;
        self.pitch.enabled = on;
    }

    pub fn any_enabled(&self) -> bool {
        self.yaw.enabled || self.pitch.enabled
    }

    pub fn validate(&self) -> Result<(), String> {
        for w in [&self.yaw, &self.pitch] {
            if !(w.stiffness >= 0.0 && w.damping >= 0.0 && w.angle.is_finite()) {
                return Err("wall stiffness and damping must be non-negative".into());
            }
        }
        Ok(())
    }
}

/// Contact torque on the follower, in the model's external-torque frame.
pub fn wall_torque(follower: &JointState, wall: &WallModel, params: &ManipulatorParams) -> TorquePair {
    to_model_frame(
        [
            wall.yaw.torque(follower.theta1, follower.omega1),
            wall.pitch.torque(follower.theta2, follower.omega2),
        ],
        params,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_idle_before_start() {
        let mut prof = OperatorProfile::default();
        prof.pitch.start = 1.0;
        let s = JointState::at_rest(0.3, -0.2);
        let tau = operator_torque(0.5, &prof, &s, [0.0, 0.0], &ManipulatorParams::default());
        assert_eq!(tau, TorquePair::ZERO);
    }

    #[test]
    fn operator_spring_and_sign_convention() {
        let prof = OperatorProfile::default();
        let p = ManipulatorParams::default();
        // t = 0: pitch reference 0, rate A w; leader displaced by 0.1
        let s = JointState::at_rest(0.0, 0.1);
        let tau = operator_torque(0.0, &prof, &s, [0.0, 0.0], &p);
        let w = std::f64::consts::TAU / 25.0;
        let phys = 2.0 * (0.0 - 0.1) + 0.2 * (0.1 * w);
        assert_eq!(tau.tau1, 0.0);
        assert!((tau.tau2 + phys).abs() < 1e-15);
    }

    #[test]
    fn reference_follows_segments() {
        let prof = OperatorProfile::default();
        let r = prof.reference(25.0 + 3.75, [0.1, 0.0]);
        assert!((r[0] - (0.1 - 0.2)).abs() < 1e-12);
        assert_eq!(r[1], 0.0);
    }

    #[test]
    fn wall_is_one_sided() {
        let axis = WallAxis {
            enabled: true,
            angle: -0.1,
            stiffness: 50.0,
            damping: 0.0,
        };
        assert_eq!(axis.torque(-0.1, -1.0), 0.0);
        assert_eq!(axis.torque(0.0, -1.0), 0.0);
        assert!((axis.torque(-0.11, 0.0) - 0.5).abs() < 1e-12);
        let upper = WallAxis { angle: 0.1, ..axis };
        assert!((upper.torque(0.11, 0.0) + 0.5).abs() < 1e-12);
        // moving out of the wall fast never pulls
        let damped = WallAxis { damping: 10.0, ..axis };
        assert_eq!(damped.torque(-0.101, 1.0), 0.0);
    }

    #[test]
    fn disabled_wall_does_nothing() {
        let w = WallModel::default();
        let s = JointState::at_rest(-1.0, 1.0);
        assert_eq!(wall_torque(&s, &w, &ManipulatorParams::default()), TorquePair::ZERO);
    }

    #[test]
    fn defaults_place_walls_at_minus_five_and_plus_three_degrees() {
        let w = WallModel::default();
        assert!((w.yaw.angle.to_degrees() + 5.0).abs() < 1e-12);
        assert!((w.pitch.angle.to_degrees() - 3.0).abs() < 1e-12);
        assert!(OperatorProfile::default().validate().is_ok());
    }
}
