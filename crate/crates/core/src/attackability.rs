//! Sampled invariance test for diagonal state/input transforms of the arm
//! dynamics. A candidate that leaves the equations of motion form-invariant
//! is an automorphism, and an affine injection built from it cannot be
//! seen from the other end of the link.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{forward_accel, gravity_torque, JointState, ManipulatorParams, TorquePair};

/// `phi_x` acts on angles as `theta_i -> x_i (theta_i - c_i) + c_i` and on
/// rates as `omega_i -> x_i omega_i`; `phi_u` scales motor torques.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateTransform {
    pub phi_x: [f64; 2],
    pub phi_u: [f64; 2],
    pub centers: [f64; 2],
}

impl CandidateTransform {
    /// Same diagonal on states and torques, centred at the origin.
    pub fn diagonal(a: f64, b: f64) -> Self {
        Self {
            phi_x: [a, b],
            phi_u: [a, b],
            centers: [0.0, 0.0],
        }
    }

    pub fn with_centers(mut self, centers: [f64; 2]) -> Self {
        self.centers = centers;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.phi_x.iter().chain(&self.phi_u).all(|&v| v != 0.0 && v.is_finite())
            && self.centers.iter().all(|c| c.is_finite())
    }

    pub fn map_state(&self, x: &JointState) -> JointState {
        let [a, b] = self.phi_x;
        let [c1, c2] = self.centers;
        JointState {
            theta1: a * (x.theta1 - c1) + c1,
            theta2: b * (x.theta2 - c2) + c2,
            omega1: a * x.omega1,
            omega2: b * x.omega2,
        }
    }

    pub fn map_torque(&self, t: TorquePair) -> TorquePair {
        TorquePair::new(self.phi_u[0] * t.tau1, self.phi_u[1] * t.tau2)
    }
}

impl fmt::Display for CandidateTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "diag({}, {})", self.phi_x[0], self.phi_x[1])?;
        if self.phi_u != self.phi_x {
            write!(f, " / u diag({}, {})", self.phi_u[0], self.phi_u[1])?;
        }
        Ok(())
    }
}

/// Box the random states and torques are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingBox {
    pub theta: [f64; 2],
    pub omega: [f64; 2],
    pub tau: [f64; 2],
}

impl Default for SamplingBox {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            theta: [-PI, PI],
            omega: [-5.0, 5.0],
            tau: [-2.0, 2.0],
        }
    }
}

impl SamplingBox {
    /// The box shrunk about its centre by `factor` in every coordinate.
    pub fn scaled(&self, factor: f64) -> Self {
        let shrink = |[lo, hi]: [f64; 2]| {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo) * factor;
            [mid - half, mid + half]
        };
        Self {
            theta: shrink(self.theta),
            omega: shrink(self.omega),
            tau: shrink(self.tau),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub n_samples: usize,
    pub tol: f64,
    pub seed: u64,
    pub bounds: SamplingBox,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            tol: 1e-9,
            seed: 0,
            bounds: SamplingBox::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutomorphismReport {
    pub pass: bool,
    /// Largest acceleration mismatch over all samples (rad/s²).
    pub max_residual: f64,
    /// Largest mismatch on each joint separately.
    pub joint_residual: [f64; 2],
    pub samples: usize,
    pub gravity_compensated: bool,
}

fn uniform(rng: &mut ChaCha20Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

fn sample(rng: &mut ChaCha20Rng, b: &SamplingBox) -> (JointState, TorquePair) {
    let x = JointState {
        theta1: uniform(rng, b.theta),
        theta2: uniform(rng, b.theta),
        omega1: uniform(rng, b.omega),
        omega2: uniform(rng, b.omega),
    };
    let u = TorquePair::new(uniform(rng, b.tau), uniform(rng, b.tau));
    (x, u)
}

/// Accelerations with the gravity term optionally cancelled by the motor.
fn accel(x: &JointState, u: TorquePair, params: &ManipulatorParams, gravity_comp: bool) -> [f64; 2] {
    let mut u = u;
    if gravity_comp {
        u.tau2 += gravity_torque(x.theta2, params);
    }
    let (a1, a2) = forward_accel(x, u, TorquePair::ZERO, params);
    [a1, a2]
}

/// Per-joint residual `|a~_i - x_i a_i|` for one sample.
fn residual(
    cand: &CandidateTransform,
    x: &JointState,
    u: TorquePair,
    params: &ManipulatorParams,
    gravity_comp: bool,
) -> [f64; 2] {
    let a = accel(x, u, params, gravity_comp);
    let mapped = accel(&cand.map_state(x), cand.map_torque(u), params, gravity_comp);
    [
        (mapped[0] - cand.phi_x[0] * a[0]).abs(),
        (mapped[1] - cand.phi_x[1] * a[1]).abs(),
    ]
}

fn report(
    joint_residual: [f64; 2],
    samples: usize,
    gravity_comp: bool,
    tol: f64,
) -> AutomorphismReport {
    let max_residual = joint_residual[0].max(joint_residual[1]);
    AutomorphismReport {
        pass: max_residual < tol,
        max_residual,
        joint_residual,
        samples,
        gravity_compensated: gravity_comp,
    }
}

/// Compare `forward_accel` at sampled `(x, u)` with its value at
/// `(phi_x(x), phi_u(u))`, mapped back through the induced acceleration
/// transform. A NaN residual counts as a failure.
pub fn check_automorphism(
    cand: &CandidateTransform,
    params: &ManipulatorParams,
    gravity_comp: bool,
    opts: &CheckOptions,
) -> AutomorphismReport {
    assert!(opts.n_samples >= 1, "need at least one sample");
    assert!(opts.tol > 0.0, "tolerance must be positive");
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut worst = [0.0f64; 2];
    for _ in 0..opts.n_samples {
        let (x, u) = sample(&mut rng, &opts.bounds);
        let r = residual(cand, &x, u, params, gravity_comp);
        for i in 0..2 {
            worst[i] = if r[i].is_nan() { f64::INFINITY } else { worst[i].max(r[i]) };
        }
    }
    report(worst, opts.n_samples, gravity_comp, opts.tol)
}

/// Test one joint's block on its own: the other joint is frozen (zero
/// rate, identity transform) and only this joint's acceleration is
/// compared.
pub fn check_joint_block(
    cand: &CandidateTransform,
    joint: usize,
    params: &ManipulatorParams,
    gravity_comp: bool,
    opts: &CheckOptions,
) -> AutomorphismReport {
    assert!(joint < 2);
    let mut block = *cand;
    let other = 1 - joint;
    block.phi_x[other] = 1.0;
    block.phi_u[other] = 1.0;

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let mut worst = [0.0f64; 2];
    for _ in 0..opts.n_samples {
        let (mut x, u) = sample(&mut rng, &opts.bounds);
        if other == 0 {
            x.omega1 = 0.0;
        } else {
            x.omega2 = 0.0;
        }
        let r = residual(&block, &x, u, params, gravity_comp)[joint];
        worst[joint] = if r.is_nan() { f64::INFINITY } else { worst[joint].max(r) };
    }
    report(worst, opts.n_samples, gravity_comp, opts.tol)
}

/// Verdict assembled from the per-joint decoupled blocks.
pub fn composite_verdict(
    cand: &CandidateTransform,
    params: &ManipulatorParams,
    gravity_comp: bool,
    opts: &CheckOptions,
) -> bool {
    (0..2).all(|j| check_joint_block(cand, j, params, gravity_comp, opts).pass)
}

/// The four sign patterns `diag(+-1, +-1)` with their reports, identity first.
pub fn enumerate_sign_candidates(
    params: &ManipulatorParams,
    gravity_comp: bool,
    opts: &CheckOptions,
) -> Vec<(CandidateTransform, AutomorphismReport)> {
    [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)]
        .into_iter()
        .map(|(a, b)| {
            let cand = CandidateTransform::diagonal(a, b);
            let rep = check_automorphism(&cand, params, gravity_comp, opts);
            (cand, rep)
        })
        .collect()
}
