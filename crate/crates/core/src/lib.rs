//! Simulation testbed for an encrypted four-channel bilateral teleoperation
//! link under malleability-based false data injection.
//!
//! The pieces fit together as: [`dynamics`] models each 2-DOF arm,
//! [`controller`] closes the bilateral loop, [`crypto`] encrypts the
//! exchanged signals, [`attacker`] rewrites them in transit, [`channel`]
//! carries them, and [`harness`] runs and compares whole experiments.
//! [`attackability`] checks which transforms leave the arm dynamics
//! invariant.

pub mod attackability;
pub mod attacker;
pub mod channel;
pub mod config;
pub mod controller;
pub mod crypto;
pub mod dynamics;
pub mod harness;

pub use attacker::{AffineAttack, AttackMode, AttackScenario, ScenarioName};
pub use controller::{BilateralController, ControllerGains, Side, SignalVector};
pub use dynamics::{JointState, ManipulatorParams, TorquePair};

/// Control period (s).
pub const CONTROL_PERIOD: f64 = 0.02;
/// Physics integration substep (s).
pub const PHYSICS_STEP: f64 = 0.001;
