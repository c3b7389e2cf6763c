//! Experiment runner: scripted operator, contact wall, closed-loop
//! simulation, trace logging and the undetectability verifier.

pub mod environment;
pub mod plot;
pub mod sim;
pub mod trace;
pub mod verify;

pub use environment::{operator_torque, wall_torque, OperatorProfile, SinusoidSegment, WallAxis, WallModel};
pub use plot::emit_plots;
pub use sim::{
    run_scenario, run_with_baseline, AttackDirections, HarnessError, KeySource, RunConfig, RunOutput,
    RunStats, Station, TransportKind,
};
pub use trace::{RobotSample, TraceError, TraceLog, TraceRow};
pub use verify::{mode_equivalence, verify_undetectable, EquivalenceReport, VerifyError, VerifyReport};
