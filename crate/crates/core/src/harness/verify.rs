//! Tick-by-tick comparison of an attacked run against its baseline.
//!
//! The attack is undetectable when everything the leader can observe is
//! unchanged, and the follower's motion is an image of its baseline motion
//! under some diagonal sign map about its initial pose.

use serde::Serialize;
use thiserror::Error;

use super::trace::{RobotSample, TraceLog, TraceRow};
use crate::attacker::{apply_affine_plaintext, AttackScenario};
use crate::controller::SignalVector;
use crate::crypto::EncodingParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("trace lengths differ: baseline {baseline} rows, attacked {attacked} rows")]
    LengthMismatch { baseline: usize, attacked: usize },
    #[error("empty trace")]
    Empty,
    #[error("tick {0} differs between the traces")]
    TickMismatch(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityDiff {
    pub name: &'static str,
    pub max_abs_diff: f64,
    /// First tick where the difference reached the tolerance.
    pub first_violation: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorCheck {
    /// Sign pattern `(yaw, pitch)` under which the follower matches, if any.
    pub matched: Option<[f64; 2]>,
    /// Residual of the best pattern.
    pub best_residual: f64,
    pub best_pattern: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub tol: f64,
    pub ticks: usize,
    /// The attacked run stopped early (divergence abort).
    pub truncated: bool,
    pub leader: Vec<QuantityDiff>,
    pub leader_max_diff: f64,
    /// Time (s) at which the leader first saw a difference at or above tol.
    pub first_detection_time: Option<f64>,
    pub mirror: MirrorCheck,
    /// Attacked-run ticks with an implausible decode on the leader side.
    pub leader_implausible_ticks: usize,
    /// Attacked-run ticks with an implausible decode anywhere.
    pub implausible_ticks: usize,
}

fn diff(a: f64, b: f64) -> f64 {
    if a.to_bits() == b.to_bits() || a == b {
        0.0
    } else {
        let d = (a - b).abs();
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    }
}

type Getter = (&'static str, fn(&TraceRow) -> f64);

const LEADER_QUANTITIES: [Getter; 10] = [
    ("leader_theta1", |r| r.leader.theta[0]),
    ("leader_theta2", |r| r.leader.theta[1]),
    ("leader_tau_hat1", |r| r.leader.tau_hat[0]),
    ("leader_tau_hat2", |r| r.leader.tau_hat[1]),
    ("leader_rx_theta1", |r| r.leader_rx[0]),
    ("leader_rx_theta2", |r| r.leader_rx[1]),
    ("leader_rx_tau_e1", |r| r.leader_rx[2]),
    ("leader_rx_tau_e2", |r| r.leader_rx[3]),
    ("leader_motor1", |r| r.leader.motor[0]),
    ("leader_motor2", |r| r.leader.motor[1]),
];

/// Sign patterns tried by the mirror check, identity first.
pub const SIGN_PATTERNS: [[f64; 2]; 4] = [[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]];

/// Largest deviation of the attacked follower from the baseline follower
/// mapped through `signs` about the baseline's initial angles.
pub fn mirror_residual(baseline: &TraceLog, attacked: &TraceLog, signs: [f64; 2]) -> f64 {
    let c = baseline.rows[0].follower.theta;
    let mut worst = 0.0f64;
    let map = |b: &RobotSample, a: &RobotSample| -> f64 {
        let mut w = 0.0f64;
        for i in 0..2 {
            let s = signs[i];
            let theta = if s == 1.0 { b.theta[i] } else { s * (b.theta[i] - c[i]) + c[i] };
            w = w
                .max(diff(a.theta[i], theta))
                .max(diff(a.tau_hat[i], s * b.tau_hat[i]))
                .max(diff(a.motor[i], s * b.motor[i]));
        }
        w
    };
    for (b, a) in baseline.rows.iter().zip(&attacked.rows) {
        worst = worst.max(map(&b.follower, &a.follower));
    }
    worst
}

pub fn mirror_check(baseline: &TraceLog, attacked: &TraceLog, tol: f64) -> MirrorCheck {
    let mut best = (f64::INFINITY, SIGN_PATTERNS[0]);
    let mut matched = None;
    for signs in SIGN_PATTERNS {
        let r = mirror_residual(baseline, attacked, signs);
        if r < best.0 {
            best = (r, signs);
        }
        if matched.is_none() && r < tol {
            matched = Some(signs);
        }
    }
    MirrorCheck {
        matched,
        best_residual: best.0,
        best_pattern: best.1,
    }
}

pub fn verify_undetectable(
    baseline: &TraceLog,
    attacked: &TraceLog,
    tol: f64,
) -> Result<VerifyReport, VerifyError> {
    if attacked.len() > baseline.len() {
        return Err(VerifyError::LengthMismatch {
            baseline: baseline.len(),
            attacked: attacked.len(),
        });
    }
    if attacked.is_empty() {
        return Err(VerifyError::Empty);
    }
    for (i, (b, a)) in baseline.rows.iter().zip(&attacked.rows).enumerate() {
        if b.tick != a.tick || b.time.to_bits() != a.time.to_bits() {
            return Err(VerifyError::TickMismatch(i));
        }
    }

    let mut leader = Vec::with_capacity(LEADER_QUANTITIES.len());
    let mut first_detection: Option<u32> = None;
    for (name, get) in LEADER_QUANTITIES {
        let mut q = QuantityDiff {
            name,
            max_abs_diff: 0.0,
            first_violation: None,
        };
        for (b, a) in baseline.rows.iter().zip(&attacked.rows) {
            let d = diff(get(b), get(a));
            q.max_abs_diff = q.max_abs_diff.max(d);
            if d >= tol && q.first_violation.is_none() {
                q.first_violation = Some(a.tick);
            }
        }
        if let Some(t) = q.first_violation {
            first_detection = Some(first_detection.map_or(t, |f| f.min(t)));
        }
        leader.push(q);
    }
    let leader_max_diff = leader.iter().map(|q| q.max_abs_diff).fold(0.0, f64::max);
    let mirror = mirror_check(baseline, attacked, tol);
    // An aborted attacked run is detected no later than where it stopped.
    let truncated = attacked.len() < baseline.len();
    if truncated && first_detection.is_none() {
        first_detection = Some(baseline.rows[attacked.len()].tick);
    }
    let first_detection_time = first_detection.map(|t| {
        attacked
            .rows
            .iter()
            .chain(&baseline.rows)
            .find(|r| r.tick == t)
            .map_or(0.0, |r| r.time)
    });

    Ok(VerifyReport {
        pass: !truncated && leader_max_diff < tol && mirror.matched.is_some(),
        tol,
        truncated,
        ticks: attacked.len(),
        leader,
        leader_max_diff,
        first_detection_time,
        mirror,
        leader_implausible_ticks: attacked.flagged_ticks(TraceRow::F2L_FLAGS),
        implausible_ticks: attacked.flagged_ticks(0xff),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub ticks: usize,
    /// Ticks where both directions matched bit for bit.
    pub bit_equal: usize,
    /// Mismatching ticks explained by an odd code under a halving gain.
    pub parity_events: usize,
    /// Mismatching ticks with no explanation.
    pub unexplained: usize,
}

impl EquivalenceReport {
    pub fn bit_equal_fraction(&self) -> f64 {
        if self.ticks == 0 {
            1.0
        } else {
            self.bit_equal as f64 / self.ticks as f64
        }
    }
}

fn bits_equal(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Check, on every tick of a ciphertext-mode trace, that the decoded
/// post-attack vectors equal the plaintext attack applied to the decoded
/// pre-attack vectors. A mismatch on a slot whose gain is fractional and
/// whose pre-attack code is odd is a parity event.
pub fn mode_equivalence(
    trace: &TraceLog,
    attack: &AttackScenario,
    onset_tick: u32,
    enc: Option<&EncodingParams>,
) -> EquivalenceReport {
    let mut rep = EquivalenceReport {
        ticks: trace.len(),
        bit_equal: 0,
        parity_events: 0,
        unexplained: 0,
    };
    for r in &trace.rows {
        let mut equal = true;
        let mut explained = true;
        for (pre, post, dir) in [
            (&r.l2f_pre, &r.l2f_post, &attack.follower_dir),
            (&r.f2l_pre, &r.f2l_post, &attack.leader_dir),
        ] {
            let expected = if r.tick < onset_tick {
                *pre
            } else {
                apply_affine_plaintext(&SignalVector::from_array(*pre), dir).to_array()
            };
            if bits_equal(&expected, post) {
                continue;
            }
            equal = false;
            let gains = dir.diagonal_gains();
            for i in 0..4 {
                if expected[i].to_bits() == post[i].to_bits() {
                    continue;
                }
                let odd = enc.is_some_and(|e| {
                    e.encode(pre[i])
                        .map(|n| n.bit(0) && !gains[i].fract().eq(&0.0))
                        .unwrap_or(false)
                });
                if !odd {
                    explained = false;
                }
            }
        }
        if equal {
            rep.bit_equal += 1;
        } else if explained {
            rep.parity_events += 1;
        } else {
            rep.unexplained += 1;
        }
    }
    rep
}

/// Pearson correlation of two equally long series (NaN if degenerate).
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
