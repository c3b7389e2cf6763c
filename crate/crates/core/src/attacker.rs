//! Affine false-data injection on the four-channel link, either on
//! plaintext signals (`S v + d`) or on ciphertexts through malleation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::SignalVector;
use crate::crypto::{gain_residue, malleate, Ciphertext, CryptoError, Modulus};

pub type CipherVector = [Ciphertext; 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("unknown scenario `{0}` (expected normal, reflection or scaling)")]
    UnknownScenario(String),
    #[error("unknown attack mode `{0}` (expected plaintext or ciphertext)")]
    UnknownMode(String),
    #[error("ciphertext mode needs a diagonal attack matrix")]
    NotDiagonal,
    #[error("ciphertext mode cannot add an offset: ElGamal is only multiplicatively homomorphic")]
    AdditiveOffset,
    #[error("gain {0} has no residue (must be a non-zero integer or the reciprocal of one)")]
    UnrepresentableGain(f64),
    #[error("attack entries must be finite")]
    NonFinite,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// `v -> S v + d` on one direction of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineAttack {
    pub matrix: [[f64; 4]; 4],
    pub offset: [f64; 4],
}

impl Default for AffineAttack {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineAttack {
    pub fn identity() -> Self {
        Self::diagonal([1.0; 4])
    }

    pub fn diagonal(gains: [f64; 4]) -> Self {
        let mut matrix = [[0.0; 4]; 4];
        for (i, g) in gains.into_iter().enumerate() {
            matrix[i][i] = g;
        }
        Self {
            matrix,
            offset: [0.0; 4],
        }
    }

    /// Row-major 16 matrix entries followed by 4 offsets.
    pub fn from_flat(values: &[f64]) -> Result<Self, AttackError> {
        if values.len() != 20 || values.iter().any(|v| !v.is_finite()) {
            return Err(AttackError::NonFinite);
        }
        let mut a = Self {
            matrix: [[0.0; 4]; 4],
            offset: [0.0; 4],
        };
        for i in 0..4 {
            a.matrix[i].copy_from_slice(&values[4 * i..4 * i + 4]);
        }
        a.offset.copy_from_slice(&values[16..20]);
        Ok(a)
    }

    pub fn with_offset(mut self, offset: [f64; 4]) -> Self {
        self.offset = offset;
        self
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..4).all(|i| (0..4).all(|j| i == j || self.matrix[i][j] == 0.0))
    }

    pub fn has_offset(&self) -> bool {
        self.offset.iter().any(|&d| d != 0.0)
    }

    pub fn diagonal_gains(&self) -> [f64; 4] {
        [
            self.matrix[0][0],
            self.matrix[1][1],
            self.matrix[2][2],
            self.matrix[3][3],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.matrix.iter().flatten().chain(&self.offset).all(|x| x.is_finite())
    }
}

/// `S v + d`. Zero matrix entries and zero offsets are skipped so that a
/// diagonal attack maps each slot through exactly one multiplication.
pub fn apply_affine_plaintext(v: &SignalVector, a: &AffineAttack) -> SignalVector {
    let x = v.to_array();
    let mut out = [0.0; 4];
    for i in 0..4 {
        let mut acc: Option<f64> = None;
        for j in 0..4 {
            let s = a.matrix[i][j];
            if s != 0.0 {
                let term = s * x[j];
                acc = Some(acc.map_or(term, |sum| sum + term));
            }
        }
        let mut y = acc.unwrap_or(0.0);
        if a.offset[i] != 0.0 {
            y += a.offset[i];
        }
        out[i] = y;
    }
    SignalVector::from_array(out)
}

/// Residues `k_i` with `Dec(malleate(c, k_i)) = S_ii * m`, for a diagonal,
/// offset-free attack.
pub fn malleation_gains(a: &AffineAttack, modulus: &Modulus) -> Result<[num_bigint::BigUint; 4], AttackError> {
    if !a.is_diagonal() {
        return Err(AttackError::NotDiagonal);
    }
    if a.has_offset() {
        return Err(AttackError::AdditiveOffset);
    }
    let gains = a.diagonal_gains();
    let residue = |g: f64| gain_residue(g, modulus).ok_or(AttackError::UnrepresentableGain(g));
    Ok([
        residue(gains[0])?,
        residue(gains[1])?,
        residue(gains[2])?,
        residue(gains[3])?,
    ])
}

/// Apply a diagonal attack to four ciphertexts. Only the group modulus is
/// needed; `c1` of every slot is left untouched.
pub fn apply_malleability(
    cv: &CipherVector,
    a: &AffineAttack,
    modulus: &Modulus,
) -> Result<CipherVector, AttackError> {
    let ks = malleation_gains(a, modulus)?;
    Ok([
        malleate(&cv[0], &ks[0], modulus)?,
        malleate(&cv[1], &ks[1], modulus)?,
        malleate(&cv[2], &ks[2], modulus)?,
        malleate(&cv[3], &ks[3], modulus)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    Normal,
    Reflection,
    Scaling,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 3] = [Self::Normal, Self::Reflection, Self::Scaling];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Normal => "normal",
            Self::Reflection => "reflection",
            Self::Scaling => "scaling",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| AttackError::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    Plaintext,
    Ciphertext,
}

impl AttackMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Plaintext => "plaintext",
            Self::Ciphertext => "ciphertext",
        }
    }
}

impl fmt::Display for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackMode {
    type Err = AttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plaintext" => Ok(Self::Plaintext),
            "ciphertext" => Ok(Self::Ciphertext),
            other => Err(AttackError::UnknownMode(other.to_string())),
        }
    }
}

/// Attack applied to both directions of the link.
///
/// `leader_dir` (S_l, d_l) rewrites follower-to-leader traffic, i.e. what
/// the leader receives; `follower_dir` (S_f, d_f) rewrites
/// leader-to-follower traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub name: ScenarioName,
    pub leader_dir: AffineAttack,
    pub follower_dir: AffineAttack,
    pub mode: AttackMode,
}

/// Yaw reflection acting on the angle and force slots of channel 1.
pub const REFLECTION_GAINS: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];

/// The named scenarios, with zero initial conditions and malleation mode.
pub fn scenario_config(name: ScenarioName) -> AttackScenario {
    let (leader_dir, follower_dir) = match name {
        ScenarioName::Normal => (AffineAttack::identity(), AffineAttack::identity()),
        ScenarioName::Reflection => (
            AffineAttack::diagonal(REFLECTION_GAINS),
            AffineAttack::diagonal(REFLECTION_GAINS),
        ),
        ScenarioName::Scaling => (
            AffineAttack::diagonal([2.0; 4]),
            AffineAttack::diagonal([0.5; 4]),
        ),
    };
    AttackScenario {
        name,
        leader_dir,
        follower_dir,
        mode: AttackMode::Ciphertext,
    }
}

impl AttackScenario {
    pub fn with_mode(mut self, mode: AttackMode) -> Self {
        self.mode = mode;
        self
    }

    /// Offsets that reflect the yaw angle about its initial value:
    /// `d_l = [2 theta1f(0), 0, 0, 0]`, `d_f = [2 theta1l(0), 0, 0, 0]`.
    /// Only meaningful for the reflection scenario.
    pub fn with_initial_yaw(mut self, leader_theta1: f64, follower_theta1: f64) -> Self {
        if self.name == ScenarioName::Reflection {
            self.leader_dir.offset = [2.0 * follower_theta1, 0.0, 0.0, 0.0];
            self.follower_dir.offset = [2.0 * leader_theta1, 0.0, 0.0, 0.0];
        }
        self
    }

    /// Attack only the traffic towards the leader.
    pub fn leader_direction_only(mut self) -> Self {
        self.follower_dir = AffineAttack::identity();
        self
    }

    /// Attack only the traffic towards the follower.
    pub fn follower_direction_only(mut self) -> Self {
        self.leader_dir = AffineAttack::identity();
        self
    }

    pub fn is_attack(&self) -> bool {
        !(self.leader_dir.is_identity() && self.follower_dir.is_identity())
    }

    /// Check the attack can be carried out in its mode.
    pub fn validate(&self, modulus: Option<&Modulus>) -> Result<(), AttackError> {
        for dir in [&self.leader_dir, &self.follower_dir] {
            if !dir.is_finite() {
                return Err(AttackError::NonFinite);
            }
            if self.mode == AttackMode::Ciphertext {
                match modulus {
                    Some(m) => {
                        malleation_gains(dir, m)?;
                    }
                    None => {
                        if !dir.is_diagonal() {
                            return Err(AttackError::NotDiagonal);
                        }
                        if dir.has_offset() {
                            return Err(AttackError::AdditiveOffset);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
