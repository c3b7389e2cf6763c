//! The in-path man-in-the-middle. It holds the attack scenario and, in
//! ciphertext mode, nothing but the group modulus.

use super::wire::{deserialize, serialize, ChannelMessage, Direction, Payload, WireError};
use crate::attacker::{
    apply_affine_plaintext, apply_malleability, AffineAttack, AttackError, AttackMode, AttackScenario,
};
use crate::crypto::Modulus;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ProxyError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error("{0} payload does not match the {1} attack mode")]
    ModeMismatch(&'static str, AttackMode),
}

#[derive(Debug, Clone)]
pub struct MitmProxy {
    scenario: AttackScenario,
    modulus: Option<Modulus>,
    onset_tick: u32,
    forwarded: u64,
    modified: u64,
}

impl MitmProxy {
    /// `modulus` is required in ciphertext mode. Messages whose tick is
    /// before `onset_tick` pass through untouched.
    pub fn new(
        scenario: AttackScenario,
        modulus: Option<Modulus>,
        onset_tick: u32,
    ) -> Result<Self, AttackError> {
        scenario.validate(modulus.as_ref())?;
        Ok(Self {
            scenario,
            modulus,
            onset_tick,
            forwarded: 0,
            modified: 0,
        })
    }

    pub fn scenario(&self) -> &AttackScenario {
        &self.scenario
    }

    pub fn onset_tick(&self) -> u32 {
        self.onset_tick
    }

    /// (messages forwarded, messages rewritten)
    pub fn counters(&self) -> (u64, u64) {
        (self.forwarded, self.modified)
    }

    fn attack_for(&self, dir: Direction) -> &AffineAttack {
        match dir {
            Direction::F2L => &self.scenario.leader_dir,
            Direction::L2F => &self.scenario.follower_dir,
        }
    }

    /// Rewrite one message; sequence number and tick are preserved.
    pub fn forward(&mut self, msg: &ChannelMessage) -> Result<ChannelMessage, ProxyError> {
        self.forwarded += 1;
        let attack = *self.attack_for(msg.direction);
        if msg.tick < self.onset_tick || attack.is_identity() {
            return Ok(msg.clone());
        }
        let payload = match (&msg.payload, self.scenario.mode) {
            (Payload::Plain(_), AttackMode::Plaintext) => {
                let v = msg.payload.plain_signals().expect("plain payload");
                Payload::from_signals(&apply_affine_plaintext(&v, &attack))
            }
            (Payload::Cipher(cv), AttackMode::Ciphertext) => {
                let m = self.modulus.as_ref().expect("validated at construction");
                Payload::Cipher(apply_malleability(cv, &attack, m)?)
            }
            (Payload::Plain(_), mode) => return Err(ProxyError::ModeMismatch("plaintext", mode)),
            (Payload::Cipher(_), mode) => return Err(ProxyError::ModeMismatch("ciphertext", mode)),
        };
        self.modified += 1;
        Ok(ChannelMessage {
            payload,
            ..msg.clone()
        })
    }

    /// Parse, rewrite and re-serialize a frame (the checksum is recomputed).
    pub fn forward_bytes(&mut self, frame: &[u8]) -> Result<Vec<u8>, ProxyError> {
        let msg = deserialize(frame)?;
        Ok(serialize(&self.forward(&msg)?))
    }
}
