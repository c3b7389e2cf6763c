//! Turning signal vectors into payloads and back, in either link mode.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::wire::Payload;
use crate::attacker::AttackMode;
use crate::controller::SignalVector;
use crate::crypto::{decrypt, encrypt_with_rng, CryptoError, EncodingParams, PublicKey, SecretKey};

#[derive(Debug, Clone)]
struct Keys {
    pk: PublicKey,
    sk: SecretKey,
    enc: EncodingParams,
}

/// One endpoint's encoder/decoder. In ciphertext mode each endpoint holds
/// the key pair; nonces come from a seeded stream.
#[derive(Debug, Clone)]
pub struct SignalCodec {
    keys: Option<Keys>,
    rng: ChaCha20Rng,
}

/// Signals recovered from a payload, with one implausibility flag per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedSignals {
    pub signals: SignalVector,
    pub implausible: [bool; 4],
}

impl DecodedSignals {
    pub fn any_implausible(&self) -> bool {
        self.implausible.iter().any(|&f| f)
    }

    /// Flags packed into the low four bits.
    pub fn flag_bits(&self) -> u8 {
        self.implausible
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &f)| acc | ((f as u8) << i))
    }
}

impl SignalCodec {
    pub fn plaintext() -> Self {
        Self {
            keys: None,
            rng: ChaCha20Rng::seed_from_u64(0),
        }
    }

    pub fn ciphertext(
        pk: PublicKey,
        sk: SecretKey,
        gamma: u32,
        nonce_seed: u64,
    ) -> Result<Self, CryptoError> {
        let enc = EncodingParams::for_key(gamma, &pk)?;
        Ok(Self {
            keys: Some(Keys { pk, sk, enc }),
            rng: ChaCha20Rng::seed_from_u64(nonce_seed),
        })
    }

    pub fn mode(&self) -> AttackMode {
        if self.keys.is_some() {
            AttackMode::Ciphertext
        } else {
            AttackMode::Plaintext
        }
    }

    pub fn encoding(&self) -> Option<&EncodingParams> {
        self.keys.as_ref().map(|k| &k.enc)
    }

    pub fn encode(&mut self, v: &SignalVector) -> Result<Payload, CryptoError> {
        let Some(keys) = &self.keys else {
            return Ok(Payload::from_signals(v));
        };
        let slots = v.to_array();
        let mut out = Vec::with_capacity(4);
        for x in slots {
            let m = keys.enc.encode(x)?;
            out.push(encrypt_with_rng(&m, &keys.pk, &mut self.rng)?);
        }
        Ok(Payload::Cipher(out.try_into().expect("four slots")))
    }

    /// Decode a payload. A payload of the wrong kind for this codec decodes
    /// to zeros with every slot flagged.
    pub fn decode(&self, payload: &Payload) -> DecodedSignals {
        match (payload, &self.keys) {
            (Payload::Plain(_), None) => DecodedSignals {
                signals: payload.plain_signals().expect("plain payload"),
                implausible: [false; 4],
            },
            (Payload::Cipher(cs), Some(keys)) => {
                let mut vals = [0.0; 4];
                let mut flags = [false; 4];
                for i in 0..4 {
                    let d = keys.enc.decode(&decrypt(&cs[i], &keys.sk, &keys.pk));
                    vals[i] = d.value;
                    flags[i] = d.implausible;
                }
                DecodedSignals {
                    signals: SignalVector::from_array(vals),
                    implausible: flags,
                }
            }
            _ => DecodedSignals {
                signals: SignalVector::default(),
                implausible: [true; 4],
            },
        }
    }

    /// What a clean round trip through this codec delivers.
    pub fn quantize(&self, v: &SignalVector) -> Result<SignalVector, CryptoError> {
        match &self.keys {
            None => Ok(*v),
            Some(k) => {
                let a = v.to_array();
                let mut out = [0.0; 4];
                for i in 0..4 {
                    out[i] = k.enc.quantize(a[i])?;
                }
                Ok(SignalVector::from_array(out))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::keygen;

    #[test]
    fn plaintext_is_bit_exact() {
        let mut c = SignalCodec::plaintext();
        let v = SignalVector::new(0.1, -0.2, 1e-17, -0.0);
        let p = c.encode(&v).unwrap();
        let d = c.decode(&p);
        assert_eq!(d.signals.to_array().map(f64::to_bits), v.to_array().map(f64::to_bits));
        assert_eq!(d.flag_bits(), 0);
    }

    #[test]
    fn ciphertext_roundtrip_quantizes() {
        let (pk, sk) = keygen(64, 3).unwrap();
        let mut c = SignalCodec::ciphertext(pk, sk, 16, 9).unwrap();
        let v = SignalVector::new(0.1, -0.2, 0.981, 0.0);
        let payload = c.encode(&v).unwrap();
        let d = c.decode(&payload);
        assert_eq!(d.signals, c.quantize(&v).unwrap());
        assert!((d.signals.theta1 - 0.1).abs() <= 0.5 / 65536.0);
        assert!(!d.any_implausible());
    }

    #[test]
    fn mismatched_payload_is_flagged() {
        let (pk, sk) = keygen(64, 3).unwrap();
        let c = SignalCodec::ciphertext(pk, sk, 16, 9).unwrap();
        let p = SignalCodec::plaintext().encode(&SignalVector::default()).unwrap();
        assert_eq!(c.decode(&p).flag_bits(), 0b1111);
    }
}
