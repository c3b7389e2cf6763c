//! Fixed-point mapping between real signals and residues of Z_p*.
//!
//! A value `v` becomes `n = round(v * 2^gamma)`, stored as `n` when
//! non-negative and `p - |n|` when negative. Zero is not a unit, so every
//! `n` with `|n| <= 1` is stored as the one-quantum code `1` or `p - 1`
//! (sign taken from the IEEE sign bit), and those two codes decode to a
//! signed zero. The map is odd: `encode(-v) = p - encode(v)` for every `v`,
//! including `-0.0`, so multiplying by `p - 1` negates the decoded value
//! bit for bit.

use num_bigint::BigUint;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

use super::elgamal::{Modulus, PublicKey};
use super::CryptoError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingParams {
    gamma: u32,
    p: BigUint,
    q: BigUint,
}

/// A decoded signal and whether its magnitude is outside the encodable range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub value: f64,
    pub implausible: bool,
}

impl EncodingParams {
    pub fn new(gamma: u32, modulus: &Modulus) -> Result<Self, CryptoError> {
        let p = modulus.value().clone();
        if p < BigUint::from(7u32) || gamma > 512 {
            return Err(CryptoError::InvalidEncoding { gamma, bits: p.bits() });
        }
        let q = (&p - 1u32) >> 1;
        // Need at least the zero code and a few quanta of headroom.
        if BigUint::from(8u32) << gamma >= q {
            return Err(CryptoError::InvalidEncoding { gamma, bits: p.bits() });
        }
        Ok(Self { gamma, p, q })
    }

    pub fn for_key(gamma: u32, pk: &PublicKey) -> Result<Self, CryptoError> {
        Self::new(gamma, &pk.modulus())
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn modulus(&self) -> &BigUint {
        &self.p
    }

    /// Size of one quantization step, `2^-gamma`.
    pub fn quantum(&self) -> f64 {
        (-(self.gamma as f64)).exp2()
    }

    fn scale(&self) -> f64 {
        (self.gamma as f64).exp2()
    }

    /// Largest magnitude that encodes without overflow.
    pub fn max_magnitude(&self) -> f64 {
        let half_q = (&self.q >> 1u32).to_f64().unwrap_or(f64::MAX);
        half_q / self.scale()
    }

    pub fn encode(&self, value: f64) -> Result<BigUint, CryptoError> {
        if !value.is_finite() {
            return Err(CryptoError::EncodingOverflow(value));
        }
        let n = (value.abs() * self.scale()).round();
        let mut mag = BigUint::from_f64(n).ok_or(CryptoError::EncodingOverflow(value))?;
        if (&mag << 1u32) >= self.q {
            return Err(CryptoError::EncodingOverflow(value));
        }
        if mag.is_zero() {
            mag = BigUint::one();
        }
        Ok(if value.is_sign_negative() {
            &self.p - mag
        } else {
            mag
        })
    }

    pub fn decode(&self, m: &BigUint) -> Decoded {
        let m = m % &self.p;
        if m.is_zero() {
            return Decoded {
                value: 0.0,
                implausible: true,
            };
        }
        let negative = (&m << 1u32) > self.p;
        let mag = if negative { &self.p - &m } else { m };
        let implausible = (&mag << 1u32) >= self.q;
        let magnitude = if mag.is_one() {
            0.0
        } else {
            mag.to_f64().unwrap_or(f64::INFINITY) / self.scale()
        };
        Decoded {
            value: if negative { -magnitude } else { magnitude },
            implausible,
        }
    }

    /// `decode(encode(v))`, the value a receiver sees for a clean signal.
    pub fn quantize(&self, value: f64) -> Result<f64, CryptoError> {
        Ok(self.decode(&self.encode(value)?).value)
    }

    /// Residue that multiplies an encoded plaintext by `gain`, if the gain
    /// is an integer or the reciprocal of one (`-1 -> p - 1`, `2 -> 2`,
    /// `0.5 -> 2^-1 mod p`).
    pub fn gain_residue(&self, gain: f64) -> Option<BigUint> {
        gain_residue(gain, &Modulus::new(self.p.clone()))
    }
}

pub fn gain_residue(gain: f64, modulus: &Modulus) -> Option<BigUint> {
    if !gain.is_finite() || gain == 0.0 {
        return None;
    }
    let p = modulus.value();
    let magnitude = |x: f64| -> Option<BigUint> {
        if x.fract() == 0.0 && x.abs() < 2f64.powi(63) {
            BigUint::from_u64(x.abs() as u64)
        } else {
            None
        }
    };
    let residue = if let Some(k) = magnitude(gain) {
        k % p
    } else {
        let k = magnitude(1.0 / gain)?;
        if 1.0 / (k.to_f64()?) != gain.abs() {
            return None;
        }
        modulus.inverse(&(k % p))?
    };
    if residue.is_zero() {
        return None;
    }
    Some(if gain < 0.0 { p - residue } else { residue })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: u32, p: u64) -> EncodingParams {
        EncodingParams::new(gamma, &Modulus::new(BigUint::from(p))).unwrap()
    }

    // 23-bit safe prime, q = 4194143.
    const P23: u64 = 8_388_287;

    #[test]
    fn positive_and_negative_encoding() {
        let e = params(8, P23);
        assert_eq!(e.encode(1.5).unwrap(), BigUint::from(384u32));
        assert_eq!(e.encode(-1.5).unwrap(), BigUint::from(P23 - 384));
        assert_eq!(e.decode(&BigUint::from(P23 - 384)).value, -1.5);
    }

    #[test]
    fn zero_uses_one_quantum_code() {
        let e = params(8, P23);
        assert_eq!(e.encode(0.0).unwrap(), BigUint::one());
        assert_eq!(e.encode(-0.0).unwrap(), BigUint::from(P23 - 1));
        let d = e.decode(&BigUint::one());
        assert_eq!(d.value, 0.0);
        assert!(d.value.is_sign_positive());
        assert!(e.decode(&BigUint::from(P23 - 1)).value.is_sign_negative());
    }

    #[test]
    fn quantization_of_gravity_torque() {
        let e = params(8, P23);
        assert_eq!(e.quantize(0.981).unwrap(), 0.98046875);
    }

    #[test]
    fn overflow_and_implausible_threshold() {
        let e = params(8, P23);
        assert!(matches!(e.encode(1e9), Err(CryptoError::EncodingOverflow(_))));
        assert!(e.encode(f64::NAN).is_err());
        let half = BigUint::from(P23 / 2);
        assert!(e.decode(&half).implausible);
        assert!(!e.decode(&BigUint::from(384u32)).implausible);
        let top = e.max_magnitude();
        assert!(e.encode(top * 0.999).is_ok());
    }

    #[test]
    fn gain_residues() {
        let m = Modulus::new(BigUint::from(23u32));
        assert_eq!(gain_residue(-1.0, &m), Some(BigUint::from(22u32)));
        assert_eq!(gain_residue(2.0, &m), Some(BigUint::from(2u32)));
        assert_eq!(gain_residue(0.5, &m), Some(BigUint::from(12u32)));
        assert_eq!(gain_residue(-0.5, &m), Some(BigUint::from(11u32)));
        assert_eq!(gain_residue(1.0, &m), Some(BigUint::one()));
        assert_eq!(gain_residue(0.3, &m), None);
        assert_eq!(gain_residue(0.0, &m), None);
        assert_eq!(gain_residue(23.0, &m), None);
    }

    #[test]
    fn rejects_gamma_without_headroom() {
        assert!(EncodingParams::new(8, &Modulus::new(BigUint::from(23u32))).is_err());
    }
}
