//! Multiplicative ElGamal over the order-q subgroup of Z_p*, p = 2q + 1.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::prime::{generate_safe_prime, is_probable_prime, random_in_range, MR_ROUNDS};
use super::CryptoError;

/// Smallest and largest accepted key sizes, in bits of `p`.
pub const MIN_KEY_BITS: u64 = 16;
pub const MAX_KEY_BITS: u64 = 2048;

const SAFE_PRIME_ATTEMPTS: u64 = 50_000_000;

/// The group modulus `p`. This is everything a man-in-the-middle needs to
/// malleate ciphertexts, and the only key material the proxy is given.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Modulus(BigUint);

impl Modulus {
    pub fn new(p: BigUint) -> Self {
        Self(p)
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// `p - 1`, the residue acting as -1.
    pub fn minus_one(&self) -> BigUint {
        &self.0 - 1u32
    }

    pub fn inverse(&self, k: &BigUint) -> Option<BigUint> {
        k.modinv(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    p: BigUint,
    q: BigUint,
    gen: BigUint,
    h: BigUint,
}

impl PublicKey {
    /// Build a key from its components, checking every group invariant.
    pub fn from_parts(p: BigUint, q: BigUint, gen: BigUint, h: BigUint) -> Result<Self, CryptoError> {
        let invalid = |why: &str| Err(CryptoError::InvalidKey(why.to_string()));
        if p != (&q << 1u32) + 1u32 {
            return invalid("p != 2q + 1");
        }
        let mut rng = ChaCha20Rng::seed_from_u64(0x5afe_b007);
        if !is_probable_prime(&q, MR_ROUNDS, &mut rng) || !is_probable_prime(&p, MR_ROUNDS, &mut rng) {
            return invalid("p or q is not prime");
        }
        if gen.is_zero() || gen >= p || gen.is_one() || !gen.modpow(&q, &p).is_one() {
            return invalid("generator is not of order q");
        }
        if h.is_zero() || h >= p || !h.modpow(&q, &p).is_one() {
            return invalid("h is not in the order-q subgroup");
        }
        Ok(Self { p, q, gen, h })
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn generator(&self) -> &BigUint {
        &self.gen
    }

    pub fn h(&self) -> &BigUint {
        &self.h
    }

    pub fn modulus(&self) -> Modulus {
        Modulus(self.p.clone())
    }

    pub fn bits(&self) -> u64 {
        self.p.bits()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey {
    s: BigUint,
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

impl SecretKey {
    pub fn new(s: BigUint, pk: &PublicKey) -> Result<Self, CryptoError> {
        if s.is_zero() || &s >= pk.q() {
            return Err(CryptoError::InvalidKey("secret exponent outside (0, q)".into()));
        }
        if pk.generator().modpow(&s, pk.p()) != *pk.h() {
            return Err(CryptoError::InvalidKey("h != gen^s mod p".into()));
        }
        Ok(Self { s })
    }

    pub fn exponent(&self) -> &BigUint {
        &self.s
    }
}

/// An ElGamal ciphertext `(c1, c2) = (g^r, m h^r) mod p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ciphertext {
    pub c1: BigUint,
    pub c2: BigUint,
}

/// Deterministic key generation: the same `bits` and `seed` always give
/// the same key pair.
pub fn keygen(bits: u64, seed: u64) -> Result<(PublicKey, SecretKey), CryptoError> {
    if !(MIN_KEY_BITS..=MAX_KEY_BITS).contains(&bits) {
        return Err(CryptoError::KeySize(bits));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let sp = generate_safe_prime(bits, SAFE_PRIME_ATTEMPTS, &mut rng)
        .map_err(|attempts| CryptoError::PrimeSearchExhausted { bits, attempts })?;

    let two = BigUint::from(2u32);
    let gen = loop {
        // Squares generate the quadratic residues, which are exactly the
        // order-q subgroup; any square other than 1 generates it.
        let x = random_in_range(&two, &(&sp.p - 2u32), &mut rng);
        let g = (&x * &x) % &sp.p;
        if !g.is_one() {
            break g;
        }
    };
    let s = random_in_range(&BigUint::one(), &(&sp.q - 1u32), &mut rng);
    let h = gen.modpow(&s, &sp.p);
    let pk = PublicKey {
        p: sp.p,
        q: sp.q,
        gen,
        h,
    };
    Ok((pk, SecretKey { s }))
}

/// Encrypt `m` with nonce `r`.
pub fn encrypt(m: &BigUint, pk: &PublicKey, r: &BigUint) -> Result<Ciphertext, CryptoError> {
    if m.is_zero() || m >= pk.p() {
        return Err(CryptoError::PlaintextRange);
    }
    if r.is_zero() || r >= pk.q() {
        return Err(CryptoError::NonceRange);
    }
    Ok(Ciphertext {
        c1: pk.gen.modpow(r, &pk.p),
        c2: (m * pk.h.modpow(r, &pk.p)) % &pk.p,
    })
}

/// Draw a nonce in `[1, q - 1]`.
pub fn random_nonce<R: RngCore + ?Sized>(pk: &PublicKey, rng: &mut R) -> BigUint {
    random_in_range(&BigUint::one(), &(pk.q() - 1u32), rng)
}

pub fn encrypt_with_rng<R: RngCore + ?Sized>(
    m: &BigUint,
    pk: &PublicKey,
    rng: &mut R,
) -> Result<Ciphertext, CryptoError> {
    let r = random_nonce(pk, rng);
    encrypt(m, pk, &r)
}

/// `c1^(-s) c2 mod p`. The inverse power is taken as `c1^(p-1-s)`, which
/// holds for any unit `c1`, not only subgroup members.
pub fn decrypt(c: &Ciphertext, sk: &SecretKey, pk: &PublicKey) -> BigUint {
    let exp = pk.p() - 1u32 - sk.exponent();
    (c.c1.modpow(&exp, pk.p()) * &c.c2) % pk.p()
}

/// Component-wise product; decrypts to the product of the plaintexts.
pub fn hom_mul(a: &Ciphertext, b: &Ciphertext, modulus: &Modulus) -> Ciphertext {
    let p = modulus.value();
    Ciphertext {
        c1: (&a.c1 * &b.c1) % p,
        c2: (&a.c2 * &b.c2) % p,
    }
}

/// `(c1, k c2 mod p)`: decrypts to `k m mod p` without any key material.
pub fn malleate(c: &Ciphertext, k: &BigUint, modulus: &Modulus) -> Result<Ciphertext, CryptoError> {
    let p = modulus.value();
    let k = k % p;
    if k.is_zero() || !k.gcd(p).is_one() {
        return Err(CryptoError::DegenerateGain);
    }
    Ok(Ciphertext {
        c1: c.c1.clone(),
        c2: (&c.c2 * k) % p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn toy() -> (PublicKey, SecretKey) {
        let pk = PublicKey::from_parts(b(23), b(11), b(2), b(8)).unwrap();
        let sk = SecretKey::new(b(3), &pk).unwrap();
        (pk, sk)
    }

    #[test]
    fn toy_public_key() {
        // 2^3 mod 23 = 8 and 2 has order 11 modulo 23.
        assert_eq!(b(2).modpow(&b(3), &b(23)), b(8));
        assert_eq!(b(2).modpow(&b(11), &b(23)), b(1));
        toy();
    }

    #[test]
    fn toy_encrypt_decrypt() {
        let (pk, sk) = toy();
        let c = encrypt(&b(4), &pk, &b(5)).unwrap();
        assert_eq!(c, Ciphertext { c1: b(9), c2: b(18) });
        assert_eq!(decrypt(&c, &sk, &pk), b(4));
    }

    #[test]
    fn nonce_range() {
        let (pk, _) = toy();
        assert_eq!(encrypt(&b(1), &pk, &b(0)), Err(CryptoError::NonceRange));
        assert!(encrypt(&b(1), &pk, &b(10)).is_ok());
        assert_eq!(encrypt(&b(1), &pk, &b(11)), Err(CryptoError::NonceRange));
        assert_eq!(encrypt(&b(0), &pk, &b(3)), Err(CryptoError::PlaintextRange));
        assert_eq!(encrypt(&b(23), &pk, &b(3)), Err(CryptoError::PlaintextRange));
    }

    #[test]
    fn toy_malleation() {
        let (pk, sk) = toy();
        let m = pk.modulus();
        let c = Ciphertext { c1: b(9), c2: b(18) };
        let neg = malleate(&c, &m.minus_one(), &m).unwrap();
        assert_eq!(neg.c1, c.c1);
        assert_eq!(decrypt(&neg, &sk, &pk), b(19));
        let dbl = malleate(&c, &b(2), &m).unwrap();
        assert_eq!(dbl, Ciphertext { c1: b(9), c2: b(13) });
        assert_eq!(decrypt(&dbl, &sk, &pk), b(8));
        assert_eq!(malleate(&c, &b(0), &m), Err(CryptoError::DegenerateGain));
        assert_eq!(malleate(&c, &b(46), &m), Err(CryptoError::DegenerateGain));
    }

    #[test]
    fn toy_homomorphism() {
        let (pk, sk) = toy();
        let m = pk.modulus();
        let c4 = encrypt(&b(4), &pk, &b(5)).unwrap();
        let c2 = encrypt(&b(2), &pk, &b(7)).unwrap();
        assert_eq!(decrypt(&hom_mul(&c4, &c2, &m), &sk, &pk), b(8));
        let one = encrypt(&b(1), &pk, &b(3)).unwrap();
        assert_eq!(decrypt(&hom_mul(&c4, &one, &m), &sk, &pk), b(4));
    }

    #[test]
    fn rejects_inconsistent_keys() {
        assert!(PublicKey::from_parts(b(23), b(11), b(5), b(8)).is_err()); // 5 is a non-residue
        assert!(PublicKey::from_parts(b(23), b(11), b(1), b(1)).is_err());
        assert!(PublicKey::from_parts(b(25), b(12), b(2), b(8)).is_err());
        let (pk, _) = toy();
        assert!(SecretKey::new(b(4), &pk).is_err());
        assert!(SecretKey::new(b(0), &pk).is_err());
    }

    #[test]
    fn keygen_is_deterministic_and_valid() {
        let (pk1, sk1) = keygen(64, 7).unwrap();
        let (pk2, sk2) = keygen(64, 7).unwrap();
        assert_eq!(pk1, pk2);
        assert_eq!(sk1, sk2);
        assert_eq!(pk1.bits(), 64);
        assert!(pk1.generator().modpow(pk1.q(), pk1.p()).is_one());
        assert!(pk1.h().modpow(pk1.q(), pk1.p()).is_one());
        let rebuilt = PublicKey::from_parts(
            pk1.p().clone(),
            pk1.q().clone(),
            pk1.generator().clone(),
            pk1.h().clone(),
        )
        .unwrap();
        assert_eq!(rebuilt, pk1);
        SecretKey::new(sk1.exponent().clone(), &pk1).unwrap();
        assert_ne!(keygen(64, 8).unwrap().0, pk1);
    }

    #[test]
    fn keygen_size_bounds() {
        assert_eq!(keygen(8, 1).unwrap_err(), CryptoError::KeySize(8));
        assert_eq!(keygen(4096, 1).unwrap_err(), CryptoError::KeySize(4096));
        assert_eq!(keygen(16, 1).unwrap().0.bits(), 16);
    }
}
