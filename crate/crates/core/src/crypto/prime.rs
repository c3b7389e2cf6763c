//! Miller–Rabin testing and safe-prime search over `BigUint`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngCore;

/// Rounds giving a false-positive bound of 4^-40 = 2^-80 on composites.
pub const MR_ROUNDS: usize = 40;

const SMALL_PRIMES: [u32; 53] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Uniform integer in `[0, bound)`; `bound` must be non-zero.
pub fn random_below<R: RngCore + ?Sized>(bound: &BigUint, rng: &mut R) -> BigUint {
    assert!(!bound.is_zero());
    let bits = bound.bits();
    let nbytes = bits.div_ceil(8) as usize;
    let excess = (nbytes as u64 * 8 - bits) as u32;
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill_bytes(&mut buf);
        if excess > 0 {
            buf[0] &= 0xffu8 >> excess;
        }
        let x = BigUint::from_bytes_be(&buf);
        if &x < bound {
            return x;
        }
    }
}

/// Uniform integer in `[lo, hi]`.
pub fn random_in_range<R: RngCore + ?Sized>(lo: &BigUint, hi: &BigUint, rng: &mut R) -> BigUint {
    assert!(lo <= hi);
    let span = hi - lo + 1u32;
    lo + random_below(&span, rng)
}

fn small_factor(n: &BigUint) -> Option<u32> {
    SMALL_PRIMES
        .iter()
        .copied()
        .find(|&sp| (n % sp).is_zero() && *n != BigUint::from(sp))
}

/// Probabilistic primality test with `rounds` random witnesses.
pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rounds: usize, rng: &mut R) -> bool {
    if let Some(small) = n.to_u64().filter(|&v| v < 4) {
        return small == 2 || small == 3;
    }
    if n.is_even() {
        return false;
    }
    if small_factor(n).is_some() {
        return false;
    }
    if n.to_u64().is_some_and(|v| v <= 251) {
        return true;
    }

    let n_minus_one = n - 1u32;
    let twos = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> twos;
    let two = BigUint::from(2u32);
    let upper = n - 2u32;

    'witness: for _ in 0..rounds {
        let a = random_in_range(&two, &upper, rng);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..twos {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A safe prime `p = 2q + 1` together with its Sophie Germain prime `q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafePrime {
    pub p: BigUint,
    pub q: BigUint,
}

/// Search for a `bits`-bit safe prime. Returns `Err(attempts)` if none was
/// found within `max_attempts` candidates.
pub fn generate_safe_prime<R: RngCore + ?Sized>(
    bits: u64,
    max_attempts: u64,
    rng: &mut R,
) -> Result<SafePrime, u64> {
    assert!(bits >= 3);
    let q_bits = bits - 1;
    let top = BigUint::one() << (q_bits - 1);
    let span = top.clone();

    for _ in 0..max_attempts {
        let mut q = &top + random_below(&span, rng);
        q |= BigUint::one();
        // q = 2 mod 3 keeps 3 out of both q and 2q + 1.
        if q_bits > 2 && (&q % 3u32) != BigUint::from(2u32) {
            continue;
        }
        let p: BigUint = (&q << 1u32) + 1u32;
        if p.bits() != bits {
            continue;
        }
        if small_factor(&q).is_some() || small_factor(&p).is_some() {
            continue;
        }
        if !is_probable_prime(&q, 2, rng) || !is_probable_prime(&p, 2, rng) {
            continue;
        }
        if is_probable_prime(&q, MR_ROUNDS, rng) && is_probable_prime(&p, MR_ROUNDS, rng) {
            return Ok(SafePrime { p, q });
        }
    }
    Err(max_attempts)
}
