//! ElGamal cryptosystem, fixed-point signal encoding and the malleation
//! primitive used by the man-in-the-middle.

mod elgamal;
mod encoding;
mod keyfile;
pub mod prime;

use thiserror::Error;

pub use elgamal::{
    decrypt, encrypt, encrypt_with_rng, hom_mul, keygen, malleate, random_nonce, Ciphertext,
    Modulus, PublicKey, SecretKey, MAX_KEY_BITS, MIN_KEY_BITS,
};
pub use encoding::{gain_residue, Decoded, EncodingParams};
pub use keyfile::{format_key, parse_key, read_key_file, write_key_file, KEY_FIELDS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CryptoError {
    #[error("key size {0} bits outside supported range [16, 2048]")]
    KeySize(u64),
    #[error("no {bits}-bit safe prime found after {attempts} candidates")]
    PrimeSearchExhausted { bits: u64, attempts: u64 },
    #[error("invalid key: {0}")]
    InvalidKey(String),
    #[error("key file: {0}")]
    KeyFile(String),
    #[error("plaintext must lie in [1, p-1]")]
    PlaintextRange,
    #[error("nonce must lie in [1, q-1]")]
    NonceRange,
    #[error("malleation gain must be a unit modulo p")]
    DegenerateGain,
    #[error("value {0} does not fit the encoding range")]
    EncodingOverflow(f64),
    #[error("gamma = {gamma} leaves no headroom in a {bits}-bit group")]
    InvalidEncoding { gamma: u32, bits: u64 },
}
