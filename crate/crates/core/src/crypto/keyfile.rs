//! Plain-text key files.
//!
//! One `name=value` line per field, values in decimal, in the fixed order
//! `p`, `q`, `gen`, `h` and optionally `s`. Lines starting with `#` are
//! comments.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigUint;

use super::elgamal::{PublicKey, SecretKey};
use super::CryptoError;

pub const KEY_FIELDS: [&str; 5] = ["p", "q", "gen", "h", "s"];

pub fn format_key(pk: &PublicKey, sk: Option<&SecretKey>) -> String {
    let mut out = String::from("# tbt elgamal key\n");
    let values = [pk.p(), pk.q(), pk.generator(), pk.h()];
    for (name, value) in KEY_FIELDS.iter().zip(values) {
        writeln!(out, "{name}={value}").unwrap();
    }
    if let Some(sk) = sk {
        writeln!(out, "s={}", sk.exponent()).unwrap();
    }
    out
}

pub fn parse_key(text: &str) -> Result<(PublicKey, Option<SecretKey>), CryptoError> {
    let mut values: Vec<BigUint> = Vec::with_capacity(5);
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |why: String| CryptoError::KeyFile(format!("line {}: {why}", lineno + 1));
        let (name, value) = line
            .split_once('=')
            .ok_or_else(|| bad("expected name=value".into()))?;
        let expected = KEY_FIELDS
            .get(values.len())
            .ok_or_else(|| bad("too many fields".into()))?;
        if name.trim() != *expected {
            return Err(bad(format!("expected field `{expected}`, found `{}`", name.trim())));
        }
        let value = value.trim();
        if value.is_empty() || !value.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(format!("`{value}` is not a decimal integer")));
        }
        values.push(BigUint::parse_bytes(value.as_bytes(), 10).expect("digits checked"));
    }
    if values.len() < 4 {
        return Err(CryptoError::KeyFile(format!(
            "missing field `{}`",
            KEY_FIELDS[values.len()]
        )));
    }
    let mut it = values.into_iter();
    let (p, q, gen, h) = (
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
        it.next().unwrap(),
    );
    let pk = PublicKey::from_parts(p, q, gen, h)?;
    let sk = it.next().map(|s| SecretKey::new(s, &pk)).transpose()?;
    Ok((pk, sk))
}

pub fn write_key_file(
    path: &Path,
    pk: &PublicKey,
    sk: Option<&SecretKey>,
) -> std::io::Result<()> {
    std::fs::write(path, format_key(pk, sk))
}

pub fn read_key_file(path: &Path) -> Result<(PublicKey, Option<SecretKey>), CryptoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CryptoError::KeyFile(format!("{}: {e}", path.display())))?;
    parse_key(&text)
}
