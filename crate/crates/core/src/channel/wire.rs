//! Bit-exact datagram format.
//!
//! ```text
//! "TBT1" | version u8 | direction u8 | seq u32 | tick u32 | count u8
//!   | count x (len u16 | big-endian integer bytes)
//!   | crc32 u32
//! ```
//!
//! Fixed-width fields are little-endian; the checksum covers every byte
//! before it. A plaintext payload carries 4 integers, a ciphertext payload 8
//! (`c1` then `c2` for each slot).

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::controller::SignalVector;
use crate::crypto::Ciphertext;

pub const MAGIC: [u8; 4] = *b"TBT1";
pub const VERSION: u8 = 1;
/// Integers are bounded by a 2048-bit modulus.
pub const MAX_INT_BYTES: usize = 256;
const HEADER_LEN: usize = 4 + 1 + 1 + 4 + 4 + 1;
const CRC_LEN: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported wire version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown direction byte {0}")]
    BadDirection(u8),
    #[error("payload count {0} (expected 4 or 8)")]
    BadCount(u8),
    #[error("message truncated: needed {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("integer of {0} bytes exceeds the 2048-bit bound")]
    OversizedInteger(usize),
    #[error("non-canonical integer encoding")]
    NonCanonical,
    #[error("crc mismatch: stored {stored:08x}, computed {computed:08x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("{0} trailing bytes after message")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Leader to follower.
    L2F,
    /// Follower to leader.
    F2L,
}

impl Direction {
    pub fn to_byte(self) -> u8 {
        match self {
            Direction::L2F => 0,
            Direction::F2L => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self, WireError> {
        match b {
            0 => Ok(Direction::L2F),
            1 => Ok(Direction::F2L),
            other => Err(WireError::BadDirection(other)),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::L2F => "L2F",
            Direction::F2L => "F2L",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// Raw IEEE-754 bit patterns of the four signals.
    Plain([u64; 4]),
    Cipher([Ciphertext; 4]),
}

impl Payload {
    pub fn from_signals(v: &SignalVector) -> Self {
        Payload::Plain(v.to_array().map(f64::to_bits))
    }

    /// The signals of a plaintext payload.
    pub fn plain_signals(&self) -> Option<SignalVector> {
        match self {
            Payload::Plain(bits) => Some(SignalVector::from_array(bits.map(f64::from_bits))),
            Payload::Cipher(_) => None,
        }
    }

    pub fn count(&self) -> u8 {
        match self {
            Payload::Plain(_) => 4,
            Payload::Cipher(_) => 8,
        }
    }

    pub fn integers(&self) -> Vec<BigUint> {
        match self {
            Payload::Plain(bits) => bits.iter().map(|&b| BigUint::from(b)).collect(),
            Payload::Cipher(cs) => cs
                .iter()
                .flat_map(|c| [c.c1.clone(), c.c2.clone()])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelMessage {
    pub seq: u32,
    pub tick: u32,
    pub direction: Direction,
    pub payload: Payload,
}

impl ChannelMessage {
    /// Checksum the message carries on the wire.
    pub fn crc(&self) -> u32 {
        let bytes = serialize(self);
        u32::from_le_bytes(bytes[bytes.len() - CRC_LEN..].try_into().unwrap())
    }
}

fn int_bytes(n: &BigUint) -> Vec<u8> {
    if n.is_zero() {
        Vec::new()
    } else {
        n.to_bytes_be()
    }
}

pub fn serialize(msg: &ChannelMessage) -> Vec<u8> {
    let ints = msg.payload.integers();
    let mut out = Vec::with_capacity(HEADER_LEN + ints.len() * 12 + CRC_LEN);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg.direction.to_byte());
    out.extend_from_slice(&msg.seq.to_le_bytes());
    out.extend_from_slice(&msg.tick.to_le_bytes());
    out.push(msg.payload.count());
    for n in &ints {
        let b = int_bytes(n);
        assert!(b.len() <= MAX_INT_BYTES, "payload integer exceeds 2048 bits");
        out.extend_from_slice(&(b.len() as u16).to_le_bytes());
        out.extend_from_slice(&b);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(WireError::Truncated {
                needed: end,
                have: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<ChannelMessage, WireError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(WireError::UnsupportedVersion(version));
    }
    let direction = Direction::from_byte(r.u8()?)?;
    let seq = r.u32()?;
    let tick = r.u32()?;
    let count = r.u8()?;
    if count != 4 && count != 8 {
        return Err(WireError::BadCount(count));
    }
    let mut ints = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = r.u16()? as usize;
        if len > MAX_INT_BYTES {
            return Err(WireError::OversizedInteger(len));
        }
        let b = r.take(len)?;
        if b.first() == Some(&0) {
            return Err(WireError::NonCanonical);
        }
        ints.push(BigUint::from_bytes_be(b));
    }
    let body_end = r.pos;
    let stored = r.u32()?;
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(WireError::CrcMismatch { stored, computed });
    }
    if r.pos != bytes.len() {
        return Err(WireError::TrailingBytes(bytes.len() - r.pos));
    }

    let payload = if count == 4 {
        let mut bits = [0u64; 4];
        for (slot, n) in bits.iter_mut().zip(&ints) {
            *slot = u64::try_from(n).map_err(|_| WireError::OversizedInteger(n.bits().div_ceil(8) as usize))?;
        }
        Payload::Plain(bits)
    } else {
        let mut it = ints.into_iter();
        Payload::Cipher(std::array::from_fn(|_| Ciphertext {
            c1: it.next().unwrap(),
            c2: it.next().unwrap(),
        }))
    };
    Ok(ChannelMessage {
        seq,
        tick,
        direction,
        payload,
    })
}

/// Append one record of a message log: `u32` little-endian length, then the frame.
pub fn append_log_record(log: &mut Vec<u8>, frame: &[u8]) {
    log.extend_from_slice(&(frame.len() as u32).to_le_bytes());
    log.extend_from_slice(frame);
}

/// Split a message log into frames. Frames are not validated here.
pub fn split_log(log: &[u8]) -> Result<Vec<&[u8]>, WireError> {
    let mut r = Reader { buf: log, pos: 0 };
    let mut frames = Vec::new();
    while r.pos < log.len() {
        let len = r.u32()? as usize;
        frames.push(r.take(len)?);
    }
    Ok(frames)
}

/// Hex dump in 16-byte rows with offsets.
pub fn hex_dump(bytes: &[u8]) -> String {
    let mut s = String::new();
    for (i, row) in bytes.chunks(16).enumerate() {
        let hex: Vec<String> = row.iter().map(|b| format!("{b:02x}")).collect();
        s.push_str(&format!("{:06x}  {}\n", i * 16, hex.join(" ")));
    }
    s
}
