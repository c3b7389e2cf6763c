#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tbt_core::channel::{deserialize, serialize, ChannelMessage, Direction, SignalCodec};
use tbt_core::crypto::keygen;
use tbt_core::SignalVector;

/// A plaintext and a ciphertext frame to mutate.
pub fn sample_frames() -> Vec<Vec<u8>> {
    let v = SignalVector::new(0.125, -0.5, 1.0 / 3.0, -0.0);
    let (pk, sk) = keygen(64, 3).unwrap();
    let mut cipher = SignalCodec::ciphertext(pk, sk, 16, 77).unwrap();
    let mut plain = SignalCodec::plaintext();
    [&mut plain, &mut cipher]
        .into_iter()
        .enumerate()
        .map(|(i, codec)| {
            serialize(&ChannelMessage {
                seq: 41 + i as u32,
                tick: 40,
                direction: if i == 0 { Direction::L2F } else { Direction::F2L },
                payload: codec.encode(&v).unwrap(),
            })
        })
        .collect()
}

fn mutate(frame: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut out = frame.to_vec();
    let rounds = rng.gen_range(1..=3);
    for _ in 0..rounds {
        let len = out.len();
        match rng.gen_range(0..6) {
            0 if len > 0 => {
                let i = rng.gen_range(0..len);
                out[i] ^= 1 << rng.gen_range(0..8);
            }
            1 if len > 0 => {
                let i = rng.gen_range(0..len);
                out[i] = rng.gen();
            }
            2 if len > 0 => out.truncate(rng.gen_range(0..len)),
            3 => {
                let i = rng.gen_range(0..=len);
                out.insert(i, rng.gen());
            }
            4 if len > 0 => {
                out.remove(rng.gen_range(0..len));
            }
            _ => {
                let extra = rng.gen_range(1..8);
                out.extend((0..extra).map(|_| rng.gen::<u8>()));
            }
        }
    }
    out
}

pub struct FuzzOutcome {
    pub mutations: usize,
    pub rejected: usize,
    /// Mutations that happened to leave the bytes unchanged.
    pub unchanged: usize,
    /// Altered frames that deserialized anyway.
    pub silently_accepted: usize,
}

pub fn fuzz_wire(mutations: usize, seed: u64) -> FuzzOutcome {
    let frames = sample_frames();
    for f in &frames {
        assert!(deserialize(f).is_ok());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = FuzzOutcome {
        mutations,
        rejected: 0,
        unchanged: 0,
        silently_accepted: 0,
    };
    for k in 0..mutations {
        let base = &frames[k % frames.len()];
        let m = mutate(base, &mut rng);
        if &m == base {
            out.unchanged += 1;
            continue;
        }
        match deserialize(&m) {
            Err(_) => out.rejected += 1,
            Ok(_) => out.silently_accepted += 1,
        }
    }
    out
}
