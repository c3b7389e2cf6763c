mod common;

use tbt_core::attacker::{scenario_config, ScenarioName};
use tbt_core::channel::wire::{append_log_record, split_log};
use tbt_core::channel::{
    deserialize, serialize, LatestReceiver, MitmProxy, Payload, SignalCodec, WireError,
};
use tbt_core::crypto::keygen;
use tbt_core::SignalVector;

#[test]
fn hundred_thousand_mutations_are_all_caught() {
    let r = common::fuzz_wire(100_000, 1);
    assert_eq!(r.silently_accepted, 0);
    assert_eq!(r.rejected + r.unchanged, r.mutations);
    assert!(r.rejected > 99_000);
}

#[test]
fn frames_roundtrip() {
    for f in common::sample_frames() {
        let msg = deserialize(&f).unwrap();
        assert_eq!(serialize(&msg), f);
    }
}

#[test]
fn log_records_split_back_into_frames() {
    let frames = common::sample_frames();
    let mut log = Vec::new();
    for f in &frames {
        append_log_record(&mut log, f);
    }
    let parts = split_log(&log).unwrap();
    assert_eq!(parts.len(), frames.len());
    for (a, b) in parts.iter().zip(&frames) {
        assert_eq!(*a, b.as_slice());
    }
    assert!(split_log(&log[..log.len() - 1]).is_err());
}

#[test]
fn ciphertext_proxy_reflects_without_keys() {
    let (pk, sk) = keygen(64, 8).unwrap();
    let mut tx = SignalCodec::ciphertext(pk.clone(), sk.clone(), 16, 5).unwrap();
    let rx = SignalCodec::ciphertext(pk.clone(), sk, 16, 6).unwrap();
    // the proxy is handed only the modulus
    let mut proxy = MitmProxy::new(scenario_config(ScenarioName::Reflection), Some(pk.modulus()), 0).unwrap();
    let v = SignalVector::new(0.3, -0.2, 0.05, 0.7);
    let frame = serialize(&tbt_core::channel::ChannelMessage {
        seq: 1,
        tick: 1,
        direction: tbt_core::channel::Direction::L2F,
        payload: tx.encode(&v).unwrap(),
    });
    let out = deserialize(&proxy.forward_bytes(&frame).unwrap()).unwrap();
    let got = rx.decode(&out.payload);
    let want = rx.quantize(&SignalVector::new(-0.3, -0.2, -0.05, 0.7)).unwrap();
    assert_eq!(got.signals, want);
    assert!(!got.any_implausible());
}

#[test]
fn receiver_keeps_only_newer_frames() {
    let mut rx = LatestReceiver::new();
    let frame = |seq: u32| {
        serialize(&tbt_core::channel::ChannelMessage {
            seq,
            tick: seq,
            direction: tbt_core::channel::Direction::F2L,
            payload: Payload::from_signals(&SignalVector::new(seq as f64, 0.0, 0.0, 0.0)),
        })
    };
    let mut delivered = Vec::new();
    for seq in [1, 3, 2, 3, 5, 4, 6] {
        if let Some(m) = rx.offer(&frame(seq)).unwrap() {
            delivered.push(m.tick);
        }
    }
    assert_eq!(delivered, [1, 3, 5, 6]);
    assert!(delivered.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(rx.stale_dropped(), 3);
    let mut bad = frame(9);
    bad[0] = b'X';
    assert!(matches!(rx.offer(&bad), Err(WireError::BadMagic(_))));
    assert_eq!(rx.corrupt_dropped(), 1);
}
