use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use tbt_core::attackability::{check_automorphism as check, enumerate_sign_candidates, CandidateTransform, CheckOptions};
use tbt_core::channel::wire::{hex_dump, split_log};
use tbt_core::channel::{deserialize, ChannelMessage, Payload, SignalCodec};
use tbt_core::crypto::{format_key, keygen as generate, read_key_file};
use tbt_core::ManipulatorParams;

use crate::options::Switch;
use crate::{CliError, CliResult, Status};

fn parse_candidate(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let vals: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == 2 && v.iter().all(|x| *x != 0.0 && x.is_finite()) => Ok([v[0], v[1]]),
        _ => Err(format!("expected two non-zero numbers A,B, got `{s}`")),
    }
}

#[derive(Args)]
pub struct AutomorphismArgs {
    #[arg(long, value_enum, default_value = "off")]
    pub gravity_comp: Switch,
    /// Diagonal candidate to test; repeatable. Without it the four sign
    /// patterns are scanned.
    #[arg(long, value_name = "A,B", value_parser = parse_candidate, allow_hyphen_values = true)]
    pub candidate: Vec<[f64; 2]>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

pub fn check_automorphism(args: AutomorphismArgs) -> CliResult {
    if args.samples == 0 || !(args.tol > 0.0) {
        return Err(CliError::Usage("--samples and --tol must be positive".into()));
    }
    let params = ManipulatorParams::default();
    let gc = args.gravity_comp.on();
    let opts = CheckOptions {
        n_samples: args.samples,
        tol: args.tol,
        seed: args.seed,
        ..CheckOptions::default()
    };
    let explicit = !args.candidate.is_empty();
    let results = if explicit {
        args.candidate
            .iter()
            .map(|&[a, b]| {
                let c = CandidateTransform::diagonal(a, b);
                (c, check(&c, &params, gc, &opts))
            })
            .collect()
    } else {
        enumerate_sign_candidates(&params, gc, &opts)
    };

    if args.json {
        let rows: Vec<_> = results
            .iter()
            .map(|(c, r)| json!({ "candidate": c.phi_x, "report": r }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&rows).map_err(CliError::runtime)?);
    } else {
        println!("gravity compensation {}", if gc { "on" } else { "off" });
        for (c, r) in &results {
            let verdict = if r.pass { "automorphism" } else { "rejected" };
            println!(
                "{:<18} {:<13} residual {:.3e} (yaw {:.3e}, pitch {:.3e})",
                c.to_string(),
                verdict,
                r.max_residual,
                r.joint_residual[0],
                r.joint_residual[1]
            );
        }
    }
    let all_pass = results.iter().all(|(_, r)| r.pass);
    Ok(if explicit && !all_pass { Status::Fail } else { Status::Ok })
}

#[derive(Args)]
pub struct KeygenArgs {
    /// Bit length of the safe prime.
    #[arg(long, default_value_t = 64)]
    pub bits: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave the secret exponent out.
    #[arg(long)]
    pub public_only: bool,
}

pub fn keygen(args: KeygenArgs) -> CliResult {
    let (pk, sk) = generate(args.bits, args.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let text = format_key(&pk, (!args.public_only).then_some(&sk));
    match &args.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            eprintln!("wrote {}-bit key to {}", pk.bits(), path.display());
        }
        None => print!("{text}"),
    }
    Ok(Status::Ok)
}

#[derive(Args)]
pub struct InspectArgs {
    /// A wire log (length-prefixed records) or a single raw frame.
    pub file: PathBuf,
    /// Show only this record (0-based).
    #[arg(long)]
    pub record: Option<usize>,
    /// Include a hex dump of each frame.
    #[arg(long)]
    pub hex: bool,
    /// Key file used to decrypt ciphertext payloads.
    #[arg(long)]
    pub key_file: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub gamma: u32,
    #[arg(long)]
    pub json: bool,
}

fn describe(idx: usize, frame: &[u8], msg: &ChannelMessage, codec: Option<&SignalCodec>) -> serde_json::Value {
    let kind = match msg.payload {
        Payload::Plain(_) => "plaintext",
        Payload::Cipher(_) => "ciphertext",
    };
    let mut v = json!({
        "record": idx,
        "bytes": frame.len(),
        "seq": msg.seq,
        "tick": msg.tick,
        "direction": msg.direction.as_str(),
        "payload": kind,
        "crc": format!("{:08x}", msg.crc()),
    });
    let signals = match (&msg.payload, codec) {
        (Payload::Plain(_), _) => msg.payload.plain_signals().map(|s| s.to_array()),
        (Payload::Cipher(_), Some(c)) => Some(c.decode(&msg.payload).signals.to_array()),
        (Payload::Cipher(_), None) => None,
    };
    if let Some(s) = signals {
        v["signals"] = json!(s);
    } else {
        let bits: Vec<u64> = msg.payload.integers().iter().map(|n| n.bits()).collect();
        v["integer_bits"] = json!(bits);
    }
    v
}

pub fn inspect_wire(args: InspectArgs) -> CliResult {
    let bytes = fs::read(&args.file).map_err(|e| CliError::Runtime(format!("{}: {e}", args.file.display())))?;
    let frames: Vec<&[u8]> = if bytes.starts_with(b"TBT1") {
        vec![&bytes]
    } else {
        split_log(&bytes).map_err(|e| CliError::Runtime(format!("not a wire log: {e}")))?
    };
    let codec = match &args.key_file {
        Some(path) => {
            let (pk, sk) = read_key_file(path).map_err(CliError::runtime)?;
            let sk = sk.ok_or_else(|| CliError::Usage("key file has no secret exponent".into()))?;
            Some(SignalCodec::ciphertext(pk, sk, args.gamma, 0).map_err(CliError::runtime)?)
        }
        None => None,
    };
    if let Some(r) = args.record {
        if r >= frames.len() {
            return Err(CliError::Usage(format!("record {r} out of range ({} records)", frames.len())));
        }
    }

    let mut invalid = 0usize;
    let mut out = Vec::new();
    for (i, frame) in frames.iter().enumerate() {
        if args.record.is_some_and(|r| r != i) {
            continue;
        }
        let mut entry = match deserialize(frame) {
            Ok(msg) => describe(i, frame, &msg, codec.as_ref()),
            Err(e) => {
                invalid += 1;
                json!({ "record": i, "bytes": frame.len(), "error": e.to_string() })
            }
        };
        if args.hex {
            entry["hex"] = json!(hex_dump(frame));
        }
        out.push(entry);
    }

    if args.json {
        let doc = json!({ "records": frames.len(), "invalid": invalid, "frames": out });
        println!("{}", serde_json::to_string_pretty(&doc).map_err(CliError::runtime)?);
    } else {
        for e in &out {
            if let Some(err) = e.get("error") {
                println!("#{} invalid ({} bytes): {}", e["record"], e["bytes"], err.as_str().unwrap_or(""));
            } else {
                let body = match e.get("signals") {
                    Some(s) => format!("signals {s}"),
                    None => format!("integer bits {}", e["integer_bits"]),
                };
                println!(
                    "#{} seq {} tick {} {} {} crc {} {}",
                    e["record"],
                    e["seq"],
                    e["tick"],
                    e["direction"].as_str().unwrap_or(""),
                    e["payload"].as_str().unwrap_or(""),
                    e["crc"].as_str().unwrap_or(""),
                    body
                );
            }
            if let Some(h) = e.get("hex").and_then(|h| h.as_str()) {
                print!("{h}");
            }
        }
        println!("{} records, {} invalid", frames.len(), invalid);
    }
    Ok(if invalid > 0 { Status::Fail } else { Status::Ok })
}
