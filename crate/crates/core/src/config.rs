//! TOML run configuration. Every key is optional; a document is layered
//! over the built-in defaults and then over by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attacker::{AffineAttack, AttackMode, ScenarioName};
use crate::crypto::read_key_file;
use crate::harness::{AttackDirections, KeySource, OperatorProfile, RunConfig, TransportKind};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub point_mass: Option<f64>,
    pub link_length: Option<f64>,
    pub yaw_inertia: Option<f64>,
    pub gravity: Option<f64>,
    pub friction: Option<[f64; 2]>,
    pub ext_torque_sign: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub kp: Option<[f64; 2]>,
    pub kd: Option<[f64; 2]>,
    pub kf: Option<[f64; 2]>,
    pub torque_limit: Option<[f64; 2]>,
    pub observer_cutoff: Option<f64>,
    /// (leader, follower)
    pub gravity_comp: Option<[bool; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingSection {
    pub gamma: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeysSection {
    pub bits: Option<u64>,
    pub seed: Option<u64>,
    /// Key file holding both halves; overrides `bits` and `seed`.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionChoice {
    Both,
    Leader,
    Follower,
}

impl From<DirectionChoice> for AttackDirections {
    fn from(d: DirectionChoice) -> Self {
        match d {
            DirectionChoice::Both => AttackDirections::Both,
            DirectionChoice::Leader => AttackDirections::LeaderOnly,
            DirectionChoice::Follower => AttackDirections::FollowerOnly,
        }
    }
}

impl From<AttackDirections> for DirectionChoice {
    fn from(d: AttackDirections) -> Self {
        match d {
            AttackDirections::Both => DirectionChoice::Both,
            AttackDirections::LeaderOnly => DirectionChoice::Leader,
            AttackDirections::FollowerOnly => DirectionChoice::Follower,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: Option<ScenarioName>,
    pub mode: Option<AttackMode>,
    /// Attack start (s).
    pub onset: Option<f64>,
    pub direction: Option<DirectionChoice>,
    pub pitch_lock: Option<bool>,
    pub ic_offsets: Option<bool>,
    pub duration: Option<f64>,
    pub seed: Option<u64>,
    pub leader_initial: Option<[f64; 2]>,
    pub follower_initial: Option<[f64; 2]>,
    /// Row-major 4x4 matrix then 4 offsets, applied to follower-to-leader
    /// traffic. Must be given together with `follower_attack`.
    pub leader_attack: Option<Vec<f64>>,
    /// Same layout, applied to leader-to-follower traffic.
    pub follower_attack: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportChoice {
    Loopback,
    Udp,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportSection {
    pub kind: Option<TransportChoice>,
    pub base_delay_ms: Option<f64>,
    pub jitter_ms: Option<f64>,
    pub drop_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub amplitude: Option<f64>,
    pub period: Option<f64>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub yaw: Option<SegmentSection>,
    pub pitch: Option<SegmentSection>,
    pub stiffness: Option<[f64; 2]>,
    pub damping: Option<[f64; 2]>,
}

/// Wall angles are in degrees here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallAxisSection {
    pub enabled: Option<bool>,
    pub angle_deg: Option<f64>,
    pub stiffness: Option<f64>,
    pub damping: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSection {
    pub yaw: Option<WallAxisSection>,
    pub pitch: Option<WallAxisSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub params: Option<ParamsSection>,
    pub gains: Option<GainsSection>,
    pub encoding: Option<EncodingSection>,
    pub keys: Option<KeysSection>,
    pub scenario: Option<ScenarioSection>,
    pub transport: Option<TransportSection>,
    pub operator: Option<OperatorSection>,
    pub wall: Option<WallSection>,
}

fn set<T: Copy>(dst: &mut T, src: Option<T>) {
    if let Some(v) = src {
        *dst = v;
    }
}

fn apply_segment(dst: &mut crate::harness::SinusoidSegment, s: &SegmentSection) {
    set(&mut dst.amplitude, s.amplitude);
    set(&mut dst.period, s.period);
    set(&mut dst.start, s.start);
    set(&mut dst.stop, s.stop);
}

fn apply_wall(dst: &mut crate::harness::WallAxis, s: &WallAxisSection) {
    set(&mut dst.enabled, s.enabled);
    if let Some(deg) = s.angle_deg {
        dst.angle = deg.to_radians();
    }
    set(&mut dst.stiffness, s.stiffness);
    set(&mut dst.damping, s.damping);
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Layer this document over `cfg`. Relative key-file paths resolve
    /// against `base_dir`.
    pub fn apply(&self, cfg: &mut RunConfig, base_dir: &Path) -> Result<(), ConfigError> {
        if let Some(p) = &self.params {
            set(&mut cfg.params.point_mass, p.point_mass);
            set(&mut cfg.params.link_length, p.link_length);
            set(&mut cfg.params.yaw_inertia, p.yaw_inertia);
            set(&mut cfg.params.gravity, p.gravity);
            set(&mut cfg.params.friction, p.friction);
            set(&mut cfg.params.ext_torque_sign, p.ext_torque_sign);
        }
        if let Some(g) = &self.gains {
            set(&mut cfg.gains.kp, g.kp);
            set(&mut cfg.gains.kd, g.kd);
            set(&mut cfg.gains.kf, g.kf);
            set(&mut cfg.gains.torque_limit, g.torque_limit);
            set(&mut cfg.observer_cutoff, g.observer_cutoff);
            set(&mut cfg.gravity_comp, g.gravity_comp);
        }
        if let Some(e) = &self.encoding {
            set(&mut cfg.gamma, e.gamma);
        }
        if let Some(k) = &self.keys {
            if let Some(file) = &k.file {
                let path = base_dir.join(file);
                let (pk, sk) = read_key_file(&path)
                    .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
                let sk = sk.ok_or_else(|| {
                    ConfigError::Invalid(format!("{}: no secret key", path.display()))
                })?;
                cfg.keys = KeySource::Pair(pk, sk);
            } else if k.bits.is_some() || k.seed.is_some() {
                let (mut bits, mut seed) = match cfg.keys {
                    KeySource::Generate { bits, seed } => (bits, seed),
                    KeySource::Pair(..) => (64, 1),
                };
                set(&mut bits, k.bits);
                set(&mut seed, k.seed);
                cfg.keys = KeySource::Generate { bits, seed };
            }
        }
        if let Some(s) = &self.scenario {
            set(&mut cfg.scenario, s.name);
            set(&mut cfg.mode, s.mode);
            set(&mut cfg.onset, s.onset);
            if let Some(d) = s.direction {
                cfg.directions = d.into();
            }
            set(&mut cfg.pitch_lock, s.pitch_lock);
            set(&mut cfg.ic_offsets, s.ic_offsets);
            set(&mut cfg.duration, s.duration);
            set(&mut cfg.seed, s.seed);
            set(&mut cfg.leader_initial, s.leader_initial);
            set(&mut cfg.follower_initial, s.follower_initial);
            match (&s.leader_attack, &s.follower_attack) {
                (Some(l), Some(f)) => {
                    let parse = |v: &[f64], which: &str| {
                        AffineAttack::from_flat(v)
                            .map_err(|e| ConfigError::Invalid(format!("scenario.{which}: {e}")))
                    };
                    cfg.custom_attack = Some((parse(l, "leader_attack")?, parse(f, "follower_attack")?));
                }
                (None, None) => {}
                _ => {
                    return Err(ConfigError::Invalid(
                        "scenario.leader_attack and scenario.follower_attack go together".into(),
                    ))
                }
            }
        }
        if let Some(t) = &self.transport {
            if let Some(kind) = t.kind {
                cfg.transport = match kind {
                    TransportChoice::Loopback => TransportKind::Loopback,
                    TransportChoice::Udp => TransportKind::Udp,
                };
            }
            set(&mut cfg.latency.base_delay_ms, t.base_delay_ms);
            set(&mut cfg.latency.jitter_ms, t.jitter_ms);
            set(&mut cfg.latency.drop_rate, t.drop_rate);
        }
        if let Some(o) = &self.operator {
            if let Some(y) = &o.yaw {
                apply_segment(&mut cfg.operator.yaw, y);
            }
            if let Some(p) = &o.pitch {
                apply_segment(&mut cfg.operator.pitch, p);
            }
            set(&mut cfg.operator.stiffness, o.stiffness);
            set(&mut cfg.operator.damping, o.damping);
        }
        if let Some(w) = &self.wall {
            if let Some(y) = &w.yaw {
                apply_wall(&mut cfg.wall.yaw, y);
            }
            if let Some(p) = &w.pitch {
                apply_wall(&mut cfg.wall.pitch, p);
            }
        }
        Ok(())
    }

    /// Fully populated document describing `cfg`. A key pair loaded from a
    /// file is shown as its bit length with no seed.
    pub fn describe(cfg: &RunConfig) -> Self {
        let (bits, seed) = match &cfg.keys {
            KeySource::Generate { bits, seed } => (*bits, Some(*seed)),
            KeySource::Pair(pk, _) => (pk.bits(), None),
        };
        let seg = |s: &crate::harness::SinusoidSegment| SegmentSection {
            amplitude: Some(s.amplitude),
            period: Some(s.period),
            start: Some(s.start),
            stop: Some(s.stop),
        };
        let wall = |w: &crate::harness::WallAxis| WallAxisSection {
            enabled: Some(w.enabled),
            // Trim the radian round-trip noise.
            angle_deg: Some((w.angle.to_degrees() * 1e9).round() / 1e9),
            stiffness: Some(w.stiffness),
            damping: Some(w.damping),
        };
        let flat = |a: &AffineAttack| -> Vec<f64> {
            a.matrix.iter().flatten().chain(&a.offset).copied().collect()
        };
        let op: &OperatorProfile = &cfg.operator;
        Self {
            params: Some(ParamsSection {
                point_mass: Some(cfg.params.point_mass),
                link_length: Some(cfg.params.link_length),
                yaw_inertia: Some(cfg.params.yaw_inertia),
                gravity: Some(cfg.params.gravity),
                friction: Some(cfg.params.friction),
                ext_torque_sign: Some(cfg.params.ext_torque_sign),
            }),
            gains: Some(GainsSection {
                kp: Some(cfg.gains.kp),
                kd: Some(cfg.gains.kd),
                kf: Some(cfg.gains.kf),
                torque_limit: Some(cfg.gains.torque_limit),
                observer_cutoff: Some(cfg.observer_cutoff),
                gravity_comp: Some(cfg.gravity_comp),
            }),
            encoding: Some(EncodingSection {
                gamma: Some(cfg.gamma),
            }),
            keys: Some(KeysSection {
                bits: Some(bits),
                seed,
                file: None,
            }),
            scenario: Some(ScenarioSection {
                name: Some(cfg.scenario),
                mode: Some(cfg.mode),
                onset: Some(cfg.onset),
                direction: Some(cfg.directions.into()),
                pitch_lock: Some(cfg.pitch_lock),
                ic_offsets: Some(cfg.ic_offsets),
                duration: Some(cfg.duration),
                seed: Some(cfg.seed),
                leader_initial: Some(cfg.leader_initial),
                follower_initial: Some(cfg.follower_initial),
                leader_attack: cfg.custom_attack.as_ref().map(|c| flat(&c.0)),
                follower_attack: cfg.custom_attack.as_ref().map(|c| flat(&c.1)),
            }),
            transport: Some(TransportSection {
                kind: Some(match cfg.transport {
                    TransportKind::Loopback => TransportChoice::Loopback,
                    TransportKind::Udp => TransportChoice::Udp,
                }),
                base_delay_ms: Some(cfg.latency.base_delay_ms),
                jitter_ms: Some(cfg.latency.jitter_ms),
                drop_rate: Some(cfg.latency.drop_rate),
            }),
            operator: Some(OperatorSection {
                yaw: Some(seg(&op.yaw)),
                pitch: Some(seg(&op.pitch)),
                stiffness: Some(op.stiffness),
                damping: Some(op.damping),
            }),
            wall: Some(WallSection {
                yaw: Some(wall(&cfg.wall.yaw)),
                pitch: Some(wall(&cfg.wall.pitch)),
            }),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config documents always serialize")
    }

    /// `section.key` to rendered value, for every key present.
    pub fn flatten(&self) -> BTreeMap<String, String> {
        let value = toml::Value::try_from(self).expect("config documents always serialize");
        let mut out = BTreeMap::new();
        flatten_into("", &value, &mut out);
        out
    }
}

fn flatten_into(prefix: &str, v: &toml::Value, out: &mut BTreeMap<String, String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten_into(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}
