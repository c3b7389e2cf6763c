//! Simulation flags shared by `run` and `node`, and their merge with the
//! config file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use tbt_core::config::{
    ConfigDocument, DirectionChoice, EncodingSection, GainsSection, KeysSection, ScenarioSection,
    TransportChoice, TransportSection, WallAxisSection, WallSection,
};
use tbt_core::harness::RunConfig;
use tbt_core::{AttackMode, ScenarioName};

use crate::CliError;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn on(self) -> bool {
        self == Switch::On
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScenarioArg {
    Normal,
    Reflection,
    Scaling,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Plaintext,
    Ciphertext,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TransportArg {
    Loopback,
    Udp,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Both,
    Leader,
    Follower,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected YAW,PITCH, got `{s}`"));
    }
    let f = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok([f(parts[0])?, f(parts[1])?])
}

#[derive(Args, Clone)]
pub struct SimOptions {
    /// TOML config file layered over the defaults; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the merged configuration as TOML and exit.
    #[arg(long)]
    pub show_config: bool,
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub transport: Option<TransportArg>,
    /// Enable the contact wall on both axes.
    #[arg(long, value_enum)]
    pub wall: Option<Switch>,
    /// Gravity compensation on both robots.
    #[arg(long, value_enum)]
    pub gravity_comp: Option<Switch>,
    /// Simulated time (s).
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Attack start (s).
    #[arg(long)]
    pub onset: Option<f64>,
    /// Which traffic the attacker rewrites.
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    /// Hold the pitch joints fixed.
    #[arg(long)]
    pub pitch_lock: bool,
    /// Leave the initial-yaw offsets out of the reflection attack.
    #[arg(long)]
    pub no_ic_offsets: bool,
    /// Leader initial angles (rad).
    #[arg(long, value_name = "YAW,PITCH", value_parser = parse_pair, allow_hyphen_values = true)]
    pub leader_initial: Option<[f64; 2]>,
    /// Follower initial angles (rad).
    #[arg(long, value_name = "YAW,PITCH", value_parser = parse_pair, allow_hyphen_values = true)]
    pub follower_initial: Option<[f64; 2]>,
    /// Fixed-point fraction bits.
    #[arg(long)]
    pub gamma: Option<u32>,
    #[arg(long)]
    pub key_bits: Option<u64>,
    #[arg(long)]
    pub key_seed: Option<u64>,
    /// Key file with both halves; overrides key bits and seed.
    #[arg(long, value_name = "FILE")]
    pub key_file: Option<PathBuf>,
    /// One-way link delay (ms).
    #[arg(long)]
    pub delay_ms: Option<f64>,
    #[arg(long)]
    pub jitter_ms: Option<f64>,
    #[arg(long)]
    pub drop_rate: Option<f64>,
    /// Derivative gain on both joints.
    #[arg(long)]
    pub kd: Option<f64>,
}

impl SimOptions {
    fn overrides(&self) -> ConfigDocument {
        let scenario = ScenarioSection {
            name: self.scenario.map(|s| match s {
                ScenarioArg::Normal => ScenarioName::Normal,
                ScenarioArg::Reflection => ScenarioName::Reflection,
                ScenarioArg::Scaling => ScenarioName::Scaling,
            }),
            mode: self.mode.map(|m| match m {
                ModeArg::Plaintext => AttackMode::Plaintext,
                ModeArg::Ciphertext => AttackMode::Ciphertext,
            }),
            onset: self.onset,
            direction: self.direction.map(|d| match d {
                DirectionArg::Both => DirectionChoice::Both,
                DirectionArg::Leader => DirectionChoice::Leader,
                DirectionArg::Follower => DirectionChoice::Follower,
            }),
            pitch_lock: self.pitch_lock.then_some(true),
            ic_offsets: self.no_ic_offsets.then_some(false),
            duration: self.duration,
            seed: self.seed,
            leader_initial: self.leader_initial,
            follower_initial: self.follower_initial,
            ..ScenarioSection::default()
        };
        let wall_axis = |on: bool| WallAxisSection {
            enabled: Some(on),
            ..WallAxisSection::default()
        };
        ConfigDocument {
            gains: Some(GainsSection {
                kd: self.kd.map(|k| [k, k]),
                gravity_comp: self.gravity_comp.map(|s| [s.on(), s.on()]),
                ..GainsSection::default()
            }),
            encoding: Some(EncodingSection { gamma: self.gamma }),
            keys: Some(KeysSection {
                bits: self.key_bits,
                seed: self.key_seed,
                file: self.key_file.clone(),
            }),
            scenario: Some(scenario),
            transport: Some(TransportSection {
                kind: self.transport.map(|t| match t {
                    TransportArg::Loopback => TransportChoice::Loopback,
                    TransportArg::Udp => TransportChoice::Udp,
                }),
                base_delay_ms: self.delay_ms,
                jitter_ms: self.jitter_ms,
                drop_rate: self.drop_rate,
            }),
            wall: self.wall.map(|w| WallSection {
                yaw: Some(wall_axis(w.on())),
                pitch: Some(wall_axis(w.on())),
            }),
            ..ConfigDocument::default()
        }
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let doc = ConfigDocument::load(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new("."));
            doc.apply(&mut cfg, base).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        self.overrides()
            .apply(&mut cfg, Path::new("."))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

pub fn show_config(cfg: &RunConfig) {
    print!("{}", ConfigDocument::describe(cfg).to_toml());
}
