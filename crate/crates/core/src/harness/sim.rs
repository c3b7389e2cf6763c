//! The two-robot closed loop on a single logical timeline.
//!
//! Order of events in tick `k` (time `k * 20 ms`):
//! 1. both robots measure their state and update their observers;
//! 2. each encodes (or encrypts) its signal vector into a message;
//! 3. the message enters the network and passes the proxy, which may rewrite it;
//! 4. frames due by now are delivered; each receiver keeps the newest;
//! 5. both controllers compute a command from the held remote vector;
//! 6. both plants are integrated over the tick in 1 ms RK4 substeps with
//!    the command held and external torques re-evaluated per substep;
//! 7. the row is logged.

use std::time::Duration;

use thiserror::Error;

use super::environment::{operator_torque, wall_torque, OperatorProfile, WallModel};
use super::trace::{RobotSample, TraceLog, TraceRow};
use crate::attacker::{
    scenario_config, AffineAttack, AttackError, AttackMode, AttackScenario, ScenarioName,
};
use crate::channel::codec::{DecodedSignals, SignalCodec};
use crate::channel::proxy::{MitmProxy, ProxyError};
use crate::channel::transport::{LatencyModel, LatestReceiver, Link, LoopbackLink, UdpLink};
use crate::channel::wire::{self, deserialize, serialize, ChannelMessage, Direction};
use crate::controller::{BilateralController, ControllerGains, Side, SignalVector};
use crate::crypto::{keygen, CryptoError, PublicKey, SecretKey};
use crate::dynamics::{
    step_rk4_constrained, DynamicsError, JointState, ManipulatorParams, TorquePair,
    DEFAULT_DIVERGENCE_BOUND,
};
use crate::{CONTROL_PERIOD, PHYSICS_STEP};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Proxy(#[from] ProxyError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportKind {
    Loopback,
    Udp,
}

/// Which directions of the link the attacker rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackDirections {
    Both,
    /// Only follower-to-leader traffic.
    LeaderOnly,
    /// Only leader-to-follower traffic.
    FollowerOnly,
}

#[derive(Debug, Clone)]
pub enum KeySource {
    Generate { bits: u64, seed: u64 },
    Pair(PublicKey, SecretKey),
}

impl KeySource {
    pub fn resolve(&self) -> Result<(PublicKey, SecretKey), CryptoError> {
        match self {
            KeySource::Generate { bits, seed } => keygen(*bits, *seed),
            KeySource::Pair(pk, sk) => Ok((pk.clone(), sk.clone())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioName,
    pub mode: AttackMode,
    /// Replaces the named scenario's (leader_dir, follower_dir).
    pub custom_attack: Option<(AffineAttack, AffineAttack)>,
    pub directions: AttackDirections,
    /// Attack start time (s).
    pub onset: f64,
    /// Add the initial-yaw offsets to the reflection attack.
    pub ic_offsets: bool,
    pub pitch_lock: bool,
    pub params: ManipulatorParams,
    pub gains: ControllerGains,
    pub observer_cutoff: f64,
    /// Gravity compensation on (leader, follower).
    pub gravity_comp: [bool; 2],
    pub gamma: u32,
    pub keys: KeySource,
    pub transport: TransportKind,
    pub latency: LatencyModel,
    pub operator: OperatorProfile,
    pub wall: WallModel,
    /// Initial (yaw, pitch) of the leader and the follower (rad).
    pub leader_initial: [f64; 2],
    pub follower_initial: [f64; 2],
    pub duration: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioName::Normal,
            mode: AttackMode::Ciphertext,
            custom_attack: None,
            directions: AttackDirections::Both,
            onset: 0.0,
            ic_offsets: true,
            pitch_lock: false,
            params: ManipulatorParams::default(),
            gains: ControllerGains::default(),
            observer_cutoff: 30.0,
            gravity_comp: [true, true],
            gamma: 16,
            keys: KeySource::Generate { bits: 64, seed: 1 },
            transport: TransportKind::Loopback,
            latency: LatencyModel::default(),
            operator: OperatorProfile::default(),
            wall: WallModel::default(),
            leader_initial: [0.0, 0.0],
            follower_initial: [0.0, 0.0],
            duration: 60.0,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn tick_count(&self) -> u32 {
        (self.duration / CONTROL_PERIOD).round() as u32
    }

    pub fn onset_tick(&self) -> u32 {
        (self.onset / CONTROL_PERIOD).round() as u32
    }

    /// Same run with the attacker passive.
    pub fn baseline(&self) -> Self {
        Self {
            scenario: ScenarioName::Normal,
            custom_attack: None,
            ..self.clone()
        }
    }

    pub fn attack_scenario(&self) -> AttackScenario {
        let mut s = match self.custom_attack {
            Some((leader_dir, follower_dir)) => AttackScenario {
                name: self.scenario,
                leader_dir,
                follower_dir,
                mode: self.mode,
            },
            None => scenario_config(self.scenario).with_mode(self.mode),
        };
        if self.ic_offsets && self.custom_attack.is_none() {
            s = s.with_initial_yaw(self.leader_initial[0], self.follower_initial[0]);
        }
        match self.directions {
            AttackDirections::Both => s,
            AttackDirections::LeaderOnly => s.leader_direction_only(),
            AttackDirections::FollowerOnly => s.follower_direction_only(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive".into());
        }
        if !(self.onset >= 0.0 && self.onset.is_finite()) {
            return bad("onset must be non-negative".into());
        }
        if !(self.observer_cutoff > 0.0 && self.observer_cutoff.is_finite()) {
            return bad("observer cutoff must be positive".into());
        }
        if self
            .leader_initial
            .iter()
            .chain(&self.follower_initial)
            .any(|x| !x.is_finite())
        {
            return bad("initial angles must be finite".into());
        }
        self.params.validate()?;
        self.gains.validate().map_err(HarnessError::Config)?;
        self.latency.validate().map_err(HarnessError::Config)?;
        self.operator.validate().map_err(HarnessError::Config)?;
        self.wall.validate().map_err(HarnessError::Config)?;
        Ok(())
    }
}

/// One robot with its controller and its end of the link.
#[derive(Debug, Clone)]
pub struct Station {
    pub side: Side,
    pub state: JointState,
    pub origin: [f64; 2],
    pub controller: BilateralController,
    pub codec: SignalCodec,
    receiver: LatestReceiver,
    held: Option<DecodedSignals>,
    pitch_locked: bool,
    seq: u32,
}

impl Station {
    pub fn new(
        side: Side,
        initial: [f64; 2],
        cfg: &RunConfig,
        codec: SignalCodec,
    ) -> Self {
        let gc = match side {
            Side::Leader => cfg.gravity_comp[0],
            Side::Follower => cfg.gravity_comp[1],
        };
        Self {
            side,
            state: JointState::at_rest(initial[0], initial[1]),
            origin: initial,
            controller: BilateralController::new(side, cfg.gains, cfg.params, cfg.observer_cutoff, gc),
            codec,
            receiver: LatestReceiver::new(),
            held: None,
            pitch_locked: cfg.pitch_lock,
            seq: 0,
        }
    }

    pub fn direction(&self) -> Direction {
        match self.side {
            Side::Leader => Direction::L2F,
            Side::Follower => Direction::F2L,
        }
    }

    /// Update the observer and return the vector to transmit.
    pub fn observe(&mut self, dt: f64) -> SignalVector {
        let v = self.controller.observe(&self.state, dt);
        if self.pitch_locked {
            self.controller.clear_pitch_estimate();
            return self.controller.outgoing(&self.state);
        }
        v
    }

    pub fn message(&mut self, tick: u32, v: &SignalVector) -> Result<ChannelMessage, CryptoError> {
        let msg = ChannelMessage {
            seq: self.seq,
            tick,
            direction: self.direction(),
            payload: self.codec.encode(v)?,
        };
        self.seq = self.seq.wrapping_add(1);
        Ok(msg)
    }

    /// Offer a received frame; corrupt and stale frames are counted and ignored.
    pub fn accept(&mut self, frame: &[u8]) {
        if let Ok(Some(msg)) = self.receiver.offer(frame) {
            self.held = Some(self.codec.decode(&msg.payload));
        }
    }

    pub fn receiver(&self) -> &LatestReceiver {
        &self.receiver
    }

    /// Remote vector in use: the newest received, or the local one until
    /// anything has arrived.
    pub fn remote(&self, local: &SignalVector) -> SignalVector {
        self.held.map_or(*local, |d| d.signals)
    }

    pub fn command(&mut self, local: &SignalVector) -> (TorquePair, SignalVector) {
        let remote = self.remote(local);
        let state = self.state;
        (self.controller.command(&state, local, &remote), remote)
    }

    /// Integrate over one control period with the last command held.
    pub fn integrate(
        &mut self,
        t0: f64,
        mut external: impl FnMut(f64, &JointState) -> TorquePair,
    ) -> Result<(), DynamicsError> {
        let n = (CONTROL_PERIOD / PHYSICS_STEP).round() as usize;
        let tau = self.controller.last_applied();
        let params = self.controller.params;
        for j in 0..n {
            let t = t0 + j as f64 * PHYSICS_STEP;
            let ext = external(t, &self.state);
            self.state = step_rk4_constrained(
                &self.state,
                tau,
                ext,
                &params,
                PHYSICS_STEP,
                DEFAULT_DIVERGENCE_BOUND,
                self.pitch_locked,
            )?;
        }
        Ok(())
    }

    /// Snapshot for the trace, with `ext` the external torque now acting.
    pub fn sample(&self, ext: TorquePair) -> RobotSample {
        let est = self.controller.estimate();
        let motor = self.controller.last_applied();
        RobotSample {
            theta: [self.state.theta1, self.state.theta2],
            omega: [self.state.omega1, self.state.omega2],
            tau_hat: [est.tau1, est.tau2],
            motor: [motor.tau1, motor.tau2],
            ext: [ext.tau1, ext.tau2],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub ticks: u32,
    pub frames_dropped: u64,
    pub stale_dropped: u64,
    pub corrupt_dropped: u64,
    pub frames_rewritten: u64,
    pub implausible_ticks: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: TraceLog,
    /// Every frame as it left the proxy, as `[u32 len][frame]` records.
    pub wire_log: Vec<u8>,
    pub stats: RunStats,
    /// Set if the integration diverged; the trace then stops at that tick.
    pub aborted: Option<String>,
}

fn decoded_array(d: &DecodedSignals) -> [f64; 4] {
    d.signals.to_array()
}

/// Run one experiment to completion (or divergence).
pub fn run_scenario(cfg: &RunConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let keys = match cfg.mode {
        AttackMode::Ciphertext => Some(cfg.keys.resolve()?),
        AttackMode::Plaintext => None,
    };
    let attack = cfg.attack_scenario();
    let mut proxy = MitmProxy::new(attack, keys.as_ref().map(|(pk, _)| pk.modulus()), cfg.onset_tick())?;

    let codec = |nonce_seed: u64| -> Result<SignalCodec, CryptoError> {
        match &keys {
            Some((pk, sk)) => SignalCodec::ciphertext(pk.clone(), sk.clone(), cfg.gamma, nonce_seed),
            None => Ok(SignalCodec::plaintext()),
        }
    };
    let mut leader = Station::new(Side::Leader, cfg.leader_initial, cfg, codec(cfg.seed.wrapping_mul(2))?);
    let mut follower = Station::new(
        Side::Follower,
        cfg.follower_initial,
        cfg,
        codec(cfg.seed.wrapping_mul(2).wrapping_add(1))?,
    );

    let mut link: Box<dyn Link> = match cfg.transport {
        TransportKind::Loopback => Box::new(LoopbackLink::new(cfg.latency, cfg.seed)),
        TransportKind::Udp => Box::new(UdpLink::bind_localhost(Duration::from_millis(200))?),
    };

    let n_ticks = cfg.tick_count();
    let tick_us = (CONTROL_PERIOD * 1e6).round() as u64;
    let mut trace = TraceLog::default();
    let mut wire_log = Vec::new();
    let mut aborted = None;
    let params = cfg.params;

    for k in 0..n_ticks {
        let t = k as f64 * CONTROL_PERIOD;
        let now = k as u64 * tick_us;

        let out_l = leader.observe(CONTROL_PERIOD);
        let out_f = follower.observe(CONTROL_PERIOD);
        let msg_l = leader.message(k, &out_l)?;
        let msg_f = follower.message(k, &out_f)?;
        let pre_l2f = follower.codec.decode(&msg_l.payload);
        let pre_f2l = leader.codec.decode(&msg_f.payload);

        link.send(Direction::L2F, now, &serialize(&msg_l))?;
        link.send(Direction::F2L, now, &serialize(&msg_f))?;

        let mut post: [Option<Vec<u8>>; 2] = [None, None];
        for dir in [Direction::L2F, Direction::F2L] {
            let mut failure = None;
            let slot = &mut post[dir.to_byte() as usize];
            link.relay(dir, now, &mut |frame: &[u8]| match proxy.forward_bytes(frame) {
                Ok(out) => {
                    wire::append_log_record(&mut wire_log, &out);
                    *slot = Some(out.clone());
                    Some(out)
                }
                Err(e) => {
                    failure = Some(e);
                    None
                }
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }
        }
        let decode_post = |frame: &Option<Vec<u8>>, station: &Station| -> DecodedSignals {
            match frame.as_deref().map(deserialize) {
                Some(Ok(m)) => station.codec.decode(&m.payload),
                _ => DecodedSignals {
                    signals: SignalVector::from_array([f64::NAN; 4]),
                    implausible: [false; 4],
                },
            }
        };
        let post_l2f = decode_post(&post[0], &follower);
        let post_f2l = decode_post(&post[1], &leader);

        for frame in link.poll(Direction::L2F, now)? {
            follower.accept(&frame);
        }
        for frame in link.poll(Direction::F2L, now)? {
            leader.accept(&frame);
        }

        let (_, rx_l) = leader.command(&out_l);
        let (_, rx_f) = follower.command(&out_f);

        let origin_l = leader.origin;
        let ext_l = operator_torque(t, &cfg.operator, &leader.state, origin_l, &params);
        let ext_f = wall_torque(&follower.state, &cfg.wall, &params);
        trace.rows.push(TraceRow {
            tick: k,
            time: t,
            leader: leader.sample(ext_l),
            follower: follower.sample(ext_f),
            l2f_pre: decoded_array(&pre_l2f),
            l2f_post: decoded_array(&post_l2f),
            f2l_pre: decoded_array(&pre_f2l),
            f2l_post: decoded_array(&post_f2l),
            leader_rx: rx_l.to_array(),
            follower_rx: rx_f.to_array(),
            flags: post_l2f.flag_bits() | (post_f2l.flag_bits() << 4),
        });

        let op = cfg.operator;
        let step_l = leader.integrate(t, |ts, s| operator_torque(ts, &op, s, origin_l, &params));
        let wall = cfg.wall;
        let step_f = follower.integrate(t, |_, s| wall_torque(s, &wall, &params));
        if let Err(e) = step_l.and(step_f) {
            aborted = Some(format!("tick {k}: {e}"));
            break;
        }
    }

    let stats = RunStats {
        ticks: trace.rows.len() as u32,
        frames_dropped: link.dropped(),
        stale_dropped: leader.receiver().stale_dropped() + follower.receiver().stale_dropped(),
        corrupt_dropped: leader.receiver().corrupt_dropped() + follower.receiver().corrupt_dropped(),
        frames_rewritten: proxy.counters().1,
        implausible_ticks: trace.flagged_ticks(0xff),
    };
    Ok(RunOutput {
        trace,
        wire_log,
        stats,
        aborted,
    })
}

/// The attacked run together with its passive-attacker baseline.
pub fn run_with_baseline(cfg: &RunConfig) -> Result<(RunOutput, RunOutput), HarnessError> {
    Ok((run_scenario(&cfg.baseline())?, run_scenario(cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mode: AttackMode, scenario: ScenarioName) -> RunConfig {
        RunConfig {
            mode,
            scenario,
            duration: 1.0,
            ..RunConfig::default()
        }
    }

    #[test]
    fn row_count_matches_duration() {
        let out = run_scenario(&short(AttackMode::Plaintext, ScenarioName::Normal)).unwrap();
        assert_eq!(out.trace.len(), 50);
        assert!(out.aborted.is_none());
        for (k, r) in out.trace.rows.iter().enumerate() {
            assert_eq!(r.tick as usize, k);
            assert_eq!(r.time, k as f64 * CONTROL_PERIOD);
        }
    }

    #[test]
    fn one_tick_delay_means_own_vector_at_tick_zero() {
        let out = run_scenario(&short(AttackMode::Plaintext, ScenarioName::Normal)).unwrap();
        let r0 = &out.trace.rows[0];
        assert_eq!(r0.leader_rx, r0.l2f_pre);
        let r1 = &out.trace.rows[1];
        assert_eq!(r1.leader_rx, r0.f2l_post);
        assert_eq!(r1.follower_rx, r0.l2f_post);
    }

    #[test]
    fn attack_scenario_assembly() {
        let mut cfg = short(AttackMode::Plaintext, ScenarioName::Reflection);
        cfg.leader_initial = [0.1, 0.0];
        cfg.follower_initial = [0.3, 0.0];
        let s = cfg.attack_scenario();
        assert_eq!(s.leader_dir.offset[0], 0.6);
        assert_eq!(s.follower_dir.offset[0], 0.2);
        cfg.ic_offsets = false;
        assert!(!cfg.attack_scenario().leader_dir.has_offset());
        cfg.directions = AttackDirections::LeaderOnly;
        assert!(cfg.attack_scenario().follower_dir.is_identity());
    }

    #[test]
    fn ciphertext_mode_rejects_offsets() {
        let mut cfg = short(AttackMode::Ciphertext, ScenarioName::Reflection);
        cfg.leader_initial = [0.1, 0.0];
        assert!(matches!(run_scenario(&cfg), Err(HarnessError::Attack(AttackError::AdditiveOffset))));
    }

    #[test]
    fn invalid_duration_rejected() {
        let cfg = RunConfig {
            duration: 0.0,
            ..RunConfig::default()
        };
        assert!(matches!(run_scenario(&cfg), Err(HarnessError::Config(_))));
    }
}
