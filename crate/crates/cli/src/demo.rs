//! Standalone robot and attacker processes talking real UDP.

use std::fs;
use std::io::{self, Write};
use std::net::{SocketAddr, UdpSocket};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use clap::{Args, ValueEnum};
use tbt_core::channel::transport::bind_udp;
use tbt_core::channel::wire::append_log_record;
use tbt_core::channel::{serialize, MitmProxy, SignalCodec};
use tbt_core::crypto::read_key_file;
use tbt_core::harness::{operator_torque, wall_torque, RobotSample, RunConfig, Station};
use tbt_core::{AttackMode, Side, CONTROL_PERIOD};

use crate::options::{show_config, SimOptions};
use crate::{CliError, CliResult, Status};

#[derive(Clone, Copy, ValueEnum)]
pub enum Role {
    Leader,
    Follower,
}

#[derive(Args)]
pub struct NodeArgs {
    #[command(flatten)]
    pub sim: SimOptions,
    #[arg(long, value_enum)]
    pub role: Role,
    /// Address to receive the peer's frames on.
    #[arg(long)]
    pub listen: SocketAddr,
    /// Where to send this robot's frames (the peer or a proxy).
    #[arg(long)]
    pub send: SocketAddr,
    /// Write this robot's samples as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run ticks back to back instead of at the control rate.
    #[arg(long)]
    pub no_pace: bool,
}

fn codec_for(cfg: &RunConfig, side: Side) -> Result<SignalCodec, CliError> {
    let nonce_seed = match side {
        Side::Leader => cfg.seed.wrapping_mul(2),
        Side::Follower => cfg.seed.wrapping_mul(2).wrapping_add(1),
    };
    match cfg.mode {
        AttackMode::Plaintext => Ok(SignalCodec::plaintext()),
        AttackMode::Ciphertext => {
            let (pk, sk) = cfg.keys.resolve().map_err(CliError::runtime)?;
            SignalCodec::ciphertext(pk, sk, cfg.gamma, nonce_seed).map_err(CliError::runtime)
        }
    }
}

fn csv_line(tick: u32, t: f64, s: &RobotSample, rx: [f64; 4]) -> String {
    let mut fields = vec![tick.to_string(), t.to_string()];
    fields.extend(
        s.theta
            .iter()
            .chain(&s.omega)
            .chain(&s.tau_hat)
            .chain(&s.motor)
            .chain(&s.ext)
            .chain(&rx)
            .map(|v| v.to_string()),
    );
    fields.join(",")
}

const NODE_HEADER: &str =
    "tick,time,theta1,theta2,omega1,omega2,tau_hat1,tau_hat2,motor1,motor2,ext1,ext2,rx_theta1,rx_theta2,rx_tau1,rx_tau2";

pub fn node(args: NodeArgs) -> CliResult {
    let cfg = args.sim.resolve()?;
    if args.sim.show_config {
        show_config(&cfg);
        return Ok(Status::Ok);
    }
    let side = match args.role {
        Role::Leader => Side::Leader,
        Role::Follower => Side::Follower,
    };
    let initial = match side {
        Side::Leader => cfg.leader_initial,
        Side::Follower => cfg.follower_initial,
    };
    let mut station = Station::new(side, initial, &cfg, codec_for(&cfg, side)?);
    let sock = bind_udp(args.listen, None).map_err(CliError::runtime)?;
    sock.set_nonblocking(true).map_err(CliError::runtime)?;

    let params = cfg.params;
    let operator = cfg.operator;
    let wall = cfg.wall;
    let origin = station.origin;
    let ext_at = |t: f64, s: &tbt_core::JointState| match side {
        Side::Leader => operator_torque(t, &operator, s, origin, &params),
        Side::Follower => wall_torque(s, &wall, &params),
    };

    let mut lines = vec![NODE_HEADER.to_string()];
    let mut buf = vec![0u8; 65_536];
    let start = Instant::now();
    let mut aborted = None;
    for k in 0..cfg.tick_count() {
        let t = k as f64 * CONTROL_PERIOD;
        loop {
            match sock.recv_from(&mut buf) {
                Ok((n, _)) => station.accept(&buf[..n]),
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => break,
                Err(e) => return Err(CliError::runtime(e)),
            }
        }
        let local = station.observe(CONTROL_PERIOD);
        let msg = station.message(k, &local).map_err(CliError::runtime)?;
        if let Err(e) = sock.send_to(&serialize(&msg), args.send) {
            // The peer may not be up yet.
            if e.kind() != io::ErrorKind::ConnectionRefused {
                return Err(CliError::runtime(e));
            }
        }
        let (_, remote) = station.command(&local);
        let state = station.state;
        lines.push(csv_line(k, t, &station.sample(ext_at(t, &state)), remote.to_array()));
        if let Err(e) = station.integrate(t, ext_at) {
            aborted = Some(format!("tick {k}: {e}"));
            break;
        }
        if !args.no_pace {
            let due = start + Duration::from_secs_f64((k + 1) as f64 * CONTROL_PERIOD);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
        }
    }

    let ticks = lines.len() - 1;
    if let Some(path) = &args.out {
        lines.push(String::new());
        fs::write(path, lines.join("\n")).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    let rx = station.receiver();
    println!(
        "{} node: {} ticks, {} frames accepted, {} stale, {} corrupt",
        side.as_str(),
        ticks,
        rx.accepted(),
        rx.stale_dropped(),
        rx.corrupt_dropped()
    );
    if let Some(why) = aborted {
        return Err(CliError::Runtime(format!("integration diverged at {why}")));
    }
    if rx.accepted() == 0 {
        return Err(CliError::Runtime("no frames received from the peer".into()));
    }
    Ok(Status::Ok)
}

#[derive(Args)]
pub struct ProxyArgs {
    #[command(flatten)]
    pub sim: SimOptions,
    /// Address the leader sends to.
    #[arg(long)]
    pub leader_listen: SocketAddr,
    /// Address the follower sends to.
    #[arg(long)]
    pub follower_listen: SocketAddr,
    /// The leader node's listen address.
    #[arg(long)]
    pub leader: SocketAddr,
    /// The follower node's listen address.
    #[arg(long)]
    pub follower: SocketAddr,
    /// Stop after this many seconds without traffic (s).
    #[arg(long, default_value_t = 2.0)]
    pub idle_timeout: f64,
    /// How long to wait for the first frame (s).
    #[arg(long, default_value_t = 30.0)]
    pub startup_timeout: f64,
    /// Append every forwarded frame to this wire log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Default)]
struct RelayCounts {
    forwarded: u64,
    rewritten: u64,
    rejected: u64,
}

fn relay(
    ingress: UdpSocket,
    egress: UdpSocket,
    dest: SocketAddr,
    mut proxy: MitmProxy,
    idle: Duration,
    startup: Duration,
    log: Arc<Mutex<Vec<u8>>>,
) -> io::Result<RelayCounts> {
    let mut counts = RelayCounts::default();
    let mut buf = vec![0u8; 65_536];
    let began = Instant::now();
    let mut seen_any = false;
    ingress.set_read_timeout(Some(idle))?;
    loop {
        match ingress.recv_from(&mut buf) {
            Ok((n, _)) => {
                seen_any = true;
                match proxy.forward_bytes(&buf[..n]) {
                    Ok(out) => {
                        append_log_record(&mut log.lock().unwrap(), &out);
                        egress.send_to(&out, dest)?;
                        counts.forwarded += 1;
                    }
                    Err(_) => counts.rejected += 1,
                }
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                if seen_any || began.elapsed() >= startup {
                    break;
                }
            }
            Err(e) => return Err(e),
        }
    }
    counts.rewritten = proxy.counters().1;
    Ok(counts)
}

pub fn proxy(args: ProxyArgs) -> CliResult {
    // The attacker only ever sees the public half of a key file.
    let mut sim = args.sim.clone();
    let public = sim.key_file.take().map(|p| read_key_file(&p).map_err(|e| CliError::Usage(e.to_string())));
    let cfg = sim.resolve()?;
    if args.sim.show_config {
        show_config(&cfg);
        return Ok(Status::Ok);
    }
    let modulus = match (cfg.mode, public) {
        (AttackMode::Plaintext, _) => None,
        (AttackMode::Ciphertext, Some(pk)) => Some(pk?.0.modulus()),
        (AttackMode::Ciphertext, None) => Some(cfg.keys.resolve().map_err(CliError::runtime)?.0.modulus()),
    };
    let scenario = cfg.attack_scenario();
    let make = || MitmProxy::new(scenario, modulus.clone(), cfg.onset_tick()).map_err(|e| CliError::Usage(e.to_string()));
    let (p_l2f, p_f2l) = (make()?, make()?);

    let from_leader = bind_udp(args.leader_listen, None).map_err(CliError::runtime)?;
    let from_follower = bind_udp(args.follower_listen, None).map_err(CliError::runtime)?;
    let to_follower = from_follower.try_clone().map_err(CliError::runtime)?;
    let to_leader = from_leader.try_clone().map_err(CliError::runtime)?;
    let idle = Duration::from_secs_f64(args.idle_timeout.max(0.01));
    let startup = Duration::from_secs_f64(args.startup_timeout.max(0.0));
    let log = Arc::new(Mutex::new(Vec::new()));

    eprintln!(
        "proxy: {} ({}) onset {} s, leader -> {} -> {}, follower -> {} -> {}",
        cfg.scenario, cfg.mode, cfg.onset, args.leader_listen, args.follower, args.follower_listen, args.leader
    );
    let (log_a, log_b) = (log.clone(), log.clone());
    let follower = args.follower;
    let l2f = thread::spawn(move || relay(from_leader, to_follower, follower, p_l2f, idle, startup, log_a));
    let f2l = relay(from_follower, to_leader, args.leader, p_f2l, idle, startup, log_b).map_err(CliError::runtime)?;
    let l2f = l2f
        .join()
        .map_err(|_| CliError::Runtime("relay thread panicked".into()))?
        .map_err(CliError::runtime)?;

    if let Some(path) = &args.log {
        let bytes = log.lock().unwrap();
        fs::File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    for (name, c) in [("L2F", &l2f), ("F2L", &f2l)] {
        println!("{name}: {} forwarded, {} rewritten, {} rejected", c.forwarded, c.rewritten, c.rejected);
    }
    if l2f.forwarded + f2l.forwarded == 0 {
        return Err(CliError::Runtime("no traffic seen".into()));
    }
    Ok(Status::Ok)
}
