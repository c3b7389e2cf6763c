//! Moving frames between the two endpoints through the proxy, either over an
//! in-memory queue with a latency model or over localhost UDP sockets.

use std::collections::VecDeque;
use std::io;
use std::net::{SocketAddr, UdpSocket};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::wire::{deserialize, ChannelMessage, Direction, WireError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatencyModel {
    /// Fixed one-way delay (ms).
    pub base_delay_ms: f64,
    /// Extra delay drawn uniformly from `[0, jitter_ms)` (ms).
    pub jitter_ms: f64,
    /// Probability that a frame is lost.
    pub drop_rate: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            base_delay_ms: 10.0,
            jitter_ms: 0.0,
            drop_rate: 0.0,
        }
    }
}

impl LatencyModel {
    pub fn ideal() -> Self {
        Self {
            base_delay_ms: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.base_delay_ms >= 0.0 && self.base_delay_ms.is_finite()) {
            return Err("base_delay_ms must be a non-negative number".into());
        }
        if !(self.jitter_ms >= 0.0 && self.jitter_ms.is_finite()) {
            return Err("jitter_ms must be a non-negative number".into());
        }
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return Err("drop_rate must lie in [0, 1]".into());
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.jitter_ms == 0.0 && self.drop_rate == 0.0
    }
}

fn ms_to_us(ms: f64) -> u64 {
    (ms * 1000.0).round() as u64
}

/// Hook the proxy uses to rewrite (or swallow) a frame in transit.
pub type RelayFn<'a> = dyn FnMut(&[u8]) -> Option<Vec<u8>> + 'a;

/// A bidirectional link with the proxy in the middle. Times are in
/// microseconds of simulated (or wall-clock) time.
pub trait Link {
    /// Hand a frame from its origin endpoint to the network.
    fn send(&mut self, dir: Direction, now_us: u64, frame: &[u8]) -> io::Result<()>;
    /// Pass every frame waiting at the proxy through `f` and onward.
    fn relay(&mut self, dir: Direction, now_us: u64, f: &mut RelayFn<'_>) -> io::Result<()>;
    /// Frames that have reached the destination endpoint by `now_us`.
    fn poll(&mut self, dir: Direction, now_us: u64) -> io::Result<Vec<Vec<u8>>>;
    /// Frames lost in the network so far.
    fn dropped(&self) -> u64;
}

fn idx(dir: Direction) -> usize {
    dir.to_byte() as usize
}

/// In-memory link. Frames are scheduled `base + U[0, jitter)` after they
/// leave the proxy and delivered in arrival order, ties broken by send
/// order.
#[derive(Debug, Clone)]
pub struct LoopbackLink {
    latency: LatencyModel,
    rng: ChaCha20Rng,
    at_proxy: [VecDeque<Vec<u8>>; 2],
    in_flight: [Vec<(u64, u64, Vec<u8>)>; 2],
    order: u64,
    dropped: u64,
}

impl LoopbackLink {
    pub fn new(latency: LatencyModel, seed: u64) -> Self {
        Self {
            latency,
            rng: ChaCha20Rng::seed_from_u64(seed),
            at_proxy: [VecDeque::new(), VecDeque::new()],
            in_flight: [Vec::new(), Vec::new()],
            order: 0,
            dropped: 0,
        }
    }
}

impl Link for LoopbackLink {
    fn send(&mut self, dir: Direction, _now_us: u64, frame: &[u8]) -> io::Result<()> {
        self.at_proxy[idx(dir)].push_back(frame.to_vec());
        Ok(())
    }

    fn relay(&mut self, dir: Direction, now_us: u64, f: &mut RelayFn<'_>) -> io::Result<()> {
        while let Some(frame) = self.at_proxy[idx(dir)].pop_front() {
            // Draw both numbers for every frame so the stream does not
            // depend on what the proxy does.
            let lost = self.rng.gen::<f64>() < self.latency.drop_rate;
            let jitter = self.rng.gen::<f64>() * self.latency.jitter_ms;
            let Some(out) = f(&frame) else { continue };
            if lost {
                self.dropped += 1;
                continue;
            }
            let due = now_us + ms_to_us(self.latency.base_delay_ms + jitter);
            self.order += 1;
            self.in_flight[idx(dir)].push((due, self.order, out));
        }
        Ok(())
    }

    fn poll(&mut self, dir: Direction, now_us: u64) -> io::Result<Vec<Vec<u8>>> {
        let queue = &mut self.in_flight[idx(dir)];
        queue.sort_by_key(|&(due, order, _)| (due, order));
        let ready = queue.iter().take_while(|(due, _, _)| *due <= now_us).count();
        Ok(queue.drain(..ready).map(|(_, _, f)| f).collect())
    }

    fn dropped(&self) -> u64 {
        self.dropped
    }
}

/// Four localhost sockets in one process: leader, follower, and the two
/// faces of the proxy. Frames really cross the kernel; latency is whatever
/// the loopback interface gives.
#[derive(Debug)]
pub struct UdpLink {
    leader: UdpSocket,
    follower: UdpSocket,
    proxy_leader_side: UdpSocket,
    proxy_follower_side: UdpSocket,
    pending_at_proxy: [usize; 2],
    pending_at_dest: [usize; 2],
    dropped: u64,
}

impl UdpLink {
    pub fn bind_localhost(timeout: Duration) -> io::Result<Self> {
        let bind = || UdpSocket::bind("127.0.0.1:0");
        let link = Self {
            leader: bind()?,
            follower: bind()?,
            proxy_leader_side: bind()?,
            proxy_follower_side: bind()?,
            pending_at_proxy: [0; 2],
            pending_at_dest: [0; 2],
            dropped: 0,
        };
        for s in [
            &link.leader,
            &link.follower,
            &link.proxy_leader_side,
            &link.proxy_follower_side,
        ] {
            s.set_read_timeout(Some(timeout))?;
        }
        Ok(link)
    }

    fn endpoints(&self, dir: Direction) -> (&UdpSocket, &UdpSocket, &UdpSocket, &UdpSocket) {
        // (origin, proxy ingress, proxy egress, destination)
        match dir {
            Direction::L2F => (
                &self.leader,
                &self.proxy_leader_side,
                &self.proxy_follower_side,
                &self.follower,
            ),
            Direction::F2L => (
                &self.follower,
                &self.proxy_follower_side,
                &self.proxy_leader_side,
                &self.leader,
            ),
        }
    }
}

fn recv_one(sock: &UdpSocket) -> io::Result<Option<Vec<u8>>> {
    let mut buf = vec![0u8; 65_536];
    match sock.recv_from(&mut buf) {
        Ok((n, _)) => {
            buf.truncate(n);
            Ok(Some(buf))
        }
        Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => Ok(None),
        Err(e) => Err(e),
    }
}

impl Link for UdpLink {
    fn send(&mut self, dir: Direction, _now_us: u64, frame: &[u8]) -> io::Result<()> {
        let (origin, ingress, _, _) = self.endpoints(dir);
        origin.send_to(frame, ingress.local_addr()?)?;
        self.pending_at_proxy[idx(dir)] += 1;
        Ok(())
    }

    fn relay(&mut self, dir: Direction, _now_us: u64, f: &mut RelayFn<'_>) -> io::Result<()> {
        let mut forwarded = 0;
        let mut lost = 0;
        {
            let (_, ingress, egress, dest) = self.endpoints(dir);
            let dest_addr = dest.local_addr()?;
            for _ in 0..self.pending_at_proxy[idx(dir)] {
                match recv_one(ingress)? {
                    Some(frame) => {
                        if let Some(out) = f(&frame) {
                            egress.send_to(&out, dest_addr)?;
                            forwarded += 1;
                        }
                    }
                    None => lost += 1,
                }
            }
        }
        self.pending_at_proxy[idx(dir)] = 0;
        self.pending_at_dest[idx(dir)] += forwarded;
        self.dropped += lost;
        Ok(())
    }

    fn poll(&mut self, dir: Direction, _now_us: u64) -> io::Result<Vec<Vec<u8>>> {
        let mut out = Vec::new();
        let mut lost = 0;
        let (_, _, _, dest) = self.endpoints(dir);
        for _ in 0..self.pending_at_dest[idx(dir)] {
            match recv_one(dest)? {
                Some(frame) => out.push(frame),
                None => lost += 1,
            }
        }
        self.dropped += lost;
        self.pending_at_dest[idx(dir)] = 0;
        Ok(out)
    }

    fn dropped(&self) -> u64 {
        self.dropped
    }
}

/// Latest-wins receiver: accepts a message only if its sequence number is
/// newer than anything seen, so the held value never goes back in time.
#[derive(Debug, Clone, Default)]
pub struct LatestReceiver {
    last_seq: Option<u32>,
    accepted: u64,
    stale: u64,
    corrupt: u64,
}

impl LatestReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the message if it became the newest one held.
    pub fn offer(&mut self, frame: &[u8]) -> Result<Option<ChannelMessage>, WireError> {
        let msg = match deserialize(frame) {
            Ok(m) => m,
            Err(e) => {
                self.corrupt += 1;
                return Err(e);
            }
        };
        if self.last_seq.is_some_and(|s| msg.seq <= s) {
            self.stale += 1;
            return Ok(None);
        }
        self.last_seq = Some(msg.seq);
        self.accepted += 1;
        Ok(Some(msg))
    }

    pub fn last_seq(&self) -> Option<u32> {
        self.last_seq
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn stale_dropped(&self) -> u64 {
        self.stale
    }

    pub fn corrupt_dropped(&self) -> u64 {
        self.corrupt
    }
}

/// A single socket for a standalone node or proxy process.
pub fn bind_udp(listen: SocketAddr, timeout: Option<Duration>) -> io::Result<UdpSocket> {
    let s = UdpSocket::bind(listen)?;
    s.set_read_timeout(timeout)?;
    Ok(s)
}
