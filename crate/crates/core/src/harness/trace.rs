//! Per-tick trace of both robots and the wire, with a lossless CSV form.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("I/O: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("CSV header does not match the trace format")]
    Header,
}

/// One robot at the start of a tick, plus what its controller did.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotSample {
    pub theta: [f64; 2],
    pub omega: [f64; 2],
    /// Reaction-torque estimate (before force framing).
    pub tau_hat: [f64; 2],
    /// Saturated motor command for the coming tick.
    pub motor: [f64; 2],
    /// External torque acting at the start of the tick.
    pub ext: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub tick: u32,
    pub time: f64,
    pub leader: RobotSample,
    pub follower: RobotSample,
    /// Decoded signal vectors sent this tick, before and after the proxy.
    pub l2f_pre: [f64; 4],
    pub l2f_post: [f64; 4],
    pub f2l_pre: [f64; 4],
    pub f2l_post: [f64; 4],
    /// Remote vectors each controller actually used.
    pub leader_rx: [f64; 4],
    pub follower_rx: [f64; 4],
    /// Implausible-decode flags: bits 0-3 for L2F slots, 4-7 for F2L.
    pub flags: u8,
}

impl TraceRow {
    pub const L2F_FLAGS: u8 = 0x0f;
    pub const F2L_FLAGS: u8 = 0xf0;
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceLog {
    pub rows: Vec<TraceRow>,
}

const ROBOT_FIELDS: [&str; 10] = [
    "theta1", "theta2", "omega1", "omega2", "tau_hat1", "tau_hat2", "motor1", "motor2", "ext1",
    "ext2",
];
const VEC_FIELDS: [&str; 4] = ["theta1", "theta2", "tau_e1", "tau_e2"];
const VEC_GROUPS: [&str; 6] = ["l2f_pre", "l2f_post", "f2l_pre", "f2l_post", "leader_rx", "follower_rx"];

/// Column names, in order.
pub fn csv_header() -> Vec<String> {
    let mut h = vec!["tick".to_string(), "time".to_string()];
    for side in ["leader", "follower"] {
        h.extend(ROBOT_FIELDS.iter().map(|f| format!("{side}_{f}")));
    }
    for g in VEC_GROUPS {
        h.extend(VEC_FIELDS.iter().map(|f| format!("{g}_{f}")));
    }
    h.push("flags".to_string());
    h
}

fn robot_values(r: &RobotSample) -> [f64; 10] {
    [
        r.theta[0], r.theta[1], r.omega[0], r.omega[1], r.tau_hat[0], r.tau_hat[1], r.motor[0],
        r.motor[1], r.ext[0], r.ext[1],
    ]
}

fn robot_from(v: &[f64]) -> RobotSample {
    RobotSample {
        theta: [v[0], v[1]],
        omega: [v[2], v[3]],
        tau_hat: [v[4], v[5]],
        motor: [v[6], v[7]],
        ext: [v[8], v[9]],
    }
}

impl TraceRow {
    fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(44);
        v.extend(robot_values(&self.leader));
        v.extend(robot_values(&self.follower));
        for g in [
            &self.l2f_pre,
            &self.l2f_post,
            &self.f2l_pre,
            &self.f2l_post,
            &self.leader_rx,
            &self.follower_rx,
        ] {
            v.extend_from_slice(g);
        }
        v
    }
}

impl TraceLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV text. Floats use the shortest representation that reads back
    /// to the same bits.
    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("ascii")
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "{}", csv_header().join(","))?;
        for row in &self.rows {
            write!(w, "{},{}", row.tick, row.time)?;
            for x in row.values() {
                write!(w, ",{x}")?;
            }
            writeln!(w, ",{}", row.flags)?;
        }
        w.flush()
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self, TraceError> {
        let header = csv_header();
        let mut rows = Vec::new();
        for (i, line) in BufReader::new(r).lines().enumerate() {
            let line = line?;
            if i == 0 {
                if line.split(',').ne(header.iter().map(String::as_str)) {
                    return Err(TraceError::Header);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| TraceError::Parse { line: i + 1, msg };
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != header.len() {
                return Err(err(format!("{} columns, expected {}", cells.len(), header.len())));
            }
            let tick = cells[0].parse().map_err(|e| err(format!("tick: {e}")))?;
            let flags = cells[cells.len() - 1]
                .parse()
                .map_err(|e| err(format!("flags: {e}")))?;
            let mut vals = Vec::with_capacity(cells.len() - 2);
            for (j, c) in cells[1..cells.len() - 1].iter().enumerate() {
                vals.push(
                    c.parse::<f64>()
                        .map_err(|e| err(format!("{}: {e}", header[j + 1])))?,
                );
            }
            let v4 = |k: usize| -> [f64; 4] { vals[21 + 4 * k..25 + 4 * k].try_into().unwrap() };
            rows.push(TraceRow {
                tick,
                time: vals[0],
                leader: robot_from(&vals[1..11]),
                follower: robot_from(&vals[11..21]),
                l2f_pre: v4(0),
                l2f_post: v4(1),
                f2l_pre: v4(2),
                f2l_post: v4(3),
                leader_rx: v4(4),
                follower_rx: v4(5),
                flags,
            });
        }
        Ok(Self { rows })
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), TraceError> {
        self.write_csv(fs::File::create(path)?)?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self, TraceError> {
        Self::read_csv(fs::File::open(path)?)
    }

    /// Number of ticks with at least one implausible decode in `mask`.
    pub fn flagged_ticks(&self, mask: u8) -> usize {
        self.rows.iter().filter(|r| r.flags & mask != 0).count()
    }

    pub fn column(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}
