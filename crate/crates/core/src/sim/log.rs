//! Event log and per-node observation records.
//!
//! The event log has one line per event:
//! `time,node,direction,event_kind,session_id,payload_digest`, with time in
//! sim microseconds, direction one of `out`, `in`, `lost`, `drop` or
//! `state`, `-` for a missing session, and the digest being the first eight
//! bytes of SHA-256 over the payload, in hex.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::clock::SimTime;
use crate::crypto::sha256;
use crate::dht::NodeAddr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Out,
    In,
    Lost,
    Drop,
    State,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Out => "out",
            Direction::In => "in",
            Direction::Lost => "lost",
            Direction::Drop => "drop",
            Direction::State => "state",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    pub time: SimTime,
    pub node: NodeAddr,
    pub direction: Direction,
    pub kind: String,
    pub session: Option<u64>,
    pub digest: Option<[u8; 8]>,
}

pub fn digest(payload: &[u8]) -> [u8; 8] {
    sha256(payload)[..8].try_into().expect("8 bytes")
}

impl LogEntry {
    pub fn line(&self) -> String {
        let mut s = String::with_capacity(64);
        let _ = write!(s, "{},{},{},{},", self.time, self.node, self.direction.as_str(), self.kind);
        match self.session {
            Some(id) => {
                let _ = write!(s, "{id},");
            }
            None => s.push_str("-,"),
        }
        match self.digest {
            Some(d) => s.push_str(&hex::encode(d)),
            None => s.push('-'),
        }
        s
    }
}

pub const HEADER: &str = "time,node,direction,event_kind,session_id,payload_digest";

pub fn write_log<W: Write>(entries: &[LogEntry], mut out: W) -> io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for e in entries {
        writeln!(out, "{}", e.line())?;
    }
    Ok(())
}

pub fn write_log_file(entries: &[LogEntry], path: &Path) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    write_log(entries, &mut w)?;
    w.flush()
}

/// A payload as received by a node, kept whole for privacy audits.
#[derive(Clone, Debug)]
pub struct Observation {
    pub time: SimTime,
    pub node: NodeAddr,
    pub from: NodeAddr,
    pub payload: Vec<u8>,
}
