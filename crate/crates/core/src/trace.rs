//! Twelve-column NS-2 style trace records.
//!
//! ```text
//! <event> <time> <source> <destination> <pkt_type> <pkt_size> <flags> <fid> <src_addr> <dst_addr> <seq_num> <pkt_id>
//! ```
//!
//! Single spaces, time with six decimals, broadcast written as `-1`, flags always `---`.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::model::{NodeId, PacketKind};

pub const TRACE_FIELDS: usize = 12;
pub const FLAGS_PLACEHOLDER: &str = "---";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventType {
    Send,
    Receive,
    Drop,
    Forward,
}

impl EventType {
    pub fn symbol(self) -> char {
        match self {
            EventType::Send => 's',
            EventType::Receive => 'r',
            EventType::Drop => 'd',
            EventType::Forward => 'f',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub event: EventType,
    pub time: f64,
    /// Node at which the event occurs.
    pub source: NodeId,
    /// Neighbor involved: next hop for sends, previous hop for receptions.
    pub destination: NodeId,
    pub pkt_type: PacketKind,
    pub pkt_size: usize,
    pub flags: String,
    pub fid: u32,
    pub src_addr: NodeId,
    pub dst_addr: NodeId,
    pub seq_num: u64,
    pub pkt_id: u64,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.6} {} {} {} {} {} {} {} {} {} {}",
            self.event.symbol(),
            self.time,
            self.source,
            self.destination,
            self.pkt_type,
            self.pkt_size,
            self.flags,
            self.fid,
            self.src_addr,
            self.dst_addr,
            self.seq_num,
            self.pkt_id
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceParseError {
    #[error("expected {TRACE_FIELDS} fields, found {0}")]
    FieldCount(usize),
    #[error("field {field}: invalid value `{value}`")]
    Field { field: &'static str, value: String },
}

fn field<T: FromStr>(name: &'static str, s: &str) -> Result<T, TraceParseError> {
    s.parse().map_err(|_| TraceParseError::Field { field: name, value: s.to_string() })
}

impl FromStr for TraceEvent {
    type Err = TraceParseError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != TRACE_FIELDS {
            return Err(TraceParseError::FieldCount(t.len()));
        }
        let event = match t[0] {
            "s" => EventType::Send,
            "r" => EventType::Receive,
            "d" => EventType::Drop,
            "f" => EventType::Forward,
            other => return Err(TraceParseError::Field { field: "event", value: other.into() }),
        };
        let time: f64 = field("time", t[1])?;
        if !time.is_finite() || time < 0.0 {
            return Err(TraceParseError::Field { field: "time", value: t[1].into() });
        }
        Ok(TraceEvent {
            event,
            time,
            source: field("source", t[2])?,
            destination: field("destination", t[3])?,
            pkt_type: field("pkt_type", t[4])?,
            pkt_size: field("pkt_size", t[5])?,
            flags: t[6].to_string(),
            fid: field("fid", t[7])?,
            src_addr: field("src_addr", t[8])?,
            dst_addr: field("dst_addr", t[9])?,
            seq_num: field("seq_num", t[10])?,
            pkt_id: field("pkt_id", t[11])?,
        })
    }
}

/// Destination for trace records produced by a run.
pub trait TraceSink {
    fn emit(&mut self, event: &TraceEvent) -> io::Result<()>;
}

impl TraceSink for Vec<TraceEvent> {
    fn emit(&mut self, event: &TraceEvent) -> io::Result<()> {
        self.push(event.clone());
        Ok(())
    }
}

/// Writes one line per event.
pub struct WriteSink<W: Write>(pub W);

impl<W: Write> TraceSink for WriteSink<W> {
    fn emit(&mut self, event: &TraceEvent) -> io::Result<()> {
        writeln!(self.0, "{event}")
    }
}

/// Discards everything.
pub struct NullSink;

impl TraceSink for NullSink {
    fn emit(&mut self, _: &TraceEvent) -> io::Result<()> {
        Ok(())
    }
}

/// Appends a record to `sink`.
pub fn emit_trace(event: &TraceEvent, sink: &mut dyn TraceSink) -> io::Result<()> {
    sink.emit(event)
}

/// Renders a whole trace as text, one line per event.
pub fn render(events: &[TraceEvent]) -> String {
    let mut s = String::with_capacity(events.len() * 48);
    for e in events {
        use std::fmt::Write as _;
        writeln!(s, "{e}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BROADCAST;
    use proptest::prelude::*;

    fn sample() -> TraceEvent {
        TraceEvent {
            event: EventType::Send,
            time: 1.5,
            source: NodeId(3),
            destination: NodeId(4),
            pkt_type: PacketKind::Data,
            pkt_size: 100,
            flags: FLAGS_PLACEHOLDER.into(),
            fid: 1,
            src_addr: NodeId(25),
            dst_addr: NodeId(0),
            seq_num: 12,
            pkt_id: 7,
        }
    }

    #[test]
    fn data_send_line() {
        assert_eq!(sample().to_string(), "s 1.500000 3 4 DATA 100 --- 1 25 0 12 7");
    }

    #[test]
    fn broadcast_destination() {
        let e = TraceEvent { destination: BROADCAST, pkt_type: PacketKind::Rreq, ..sample() };
        let line = e.to_string();
        assert_eq!(line, "s 1.500000 3 -1 RREQ 100 --- 1 25 0 12 7");
        assert_eq!(line.parse::<TraceEvent>().unwrap(), e);
    }

    #[test]
    fn rejects_wrong_field_count() {
        let err = "s 1.5 3 4 DATA 100 --- 1 25 0 12".parse::<TraceEvent>().unwrap_err();
        assert_eq!(err, TraceParseError::FieldCount(11));
        assert!("x 1.5 3 4 DATA 100 --- 1 25 0 12 7".parse::<TraceEvent>().is_err());
        assert!("s abc 3 4 DATA 100 --- 1 25 0 12 7".parse::<TraceEvent>().is_err());
        assert!("s 1.5 3 4 UDP 100 --- 1 25 0 12 7".parse::<TraceEvent>().is_err());
    }

    fn arb_node() -> impl Strategy<Value = NodeId> {
        prop_oneof![(0u32..1000).prop_map(NodeId), Just(BROADCAST)]
    }

    proptest! {
        #[test]
        fn twelve_tokens_and_round_trip(
            ev in 0usize..4, micros in 0u64..10_000_000_000, source in arb_node(),
            destination in arb_node(), kind in 0usize..5, size in 0usize..5000, fid in 0u32..1000,
            src in arb_node(), dst in arb_node(), seq in any::<u64>(), uid in any::<u64>(),
        ) {
            let e = TraceEvent {
                event: [EventType::Send, EventType::Receive, EventType::Drop, EventType::Forward][ev],
                time: micros as f64 / 1e6,
                source, destination,
                pkt_type: PacketKind::ALL[kind],
                pkt_size: size,
                flags: FLAGS_PLACEHOLDER.into(),
                fid, src_addr: src, dst_addr: dst, seq_num: seq, pkt_id: uid,
            };
            let line = e.to_string();
            prop_assert_eq!(line.split(' ').count(), TRACE_FIELDS);
            let back: TraceEvent = line.parse().unwrap();
            prop_assert_eq!(back.to_string(), line);
            prop_assert!((back.time - e.time).abs() < 5e-7);
        }
    }
}
