//! Identifiers, packet records and routing entries shared by every layer.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use crate::mobility::Kinematics;
use crate::scalar::Scalar;

/// Index of a node. Honest nodes are `0..nn`; the attacker, when present, is `nn`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(pub u32);

/// Reserved destination for link-local broadcasts. Printed as `-1` in traces.
pub const BROADCAST: NodeId = NodeId(u32::MAX);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_broadcast(self) -> bool {
        self == BROADCAST
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_broadcast() {
            f.write_str("-1")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseNodeIdError(pub String);

impl fmt::Display for ParseNodeIdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid node id `{}`", self.0)
    }
}

impl std::error::Error for ParseNodeIdError {}

impl FromStr for NodeId {
    type Err = ParseNodeIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "-1" {
            return Ok(BROADCAST);
        }
        match s.parse::<u32>() {
            Ok(v) if v != u32::MAX => Ok(NodeId(v)),
            _ => Err(ParseNodeIdError(s.to_string())),
        }
    }
}

/// Planar vector, used for positions (m) and velocities (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 { x: T::zero(), y: T::zero() }
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Vec2::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PacketKind {
    Rreq,
    Rrep,
    Rerr,
    Hello,
    Data,
}

impl PacketKind {
    pub const ALL: [PacketKind; 5] = [
        PacketKind::Rreq,
        PacketKind::Rrep,
        PacketKind::Rerr,
        PacketKind::Hello,
        PacketKind::Data,
    ];

    pub fn token(self) -> &'static str {
        match self {
            PacketKind::Rreq => "RREQ",
            PacketKind::Rrep => "RREP",
            PacketKind::Rerr => "RERR",
            PacketKind::Hello => "HELLO",
            PacketKind::Data => "DATA",
        }
    }

    pub fn is_control(self) -> bool {
        matches!(self, PacketKind::Rreq | PacketKind::Rrep | PacketKind::Rerr)
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PacketKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PacketKind::ALL
            .into_iter()
            .find(|k| k.token().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown packet kind `{s}`"))
    }
}

/// Bytes of the common header that a receiver must read to run tag verification.
pub const COMMON_HEADER_BYTES: usize = 20;
pub const RREQ_BYTES: usize = 48;
pub const RREP_BYTES: usize = 44;
pub const HELLO_BYTES: usize = 44;
pub const RERR_BASE_BYTES: usize = 24;
pub const RERR_ENTRY_BYTES: usize = 8;

/// Per-packet metadata, including the two random values and the channel tag.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonHeader {
    pub uid: u64,
    pub kind: PacketKind,
    pub size: usize,
    /// Originator address.
    pub src: NodeId,
    /// Final destination, or [`BROADCAST`].
    pub dst: NodeId,
    /// Node that transmitted this copy.
    pub prev_hop: NodeId,
    /// Link-layer receiver of this copy, or [`BROADCAST`].
    pub link_dst: NodeId,
    pub seq: u64,
    pub fid: u32,
    pub rv1: f64,
    pub rv2: f64,
    pub channel: u32,
    pub hop_count: u32,
    pub sender_kin: Option<Kinematics<f64>>,
}

impl CommonHeader {
    pub fn new(uid: u64, kind: PacketKind, size: usize, src: NodeId, dst: NodeId) -> Self {
        CommonHeader {
            uid,
            kind,
            size,
            src,
            dst,
            prev_hop: src,
            link_dst: BROADCAST,
            seq: 0,
            fid: 0,
            rv1: 0.0,
            rv2: 0.0,
            channel: 1,
            hop_count: 0,
            sender_kin: None,
        }
    }
}

/// Route request state carried by an RREQ flood.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RreqBody {
    pub broadcast_id: u64,
    pub orig_seq: u64,
    pub dest: NodeId,
    pub dest_seq_known: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RrepBody {
    /// Destination whose route is being advertised.
    pub dest: NodeId,
    pub dest_seq: u64,
    /// Originator of the discovery this reply answers.
    pub orig: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RerrBody {
    /// Unreachable destinations with their incremented sequence numbers.
    pub unreachable: Vec<(NodeId, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    Rreq(RreqBody),
    Rrep(RrepBody),
    Rerr(RerrBody),
    Hello { seq: u64 },
    Data,
}

impl Body {
    pub fn kind(&self) -> PacketKind {
        match self {
            Body::Rreq(_) => PacketKind::Rreq,
            Body::Rrep(_) => PacketKind::Rrep,
            Body::Rerr(_) => PacketKind::Rerr,
            Body::Hello { .. } => PacketKind::Hello,
            Body::Data => PacketKind::Data,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub header: CommonHeader,
    pub body: Body,
}

/// One AODV routing table entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteEntry {
    pub dest: NodeId,
    pub next_hop: NodeId,
    pub hop_count: u32,
    pub dest_seq: u64,
    pub expiry: f64,
    pub valid: bool,
    /// Set once the route carried DATA or a route reply; only active routes are reported in
    /// route errors.
    pub active: bool,
}

impl RouteEntry {
    pub fn usable(&self, now: f64) -> bool {
        self.valid && self.expiry > now
    }
}

/// Why a packet was dropped. Reported in run summaries; not a trace column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DropReason {
    /// Random values outside their valid range.
    VerifyRange,
    /// Channel tag disagrees with the random values.
    VerifyMismatch,
    /// Predicted link lifetime below threshold.
    LetReject,
    NoRoute,
    /// Unicast next hop out of range or dead at send time.
    LinkLost,
    BufferOverflow,
    DiscoveryFailed,
    NoReverseRoute,
    EnergyDepleted,
}

impl DropReason {
    pub const ALL: [DropReason; 9] = [
        DropReason::VerifyRange,
        DropReason::VerifyMismatch,
        DropReason::LetReject,
        DropReason::NoRoute,
        DropReason::LinkLost,
        DropReason::BufferOverflow,
        DropReason::DiscoveryFailed,
        DropReason::NoReverseRoute,
        DropReason::EnergyDepleted,
    ];

    pub fn token(self) -> &'static str {
        match self {
            DropReason::VerifyRange => "DROP_RANGE",
            DropReason::VerifyMismatch => "DROP_MISMATCH",
            DropReason::LetReject => "LET_REJECT",
            DropReason::NoRoute => "NO_ROUTE",
            DropReason::LinkLost => "LINK_LOST",
            DropReason::BufferOverflow => "BUFFER_OVERFLOW",
            DropReason::DiscoveryFailed => "DISCOVERY_FAILED",
            DropReason::NoReverseRoute => "NO_REVERSE_ROUTE",
            DropReason::EnergyDepleted => "ENERGY_DEPLETED",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Source of packet uids for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UidCounter(pub u64);

/// Returns the current counter value and the incremented state.
pub fn next_uid(state: UidCounter) -> (u64, UidCounter) {
    (state.0, UidCounter(state.0 + 1))
}

impl UidCounter {
    pub fn take(&mut self) -> u64 {
        let (uid, next) = next_uid(*self);
        *self = next;
        uid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn next_uid_examples() {
        assert_eq!(next_uid(UidCounter(0)), (0, UidCounter(1)));
        assert_eq!(next_uid(UidCounter(41)), (41, UidCounter(42)));
        let mut c = UidCounter::default();
        let a = c.take();
        let b = c.take();
        assert!(b > a);
    }

    #[test]
    fn broadcast_prints_as_minus_one() {
        assert_eq!(BROADCAST.to_string(), "-1");
        assert_eq!("-1".parse::<NodeId>().unwrap(), BROADCAST);
        assert_eq!("25".parse::<NodeId>().unwrap(), NodeId(25));
        assert!("x".parse::<NodeId>().is_err());
        assert!("-2".parse::<NodeId>().is_err());
    }

    #[test]
    fn packet_kind_tokens() {
        for k in PacketKind::ALL {
            assert_eq!(k.token().parse::<PacketKind>().unwrap(), k);
        }
    }
}
