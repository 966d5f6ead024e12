//! On-demand distance-vector routing: RREQ flooding, RREP unicast, DATA forwarding,
//! HELLO-based link break detection and RERR propagation.
//!
//! Handlers never touch the radio; they return [`Action`]s that the engine tags, traces and
//! transmits.

use std::collections::{BTreeMap, VecDeque};

use crate::config::ScenarioConfig;
use crate::model::{
    Body, CommonHeader, DropReason, NodeId, Packet, PacketKind, RerrBody, RouteEntry, RrepBody,
    RreqBody, UidCounter, BROADCAST, HELLO_BYTES, RERR_BASE_BYTES, RERR_ENTRY_BYTES, RREP_BYTES,
    RREQ_BYTES,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AodvParams {
    pub hello_interval: f64,
    pub hello_loss_limit: u32,
    pub route_lifetime: f64,
    pub rreq_retries: u32,
    pub rreq_retry_timeout: f64,
    pub rreq_cache_ttl: f64,
    pub buffer_capacity: usize,
    pub intermediate_rrep: bool,
}

impl Default for AodvParams {
    fn default() -> Self {
        AodvParams::from(&ScenarioConfig::default())
    }
}

impl From<&ScenarioConfig> for AodvParams {
    fn from(c: &ScenarioConfig) -> Self {
        AodvParams {
            hello_interval: c.hello_interval,
            hello_loss_limit: c.hello_loss_limit,
            route_lifetime: c.route_lifetime,
            rreq_retries: c.rreq_retries,
            rreq_retry_timeout: c.rreq_retry_timeout,
            rreq_cache_ttl: c.rreq_cache_ttl,
            buffer_capacity: c.buffer_capacity,
            intermediate_rrep: c.intermediate_rrep,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoutingTable {
    pub entries: BTreeMap<NodeId, RouteEntry>,
    pub own_seq: u64,
    pub next_broadcast_id: u64,
}

impl RoutingTable {
    pub fn get(&self, dest: NodeId) -> Option<&RouteEntry> {
        self.entries.get(&dest)
    }

    pub fn valid_route(&self, dest: NodeId, now: f64) -> Option<&RouteEntry> {
        self.entries.get(&dest).filter(|e| e.usable(now))
    }

    /// Installs `candidate` if it is fresher than the current entry: no entry, a higher
    /// sequence number, an unusable entry with no newer sequence number, or the same sequence
    /// number with fewer hops. An equal route through the same next hop only has its expiry
    /// extended. Returns whether the table changed.
    pub fn offer(&mut self, candidate: RouteEntry, now: f64) -> bool {
        match self.entries.get_mut(&candidate.dest) {
            None => {
                self.entries.insert(candidate.dest, candidate);
                true
            }
            Some(cur) => {
                let replace = candidate.dest_seq > cur.dest_seq
                    || (!cur.usable(now) && candidate.dest_seq >= cur.dest_seq)
                    || (candidate.dest_seq == cur.dest_seq && candidate.hop_count < cur.hop_count);
                if replace {
                    *cur = candidate;
                    true
                } else if cur.usable(now)
                    && candidate.dest_seq == cur.dest_seq
                    && candidate.next_hop == cur.next_hop
                    && candidate.hop_count == cur.hop_count
                {
                    cur.expiry = cur.expiry.max(candidate.expiry);
                    true
                } else {
                    false
                }
            }
        }
    }

    /// One-hop route to a neighbor we just heard from.
    pub fn touch_neighbor(&mut self, nb: NodeId, seq: Option<u64>, now: f64, lifetime: f64) {
        let expiry = now + lifetime;
        match self.entries.get_mut(&nb) {
            Some(e) if e.usable(now) && e.next_hop == nb && e.hop_count == 1 => {
                e.expiry = e.expiry.max(expiry);
                if let Some(s) = seq {
                    e.dest_seq = e.dest_seq.max(s);
                }
            }
            other => {
                let prev_seq = other.as_ref().map_or(0, |e| e.dest_seq);
                self.entries.insert(
                    nb,
                    RouteEntry {
                        dest: nb,
                        next_hop: nb,
                        hop_count: 1,
                        dest_seq: seq.map_or(prev_seq, |s| s.max(prev_seq)),
                        expiry,
                        valid: true,
                        active: false,
                    },
                );
            }
        }
    }

    /// Marks a route as carrying traffic and extends its lifetime.
    pub fn use_route(&mut self, dest: NodeId, now: f64, lifetime: f64) {
        if let Some(e) = self.entries.get_mut(&dest) {
            if e.usable(now) {
                e.active = true;
                e.expiry = e.expiry.max(now + lifetime);
            }
        }
    }

    /// Invalidates every usable route through `next_hop`, bumping sequence numbers. Returns
    /// `(dest, new_seq, was_active)` for each.
    pub fn invalidate_via(&mut self, next_hop: NodeId, now: f64) -> Vec<(NodeId, u64, bool)> {
        let mut out = Vec::new();
        for e in self.entries.values_mut() {
            if e.next_hop == next_hop && e.usable(now) {
                e.valid = false;
                e.dest_seq += 1;
                out.push((e.dest, e.dest_seq, e.active));
            }
        }
        out
    }
}

/// Duplicate suppression for flooded route requests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RreqCache {
    seen: BTreeMap<(NodeId, u64), f64>,
    pub ttl: f64,
}

impl RreqCache {
    pub fn new(ttl: f64) -> Self {
        RreqCache { seen: BTreeMap::new(), ttl }
    }

    /// Records `(orig, bid)`; false if it was already cached and unexpired.
    pub fn insert(&mut self, orig: NodeId, bid: u64, now: f64) -> bool {
        let ttl = self.ttl;
        self.seen.retain(|_, t| now - *t <= ttl);
        match self.seen.get(&(orig, bid)) {
            Some(_) => false,
            None => {
                self.seen.insert((orig, bid), now);
                true
            }
        }
    }

    pub fn contains(&self, orig: NodeId, bid: u64, now: f64) -> bool {
        self.seen.get(&(orig, bid)).is_some_and(|t| now - *t <= self.ttl)
    }
}

/// DATA waiting for route discovery, FIFO per destination.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PendingBuffer {
    queues: BTreeMap<NodeId, VecDeque<Packet>>,
    pub capacity: usize,
}

impl PendingBuffer {
    pub fn new(capacity: usize) -> Self {
        PendingBuffer { queues: BTreeMap::new(), capacity }
    }

    /// Queues `pkt`; when the queue is full the oldest packet is evicted and returned.
    pub fn push(&mut self, dest: NodeId, pkt: Packet) -> Option<Packet> {
        let q = self.queues.entry(dest).or_default();
        let evicted = if q.len() >= self.capacity { q.pop_front() } else { None };
        q.push_back(pkt);
        evicted
    }

    pub fn take(&mut self, dest: NodeId) -> VecDeque<Packet> {
        self.queues.remove(&dest).unwrap_or_default()
    }

    pub fn len(&self, dest: NodeId) -> usize {
        self.queues.get(&dest).map_or(0, VecDeque::len)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborMonitor {
    pub last_hello: BTreeMap<NodeId, f64>,
    pub hello_interval: f64,
    pub loss_limit: u32,
}

impl NeighborMonitor {
    pub fn heard(&mut self, nb: NodeId, now: f64) {
        self.last_hello.insert(nb, now);
    }

    pub fn is_lost(&self, nb: NodeId, now: f64) -> bool {
        self.last_hello
            .get(&nb)
            .is_some_and(|t| now - t > self.loss_limit as f64 * self.hello_interval)
    }

    /// Removes and returns every lost neighbor.
    pub fn take_lost(&mut self, now: f64) -> Vec<NodeId> {
        let lost: Vec<NodeId> =
            self.last_hello.keys().copied().filter(|nb| self.is_lost(*nb, now)).collect();
        for nb in &lost {
            self.last_hello.remove(nb);
        }
        lost
    }
}

/// What a handler asks the engine to do.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Transmit; `header.link_dst` selects broadcast or unicast.
    Send { packet: Packet, forwarded: bool },
    /// DATA reached its final destination.
    Deliver(Packet),
    Drop { packet: Packet, neighbor: NodeId, reason: DropReason },
    ScheduleRetry { dest: NodeId, attempt: u32, at: f64 },
    RouteDiscovered { dest: NodeId, hops: u32 },
}

/// Handler context supplied by the engine.
pub struct Ctx<'a> {
    pub now: f64,
    pub uids: &'a mut UidCounter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Discovery {
    attempt: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AodvNode {
    pub id: NodeId,
    pub params: AodvParams,
    pub table: RoutingTable,
    pub cache: RreqCache,
    pub pending: PendingBuffer,
    pub neighbors: NeighborMonitor,
    discoveries: BTreeMap<NodeId, Discovery>,
    pkt_seq: u64,
    /// Non-cooperative nodes never forward, rebroadcast or answer route requests.
    pub cooperative: bool,
}

impl AodvNode {
    pub fn new(id: NodeId, params: AodvParams) -> Self {
        AodvNode {
            id,
            table: RoutingTable::default(),
            cache: RreqCache::new(params.rreq_cache_ttl),
            pending: PendingBuffer::new(params.buffer_capacity),
            neighbors: NeighborMonitor {
                last_hello: BTreeMap::new(),
                hello_interval: params.hello_interval,
                loss_limit: params.hello_loss_limit,
            },
            discoveries: BTreeMap::new(),
            pkt_seq: 0,
            cooperative: true,
            params,
        }
    }

    pub fn discovery_in_flight(&self, dest: NodeId) -> bool {
        self.discoveries.contains_key(&dest)
    }

    /// Fresh header owned by this node.
    pub fn new_header(&mut self, ctx: &mut Ctx<'_>, kind: PacketKind, size: usize, dst: NodeId) -> CommonHeader {
        let mut h = CommonHeader::new(ctx.uids.take(), kind, size, self.id, dst);
        h.seq = self.pkt_seq;
        self.pkt_seq += 1;
        h
    }

    fn lifetime(&self) -> f64 {
        self.params.route_lifetime
    }

    /// Application send: transmit along a valid route or buffer and start a discovery.
    pub fn originate(&mut self, ctx: &mut Ctx<'_>, dst: NodeId, size: usize, fid: u32) -> Vec<Action> {
        let mut header = self.new_header(ctx, PacketKind::Data, size, dst);
        header.fid = fid;
        let packet = Packet { header, body: Body::Data };
        let mut out = Vec::new();
        if let Some(next) = self.table.valid_route(dst, ctx.now).map(|e| e.next_hop) {
            out.push(self.send_data(ctx.now, packet, next));
            return out;
        }
        if let Some(old) = self.pending.push(dst, packet) {
            out.push(Action::Drop { packet: old, neighbor: BROADCAST, reason: DropReason::BufferOverflow });
        }
        if !self.discovery_in_flight(dst) {
            out.extend(self.start_discovery(ctx, dst, 0));
        }
        out
    }

    fn send_data(&mut self, now: f64, mut packet: Packet, next: NodeId) -> Action {
        packet.header.link_dst = next;
        let lifetime = self.lifetime();
        self.table.use_route(packet.header.dst, now, lifetime);
        self.table.use_route(next, now, lifetime);
        Action::Send { packet, forwarded: false }
    }

    /// Starts a discovery toward `dest` unless one is already running. Returns whether a valid
    /// route exists now.
    pub fn ensure_route(&mut self, ctx: &mut Ctx<'_>, dest: NodeId) -> (bool, Vec<Action>) {
        if self.table.valid_route(dest, ctx.now).is_some() {
            return (true, Vec::new());
        }
        if self.discovery_in_flight(dest) {
            return (false, Vec::new());
        }
        (false, self.start_discovery(ctx, dest, 0))
    }

    /// Floods a fresh RREQ for `dest` even if a route is already known, unless a discovery is
    /// already running.
    pub fn discover(&mut self, ctx: &mut Ctx<'_>, dest: NodeId) -> Vec<Action> {
        if self.discovery_in_flight(dest) {
            return Vec::new();
        }
        self.start_discovery(ctx, dest, 0)
    }

    fn start_discovery(&mut self, ctx: &mut Ctx<'_>, dest: NodeId, attempt: u32) -> Vec<Action> {
        self.table.own_seq += 1;
        let bid = self.table.next_broadcast_id;
        self.table.next_broadcast_id += 1;
        self.cache.insert(self.id, bid, ctx.now);
        self.discoveries.insert(dest, Discovery { attempt });
        let header = self.new_header(ctx, PacketKind::Rreq, RREQ_BYTES, BROADCAST);
        let body = RreqBody {
            broadcast_id: bid,
            orig_seq: self.table.own_seq,
            dest,
            dest_seq_known: self.table.get(dest).map(|e| e.dest_seq),
        };
        vec![
            Action::Send { packet: Packet { header, body: Body::Rreq(body) }, forwarded: false },
            Action::ScheduleRetry { dest, attempt, at: ctx.now + self.params.rreq_retry_timeout },
        ]
    }

    /// Retry timer for a discovery attempt. Stale timers are ignored.
    pub fn on_retry_timer(&mut self, ctx: &mut Ctx<'_>, dest: NodeId, attempt: u32) -> Vec<Action> {
        match self.discoveries.get(&dest) {
            Some(d) if d.attempt == attempt => {}
            _ => return Vec::new(),
        }
        if self.table.valid_route(dest, ctx.now).is_some() {
            self.discoveries.remove(&dest);
            return self.flush(ctx.now, dest);
        }
        if attempt < self.params.rreq_retries {
            return self.start_discovery(ctx, dest, attempt + 1);
        }
        self.discoveries.remove(&dest);
        self.pending
            .take(dest)
            .into_iter()
            .map(|packet| Action::Drop { packet, neighbor: BROADCAST, reason: DropReason::DiscoveryFailed })
            .collect()
    }

    fn flush(&mut self, now: f64, dest: NodeId) -> Vec<Action> {
        let Some(next) = self.table.valid_route(dest, now).map(|e| e.next_hop) else {
            return Vec::new();
        };
        let queued = self.pending.take(dest);
        queued.into_iter().map(|p| self.send_data(now, p, next)).collect()
    }

    /// Entry point for every packet that passed the lower-layer checks.
    pub fn receive(&mut self, ctx: &mut Ctx<'_>, packet: Packet) -> Vec<Action> {
        let prev = packet.header.prev_hop;
        self.neighbors.heard(prev, ctx.now);
        let hello_seq = match packet.body {
            Body::Hello { seq } => Some(seq),
            _ => None,
        };
        let lifetime = self.lifetime();
        self.table.touch_neighbor(prev, hello_seq, ctx.now, lifetime);
        match packet.body {
            Body::Rreq(_) => self.handle_rreq(ctx, packet),
            Body::Rrep(_) => self.handle_rrep(ctx, packet),
            Body::Rerr(_) => self.handle_rerr(ctx, packet),
            Body::Hello { .. } => Vec::new(),
            Body::Data => self.handle_data(ctx, packet),
        }
    }

    pub fn handle_rreq(&mut self, ctx: &mut Ctx<'_>, mut packet: Packet) -> Vec<Action> {
        let Body::Rreq(body) = &mut packet.body else { return Vec::new() };
        let h = &packet.header;
        let now = ctx.now;
        if !self.cache.insert(h.src, body.broadcast_id, now) || !self.cooperative {
            return Vec::new();
        }
        let lifetime = self.lifetime();
        self.table.offer(
            RouteEntry {
                dest: h.src,
                next_hop: h.prev_hop,
                hop_count: h.hop_count + 1,
                dest_seq: body.orig_seq,
                expiry: now + lifetime,
                valid: true,
                active: false,
            },
            now,
        );
        let orig = h.src;
        let prev = h.prev_hop;
        if body.dest == self.id {
            self.table.own_seq = self.table.own_seq.max(body.dest_seq_known.unwrap_or(0));
            let seq = self.table.own_seq;
            let mut header = self.new_header(ctx, PacketKind::Rrep, RREP_BYTES, orig);
            header.link_dst = prev;
            self.table.use_route(orig, now, lifetime);
            let reply = RrepBody { dest: self.id, dest_seq: seq, orig };
            return vec![Action::Send { packet: Packet { header, body: Body::Rrep(reply) }, forwarded: false }];
        }
        if self.params.intermediate_rrep {
            if let Some(route) = self.table.valid_route(body.dest, now).cloned() {
                if body.dest_seq_known.is_none_or(|s| route.dest_seq >= s) {
                    let mut header = self.new_header(ctx, PacketKind::Rrep, RREP_BYTES, orig);
                    header.src = body.dest;
                    header.link_dst = prev;
                    header.hop_count = route.hop_count;
                    self.table.use_route(orig, now, lifetime);
                    self.table.use_route(body.dest, now, lifetime);
                    let reply = RrepBody { dest: body.dest, dest_seq: route.dest_seq, orig };
                    return vec![Action::Send { packet: Packet { header, body: Body::Rrep(reply) }, forwarded: false }];
                }
            }
        }
        if let Some(known) = self.table.get(body.dest).map(|e| e.dest_seq) {
            body.dest_seq_known = Some(body.dest_seq_known.map_or(known, |s| s.max(known)));
        }
        packet.header.hop_count += 1;
        packet.header.link_dst = BROADCAST;
        vec![Action::Send { packet, forwarded: true }]
    }

    pub fn handle_rrep(&mut self, ctx: &mut Ctx<'_>, mut packet: Packet) -> Vec<Action> {
        let Body::Rrep(body) = &packet.body else { return Vec::new() };
        let body = body.clone();
        let now = ctx.now;
        let lifetime = self.lifetime();
        let hops = packet.header.hop_count + 1;
        self.table.offer(
            RouteEntry {
                dest: body.dest,
                next_hop: packet.header.prev_hop,
                hop_count: hops,
                dest_seq: body.dest_seq,
                expiry: now + lifetime,
                valid: true,
                active: false,
            },
            now,
        );
        if body.orig == self.id {
            if !self.discovery_in_flight(body.dest) {
                return Vec::new();
            }
            let Some(found) = self.table.valid_route(body.dest, now).map(|e| e.hop_count) else {
                return Vec::new();
            };
            self.discoveries.remove(&body.dest);
            let mut out = vec![Action::RouteDiscovered { dest: body.dest, hops: found }];
            out.extend(self.flush(now, body.dest));
            return out;
        }
        if !self.cooperative {
            return Vec::new();
        }
        let Some(reverse) = self.table.valid_route(body.orig, now).map(|e| e.next_hop) else {
            let neighbor = packet.header.prev_hop;
            return vec![Action::Drop { packet, neighbor, reason: DropReason::NoReverseRoute }];
        };
        self.table.use_route(body.orig, now, lifetime);
        self.table.use_route(body.dest, now, lifetime);
        packet.header.hop_count = hops;
        packet.header.link_dst = reverse;
        vec![Action::Send { packet, forwarded: true }]
    }

    pub fn handle_data(&mut self, ctx: &mut Ctx<'_>, mut packet: Packet) -> Vec<Action> {
        let now = ctx.now;
        let lifetime = self.lifetime();
        let (src, dst, prev) = (packet.header.src, packet.header.dst, packet.header.prev_hop);
        if dst == self.id {
            if !self.cooperative {
                return Vec::new();
            }
            self.table.use_route(src, now, lifetime);
            return vec![Action::Deliver(packet)];
        }
        if !self.cooperative {
            return Vec::new();
        }
        if let Some(next) = self.table.valid_route(dst, now).map(|e| e.next_hop) {
            self.table.use_route(dst, now, lifetime);
            self.table.use_route(next, now, lifetime);
            self.table.use_route(src, now, lifetime);
            packet.header.hop_count += 1;
            packet.header.link_dst = next;
            return vec![Action::Send { packet, forwarded: true }];
        }
        let seq = self.table.get(dst).map_or(0, |e| e.dest_seq + u64::from(e.valid));
        let mut header = self.new_header(ctx, PacketKind::Rerr, RERR_BASE_BYTES + RERR_ENTRY_BYTES, prev);
        header.link_dst = prev;
        let rerr = Packet { header, body: Body::Rerr(RerrBody { unreachable: vec![(dst, seq)] }) };
        vec![
            Action::Drop { packet, neighbor: prev, reason: DropReason::NoRoute },
            Action::Send { packet: rerr, forwarded: false },
        ]
    }

    pub fn handle_rerr(&mut self, ctx: &mut Ctx<'_>, packet: Packet) -> Vec<Action> {
        let Body::Rerr(body) = &packet.body else { return Vec::new() };
        let now = ctx.now;
        let from = packet.header.prev_hop;
        let mut propagate = Vec::new();
        for &(dest, seq) in &body.unreachable {
            if let Some(e) = self.table.entries.get_mut(&dest) {
                if e.next_hop == from && e.usable(now) {
                    e.valid = false;
                    e.dest_seq = e.dest_seq.max(seq);
                    if e.active {
                        propagate.push((dest, e.dest_seq));
                    }
                }
            }
        }
        if propagate.is_empty() || !self.cooperative {
            return Vec::new();
        }
        vec![self.rerr_broadcast(ctx, propagate)]
    }

    fn rerr_broadcast(&mut self, ctx: &mut Ctx<'_>, unreachable: Vec<(NodeId, u64)>) -> Action {
        let size = RERR_BASE_BYTES + RERR_ENTRY_BYTES * unreachable.len();
        let header = self.new_header(ctx, PacketKind::Rerr, size, BROADCAST);
        Action::Send { packet: Packet { header, body: Body::Rerr(RerrBody { unreachable }) }, forwarded: false }
    }

    /// Invalidates routes through lost neighbors; RERR lists the invalidated routes that
    /// carried traffic.
    pub fn detect_breaks(&mut self, ctx: &mut Ctx<'_>) -> Vec<Action> {
        let now = ctx.now;
        let mut report = Vec::new();
        for nb in self.neighbors.take_lost(now) {
            for (dest, seq, active) in self.table.invalidate_via(nb, now) {
                if active {
                    report.push((dest, seq));
                }
            }
        }
        if report.is_empty() {
            return Vec::new();
        }
        vec![self.rerr_broadcast(ctx, report)]
    }

    /// Periodic timer: break detection, then a HELLO broadcast.
    pub fn on_hello_timer(&mut self, ctx: &mut Ctx<'_>) -> Vec<Action> {
        let mut out = self.detect_breaks(ctx);
        let header = self.new_header(ctx, PacketKind::Hello, HELLO_BYTES, BROADCAST);
        let seq = self.table.own_seq;
        out.push(Action::Send { packet: Packet { header, body: Body::Hello { seq } }, forwarded: false });
        out
    }
}
