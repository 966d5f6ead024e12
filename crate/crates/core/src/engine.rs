//! Deterministic discrete-event loop.
//!
//! Events are processed in `(time, seq)` order, where `seq` is the insertion counter. All
//! randomness comes from independent ChaCha streams derived from the scenario seed, so
//! identical configurations produce identical traces.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aodv::{Action, AodvNode, AodvParams, Ctx, RoutingTable};
use crate::config::{MobilityModel, ScenarioConfig, Sophistication};
use crate::energy::{Debit, EnergyParams, EnergyState};
use crate::medium::{broadcast, MediumConfig};
use crate::metrics::{DiscoveryRecord, Metrics, Report, Sample};
use crate::mlet::{admit_link, annotate, LetConfig};
use crate::mobility::{advance_waypoint, kinematics_at, Kinematics, WaypointBounds, WaypointState};
use crate::model::{DropReason, NodeId, Packet, PacketKind, UidCounter, Vec2, COMMON_HEADER_BYTES};
use crate::saodv::{tag, verify, SecurityConfig, VerifyOutcome};
use crate::trace::{EventType, TraceEvent, TraceSink, FLAGS_PLACEHOLDER};

/// Flow id stamped on attacker DATA.
pub const ATTACK_FID: u32 = 255;

const STREAM_PLACEMENT: u64 = 0;
const STREAM_MEDIUM: u64 = 1;
const STREAM_TAGS: u64 = 2;
const STREAM_ATTACK: u64 = 3;
const STREAM_MOBILITY_BASE: u64 = 16;

/// Independent generator number `stream` for `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Deliver { to: NodeId, packet: Packet },
    HelloTimer(NodeId),
    MobilityUpdate,
    AppSend(usize),
    AttackStep,
    RetryTimer { node: NodeId, dest: NodeId, attempt: u32 },
    MetricSample,
    Stop,
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed so that BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Min-queue on `(time, seq)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: f64, kind: EventKind) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
        seq
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AttackPhase {
    Idle,
    Discovering,
    Flooding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Motion {
    Fixed,
    Linear,
    Waypoint,
}

struct NodeRt {
    aodv: AodvNode,
    energy: EnergyState,
    last_idle: f64,
    way: WaypointState,
    motion: Motion,
    rng: ChaCha8Rng,
    depleted_at: Option<f64>,
}

/// Everything a run produces besides the trace.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub metrics: Metrics,
    pub report: Report,
    /// Final routing table of every node, by id.
    pub tables: Vec<RoutingTable>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Vec<TraceEvent>,
    pub metrics: Metrics,
    pub report: Report,
    pub tables: Vec<RoutingTable>,
}

/// Runs `cfg` to completion and keeps the trace in memory.
pub fn run(cfg: &ScenarioConfig) -> RunOutput {
    let mut trace = Vec::new();
    let s = run_with_sink(cfg, &mut trace).expect("in-memory sink cannot fail");
    RunOutput { trace, metrics: s.metrics, report: s.report, tables: s.tables }
}

/// Runs `cfg` to completion, streaming trace records into `sink`. Fails only if the sink does.
pub fn run_with_sink(cfg: &ScenarioConfig, sink: &mut dyn TraceSink) -> io::Result<RunSummary> {
    let mut sim = Simulator::new(cfg, sink);
    sim.run()?;
    Ok(sim.finish())
}

struct Counters {
    malicious_drops: u64,
    malicious_accepts: u64,
    cum_loss: u64,
    ctrl_overhead: u64,
    delivered: u64,
}

pub struct Simulator<'a> {
    cfg: ScenarioConfig,
    sink: &'a mut dyn TraceSink,
    queue: EventQueue,
    now: f64,
    nodes: Vec<NodeRt>,
    /// Kinematics as of the last mobility update, used for neighbor sets.
    snapshot: Vec<Kinematics>,
    uids: UidCounter,
    medium_rng: ChaCha8Rng,
    tag_rng: ChaCha8Rng,
    attack_rng: ChaCha8Rng,
    security: SecurityConfig,
    let_cfg: LetConfig,
    medium: MediumConfig,
    bounds: WaypointBounds,
    energy: EnergyParams,
    attacker: Option<NodeId>,
    victim: NodeId,
    phase: AttackPhase,
    counters: Counters,
    last_sample: (u64, u64),
    next_sample_index: u64,
    metrics: Metrics,
    report: Report,
}

impl<'a> Simulator<'a> {
    pub fn new(cfg: &ScenarioConfig, sink: &'a mut dyn TraceSink) -> Self {
        let total = cfg.total_nodes() as usize;
        let attacker = cfg.attacker_id();
        let params = AodvParams::from(cfg);
        let bounds = WaypointBounds {
            area_x: cfg.area_x,
            area_y: cfg.area_y,
            speed_min: cfg.mobility.speed_min,
            speed_max: cfg.mobility.speed_max,
            pause: cfg.mobility.pause,
        };
        let mut placement = rng_stream(cfg.rng_seed, STREAM_PLACEMENT);
        let mut nodes = Vec::with_capacity(total);
        for i in 0..total {
            // two draws per node whether or not a position override exists
            let ux: f64 = placement.gen();
            let uy: f64 = placement.gen();
            let over = cfg.nodes.get(&(i as u32));
            let pos = over.and_then(|o| o.pos).unwrap_or(Vec2::new(ux * cfg.area_x, uy * cfg.area_y));
            let mut rng = rng_stream(cfg.rng_seed, STREAM_MOBILITY_BASE + i as u64);
            let (way, motion) = match (over.and_then(|o| o.vel), cfg.mobility.model) {
                (Some(vel), _) => (WaypointState::linear(pos, vel, cfg.area_x, cfg.area_y, 0.0), Motion::Linear),
                (None, MobilityModel::Static) => (WaypointState::fixed(pos), Motion::Fixed),
                (None, MobilityModel::Waypoint) => (WaypointState::start(pos, &mut rng, 0.0, &bounds), Motion::Waypoint),
            };
            let mut aodv = AodvNode::new(NodeId(i as u32), params.clone());
            aodv.cooperative = Some(NodeId(i as u32)) != attacker;
            nodes.push(NodeRt {
                aodv,
                energy: EnergyState::new(&cfg.energy),
                last_idle: 0.0,
                way,
                motion,
                rng,
                depleted_at: None,
            });
        }
        let snapshot = nodes.iter().map(|n| kinematics_at(&n.way, 0.0)).collect();
        let report = Report {
            protocol: cfg.protocol.token().to_string(),
            seed: cfg.rng_seed,
            stop: cfg.stop,
            victim: cfg.attacker.target,
            victim_initial_energy: cfg.energy.initial,
            depleted_at: vec![None; total],
            ..Report::default()
        };
        Simulator {
            security: SecurityConfig {
                k: cfg.num_channels,
                generalized: cfg.generalized_channels,
                map: cfg.channel_map,
                paper_range_check: cfg.paper_range_check,
            },
            let_cfg: LetConfig {
                threshold: cfg.let_threshold,
                applies_to: cfg.let_applies_to.clone(),
                mode: cfg.let_mode,
                annex_bytes: cfg.let_annex_bytes,
            },
            medium: MediumConfig {
                range_r: cfg.range_r,
                bitrate: cfg.bitrate,
                prop_delay: cfg.prop_delay,
                loss_prob: cfg.loss_prob,
            },
            bounds,
            energy: cfg.energy,
            attacker,
            victim: cfg.attacker.target,
            phase: AttackPhase::Idle,
            sink,
            queue: EventQueue::default(),
            now: 0.0,
            nodes,
            snapshot,
            uids: UidCounter::default(),
            medium_rng: rng_stream(cfg.rng_seed, STREAM_MEDIUM),
            tag_rng: rng_stream(cfg.rng_seed, STREAM_TAGS),
            attack_rng: rng_stream(cfg.rng_seed, STREAM_ATTACK),
            counters: Counters { malicious_drops: 0, malicious_accepts: 0, cum_loss: 0, ctrl_overhead: 0, delivered: 0 },
            last_sample: (0, 0),
            next_sample_index: 0,
            metrics: Metrics::default(),
            report,
            cfg: cfg.clone(),
        }
    }

    fn schedule_initial(&mut self) {
        let cfg = &self.cfg;
        let stop = cfg.stop;
        self.queue.push(stop, EventKind::Stop);
        self.queue.push(0.0, EventKind::MetricSample);
        if self.nodes.iter().any(|n| n.motion != Motion::Fixed) {
            self.queue.push(cfg.mobility.update_interval, EventKind::MobilityUpdate);
        }
        let total = self.nodes.len() as f64;
        for i in 0..self.nodes.len() {
            let first = cfg.hello_interval * (i as f64 + 1.0) / (total + 1.0);
            self.queue.push(first, EventKind::HelloTimer(NodeId(i as u32)));
        }
        for (j, f) in cfg.flows.iter().enumerate() {
            self.queue.push(f.start, EventKind::AppSend(j));
        }
        if self.attacker.is_some() {
            self.queue.push(cfg.attacker.start, EventKind::AttackStep);
        }
    }

    pub fn run(&mut self) -> io::Result<()> {
        self.schedule_initial();
        while let Some(ev) = self.queue.pop() {
            if ev.time > self.cfg.stop {
                break;
            }
            self.now = ev.time;
            self.report.events_processed += 1;
            match ev.kind {
                EventKind::Stop => break,
                EventKind::Deliver { to, packet } => self.on_deliver(to, packet)?,
                EventKind::HelloTimer(n) => self.on_hello(n)?,
                EventKind::MobilityUpdate => self.on_mobility(),
                EventKind::AppSend(j) => self.on_app(j)?,
                EventKind::AttackStep => self.on_attack()?,
                EventKind::RetryTimer { node, dest, attempt } => {
                    if self.alive(node) {
                        self.charge_idle(node);
                        let acts = self.nodes[node.index()].aodv.on_retry_timer(
                            &mut Ctx { now: self.now, uids: &mut self.uids },
                            dest,
                            attempt,
                        );
                        self.apply(node, acts)?;
                    }
                }
                EventKind::MetricSample => {
                    self.sample();
                    let next = (self.next_sample_index as f64) * self.cfg.sample_interval;
                    self.queue.push(next, EventKind::MetricSample);
                }
            }
        }
        self.now = self.cfg.stop;
        // grid points at or before stop that were queued behind the stop event
        while (self.next_sample_index as f64) * self.cfg.sample_interval <= self.cfg.stop + 1e-9 {
            self.sample();
        }
        Ok(())
    }

    pub fn finish(mut self) -> RunSummary {
        for i in 0..self.nodes.len() {
            self.charge_idle(NodeId(i as u32));
        }
        let v = self.victim.index();
        self.report.victim_final_energy = self.nodes.get(v).map_or(0.0, |n| n.energy.remaining);
        self.report.depleted_at = self.nodes.iter().map(|n| n.depleted_at).collect();
        self.report.delivered = self.counters.delivered;
        self.report.ctrl_overhead = self.counters.ctrl_overhead;
        RunSummary {
            metrics: self.metrics,
            report: self.report,
            tables: self.nodes.into_iter().map(|n| n.aodv.table).collect(),
        }
    }

    fn alive(&self, n: NodeId) -> bool {
        self.nodes[n.index()].energy.alive
    }

    fn is_attacker(&self, n: NodeId) -> bool {
        Some(n) == self.attacker
    }

    fn mark_dead(&mut self, n: NodeId) {
        let node = &mut self.nodes[n.index()];
        if node.depleted_at.is_none() {
            node.depleted_at = Some(self.now);
        }
    }

    /// Applies idle drain since the node's last accounting instant. The attacker is exempt.
    fn charge_idle(&mut self, n: NodeId) {
        let now = self.now;
        let exempt = self.is_attacker(n);
        let node = &mut self.nodes[n.index()];
        let dt = now - node.last_idle;
        node.last_idle = now;
        if exempt || dt <= 0.0 {
            return;
        }
        if node.energy.debit_idle(&self.energy, dt) {
            self.mark_dead(n);
        }
    }

    /// True when the debit killed the node.
    fn debit(&mut self, n: NodeId, what: Debit) -> bool {
        if self.is_attacker(n) {
            return false;
        }
        let died = self.nodes[n.index()].energy.debit(&self.energy, what);
        if died {
            self.mark_dead(n);
        }
        died
    }

    fn kinematics_now(&self, n: NodeId) -> Kinematics {
        kinematics_at(&self.nodes[n.index()].way, self.now)
    }

    fn sample(&mut self) {
        for i in 0..self.nodes.len() {
            self.charge_idle(NodeId(i as u32));
        }
        let t = self.next_sample_index as f64 * self.cfg.sample_interval;
        self.next_sample_index += 1;
        let c = &self.counters;
        let (pd, pa) = self.last_sample;
        self.metrics.samples.push(Sample {
            t,
            malicious_drops: c.malicious_drops - pd,
            malicious_accepts: c.malicious_accepts - pa,
            victim_energy: self.nodes.get(self.victim.index()).map_or(0.0, |n| n.energy.remaining),
            cum_loss: c.cum_loss,
            ctrl_overhead: c.ctrl_overhead,
            delivered: c.delivered,
            energies: self.nodes.iter().map(|n| n.energy.remaining).collect(),
        });
        self.last_sample = (c.malicious_drops, c.malicious_accepts);
    }

    fn trace(&mut self, event: EventType, at: NodeId, neighbor: NodeId, p: &Packet) -> io::Result<()> {
        let h = &p.header;
        self.sink.emit(&TraceEvent {
            event,
            time: self.now,
            source: at,
            destination: neighbor,
            pkt_type: h.kind,
            pkt_size: h.size,
            flags: FLAGS_PLACEHOLDER.to_string(),
            fid: h.fid,
            src_addr: h.src,
            dst_addr: h.dst,
            seq_num: h.seq,
            pkt_id: h.uid,
        })
    }

    fn drop_packet(&mut self, at: NodeId, neighbor: NodeId, p: &Packet, reason: DropReason) -> io::Result<()> {
        *self.report.drops.entry(reason).or_insert(0) += 1;
        if p.header.kind == PacketKind::Data && Some(p.header.src) != self.attacker {
            self.counters.cum_loss += 1;
        }
        self.trace(EventType::Drop, at, neighbor, p)
    }

    fn apply(&mut self, node: NodeId, actions: Vec<Action>) -> io::Result<()> {
        for a in actions {
            match a {
                Action::Send { packet, forwarded } => self.transmit(node, packet, forwarded, false)?,
                Action::Deliver(p) => {
                    if Some(p.header.src) != self.attacker {
                        self.counters.delivered += 1;
                    }
                }
                Action::Drop { packet, neighbor, reason } => self.drop_packet(node, neighbor, &packet, reason)?,
                Action::ScheduleRetry { dest, attempt, at } => {
                    self.queue.push(at, EventKind::RetryTimer { node, dest, attempt });
                }
                Action::RouteDiscovered { dest, hops } => {
                    self.report.discoveries.push(DiscoveryRecord { t: self.now, node, dest, hops });
                    if self.is_attacker(node) && dest == self.victim {
                        self.phase = AttackPhase::Flooding;
                    }
                }
            }
        }
        Ok(())
    }

    /// Tags, annotates, charges, traces and hands a packet to the medium.
    fn transmit(&mut self, node: NodeId, mut p: Packet, forwarded: bool, pretagged: bool) -> io::Result<()> {
        if !self.alive(node) {
            return Ok(());
        }
        self.charge_idle(node);
        if !self.alive(node) {
            return Ok(());
        }
        p.header.prev_hop = node;
        if !pretagged {
            tag(&mut p.header, &self.security, &mut self.tag_rng);
        }
        if self.cfg.protocol.mobility_aware() {
            let kin = self.kinematics_now(node);
            p.header = annotate(p.header, kin, &self.let_cfg);
        }
        let link_dst = p.header.link_dst;
        if self.debit(node, Debit::Tx(p.header.size)) {
            return self.drop_packet(node, link_dst, &p, DropReason::EnergyDepleted);
        }
        let ev = if forwarded { EventType::Forward } else { EventType::Send };
        self.trace(ev, node, link_dst, &p)?;
        if p.header.kind.is_control() {
            self.counters.ctrl_overhead += 1;
        }
        if p.header.kind == PacketKind::Rerr {
            self.report.rerr_sent += 1;
        }
        if self.is_attacker(node) && p.header.kind == PacketKind::Data {
            self.report.attack.sent += 1;
        }
        let view: Vec<Option<Kinematics>> = self
            .snapshot
            .iter()
            .zip(&self.nodes)
            .map(|(k, n)| n.energy.alive.then_some(*k))
            .collect();
        let size = p.header.size;
        let deliveries = broadcast(node, &p, size, self.now, &view, &self.medium, &mut self.medium_rng);
        let mut reached = link_dst.is_broadcast();
        for d in deliveries {
            if link_dst.is_broadcast() || d.receiver == link_dst {
                reached = true;
                self.queue.push(d.arrival_time, EventKind::Deliver { to: d.receiver, packet: d.packet });
            }
        }
        if !reached {
            self.drop_packet(node, link_dst, &p, DropReason::LinkLost)?;
        }
        Ok(())
    }

    fn on_deliver(&mut self, to: NodeId, p: Packet) -> io::Result<()> {
        if !self.alive(to) {
            return Ok(());
        }
        self.charge_idle(to);
        if !self.alive(to) {
            return Ok(());
        }
        let k = self.security.k;
        if self.cfg.physical_channels && !(1..=k).contains(&p.header.channel) {
            return Ok(());
        }
        let size = p.header.size;
        let head = size.min(COMMON_HEADER_BYTES);
        if self.debit(to, Debit::Rx(head)) {
            return Ok(());
        }
        let prev = p.header.prev_hop;
        let malicious = p.header.kind == PacketKind::Data
            && to == self.victim
            && self.attacker.is_some_and(|a| a == p.header.src);
        if malicious {
            self.report.attack.arrivals += 1;
        }
        if self.cfg.protocol.verifies_tags() {
            let reason = match verify(&p.header, &self.security) {
                VerifyOutcome::Accept => None,
                VerifyOutcome::DropRange => Some(DropReason::VerifyRange),
                VerifyOutcome::DropMismatch => Some(DropReason::VerifyMismatch),
            };
            if let Some(reason) = reason {
                if malicious {
                    self.report.attack.drops += 1;
                    self.counters.malicious_drops += 1;
                }
                return self.drop_packet(to, prev, &p, reason);
            }
        }
        if malicious {
            self.report.attack.accepts += 1;
            self.counters.malicious_accepts += 1;
        }
        if self.cfg.protocol.mobility_aware() && self.let_cfg.applies(p.header.kind) {
            if let Some(sender) = p.header.sender_kin {
                let own = self.kinematics_now(to);
                if !admit_link(&sender, &own, self.cfg.range_r, &self.let_cfg) {
                    return self.drop_packet(to, prev, &p, DropReason::LetReject);
                }
            }
        }
        if self.debit(to, Debit::Rx(size - head)) {
            return Ok(());
        }
        self.trace(EventType::Receive, to, prev, &p)?;
        let acts = self.nodes[to.index()].aodv.receive(&mut Ctx { now: self.now, uids: &mut self.uids }, p);
        self.apply(to, acts)
    }

    fn on_hello(&mut self, n: NodeId) -> io::Result<()> {
        if !self.alive(n) {
            return Ok(());
        }
        self.charge_idle(n);
        let acts = self.nodes[n.index()].aodv.on_hello_timer(&mut Ctx { now: self.now, uids: &mut self.uids });
        self.apply(n, acts)?;
        if self.alive(n) {
            self.queue.push(self.now + self.cfg.hello_interval, EventKind::HelloTimer(n));
        }
        Ok(())
    }

    /// Advances every node's trajectory, alive or not, so that mobility never depends on the
    /// protocol under test.
    fn on_mobility(&mut self) {
        let t = self.now;
        for n in &mut self.nodes {
            if n.motion == Motion::Waypoint {
                while n.way.arrived(t) {
                    let at = n.way.arrival_time();
                    if !at.is_finite() {
                        break;
                    }
                    n.way = advance_waypoint(&n.way, &mut n.rng, at, &self.bounds);
                }
            }
        }
        self.snapshot = self.nodes.iter().map(|n| kinematics_at(&n.way, t)).collect();
        self.queue.push(t + self.cfg.mobility.update_interval, EventKind::MobilityUpdate);
    }

    fn on_app(&mut self, j: usize) -> io::Result<()> {
        let f = self.cfg.flows[j].clone();
        let end = f.stop.unwrap_or(self.cfg.stop).min(self.cfg.stop);
        if self.now >= end || !self.alive(f.src) {
            return Ok(());
        }
        self.charge_idle(f.src);
        self.report.honest_sent += 1;
        let acts = self.nodes[f.src.index()].aodv.originate(
            &mut Ctx { now: self.now, uids: &mut self.uids },
            f.dst,
            f.size,
            j as u32 + 1,
        );
        self.apply(f.src, acts)?;
        self.queue.push(self.now + 1.0 / f.rate, EventKind::AppSend(j));
        Ok(())
    }

    fn on_attack(&mut self) -> io::Result<()> {
        let Some(me) = self.attacker else { return Ok(()) };
        let target = self.victim;
        let now = self.now;
        let (has_route, in_flight) = {
            let a = &self.nodes[me.index()].aodv;
            (a.table.valid_route(target, now).is_some(), a.discovery_in_flight(target))
        };
        match self.phase {
            AttackPhase::Idle => {
                self.phase = AttackPhase::Discovering;
                let acts = self.nodes[me.index()].aodv.discover(&mut Ctx { now, uids: &mut self.uids }, target);
                self.apply(me, acts)?;
            }
            AttackPhase::Discovering if !in_flight => {
                if has_route {
                    self.phase = AttackPhase::Flooding;
                    self.send_attack_packet(me, target)?;
                } else {
                    let acts = self.nodes[me.index()].aodv.discover(&mut Ctx { now, uids: &mut self.uids }, target);
                    self.apply(me, acts)?;
                }
            }
            AttackPhase::Discovering => {}
            AttackPhase::Flooding => {
                if has_route {
                    self.send_attack_packet(me, target)?;
                } else {
                    self.phase = AttackPhase::Discovering;
                    let acts = self.nodes[me.index()].aodv.discover(&mut Ctx { now, uids: &mut self.uids }, target);
                    self.apply(me, acts)?;
                }
            }
        }
        self.queue.push(now + 1.0 / self.cfg.attacker.rate, EventKind::AttackStep);
        Ok(())
    }

    fn send_attack_packet(&mut self, me: NodeId, target: NodeId) -> io::Result<()> {
        let now = self.now;
        let a = &self.cfg.attacker;
        let node = &mut self.nodes[me.index()].aodv;
        let Some(next) = node.table.valid_route(target, now).map(|e| e.next_hop) else {
            return Ok(());
        };
        let lifetime = node.params.route_lifetime;
        node.table.use_route(target, now, lifetime);
        node.table.use_route(next, now, lifetime);
        let mut header = node.new_header(&mut Ctx { now, uids: &mut self.uids }, PacketKind::Data, a.payload, target);
        header.fid = ATTACK_FID;
        header.link_dst = next;
        header.prev_hop = me;
        match a.sophistication {
            Sophistication::NaiveFixed => {
                header.rv1 = a.rv1;
                header.rv2 = a.rv2;
                header.channel = a.channel;
            }
            Sophistication::NaiveRandom => {
                header.rv1 = self.attack_rng.gen();
                header.rv2 = self.attack_rng.gen();
                header.channel = self.attack_rng.gen_range(1..=self.security.k.max(1));
            }
            Sophistication::Insider => tag(&mut header, &self.security, &mut self.tag_rng),
        }
        let packet = Packet { header, body: crate::model::Body::Data };
        self.transmit(me, packet, false, true)
    }
}
