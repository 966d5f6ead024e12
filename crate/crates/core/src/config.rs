//! Scenario configuration: flat `key = value` text, validated into [`ScenarioConfig`].
//!
//! Every key is optional. Unknown keys are rejected, and all violations are reported together.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `nn` | 25 | honest node count |
//! | `x`, `y` | 50, 50 | area in meters |
//! | `stop` | 50 | simulated seconds |
//! | `rp` | SAODV | `AODV`, `SAODV`, `SAODV_MLET`, `AODV_MLET` |
//! | `seed` | 1 | master RNG seed |
//! | `range` | 15 | transmission range in meters |
//! | `channels` | 2 | channel count `k` |
//! | `generalized_channels` | true | allow `k > 2` |
//! | `channel_map` | linear | `linear` or `balanced` mapping for `k > 2` |
//! | `paper_range_check` | false | check only `rv1 + rv2 ∈ [0,2]` |
//! | `physical_channels` | false | drop attacker packets tagged outside `1..=k` at the radio |
//! | `let_threshold` | 5 with MLET, else 0 | minimum admitted link lifetime (s) |
//! | `let_mode` | strict | `strict` or `paper` |
//! | `let_applies_to` | RREQ | comma list of RREQ, RREP, DATA |
//! | `let_annex_bytes` | 24 | size of the kinematics annex |
//! | `bitrate` | 250000 | bits/s |
//! | `prop_delay` | 0 | seconds |
//! | `loss_prob` | 0 | independent per-receiver loss |
//! | `hello_interval` | 1 | seconds |
//! | `hello_loss_limit` | 2 | missed HELLOs before a neighbor is lost |
//! | `route_lifetime` | 10 | seconds, refreshed on use |
//! | `rreq_retries` | 2 | discovery retries |
//! | `rreq_retry_timeout` | 1 | seconds |
//! | `rreq_cache_ttl` | 5 | seconds |
//! | `buffer_capacity` | 64 | pending DATA per destination |
//! | `intermediate_rrep` | false | intermediate nodes may answer RREQs |
//! | `sample_interval` | 1 | metric sampling period (s) |
//! | `energy.initial` | 10 | J |
//! | `energy.tx_per_byte` | 0.00006 | J/B |
//! | `energy.rx_per_byte` | 0.00003 | J/B |
//! | `energy.idle_per_sec` | 0.001 | J/s |
//! | `attacker.enabled` | false | adds node `nn` as attacker |
//! | `attacker.target` | 0 | victim |
//! | `attacker.start` | 5 | seconds |
//! | `attacker.rate` | 200 | packets/s |
//! | `attacker.payload` | 100 | bytes |
//! | `attacker.sophistication` | naive_fixed | `naive_fixed`, `naive_random`, `insider` |
//! | `attacker.rv1`, `attacker.rv2`, `attacker.channel` | 0.2, 0.8, 2 | constant tag for `naive_fixed` |
//! | `attacker.mode` | resource_exhaustion | only supported attack |
//! | `mobility.model` | waypoint | `waypoint` or `static` |
//! | `mobility.speed_min`, `mobility.speed_max` | 0, 5 | m/s |
//! | `mobility.pause` | 2 | seconds |
//! | `mobility.update_interval` | 0.1 | seconds |
//! | `node.<i>.pos` | random | `x,y` initial position |
//! | `node.<i>.vel` | none | `vx,vy`: straight-line motion until the area edge |
//! | `flow.<j>` | none | CBR flow `src,dst,rate,size,start[,stop]` |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::energy::EnergyParams;
use crate::mlet::KINEMATICS_ANNEX_BYTES;
use crate::mobility::LetMode;
use crate::model::{NodeId, PacketKind, Vec2};
use crate::saodv::ChannelMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Aodv,
    Saodv,
    SaodvMlet,
    AodvMlet,
}

impl Protocol {
    pub fn verifies_tags(self) -> bool {
        matches!(self, Protocol::Saodv | Protocol::SaodvMlet)
    }

    pub fn mobility_aware(self) -> bool {
        matches!(self, Protocol::SaodvMlet | Protocol::AodvMlet)
    }

    pub fn token(self) -> &'static str {
        match self {
            Protocol::Aodv => "AODV",
            Protocol::Saodv => "SAODV",
            Protocol::SaodvMlet => "SAODV_MLET",
            Protocol::AodvMlet => "AODV_MLET",
        }
    }
}

impl FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "AODV" => Ok(Protocol::Aodv),
            "SAODV" => Ok(Protocol::Saodv),
            "SAODV_MLET" => Ok(Protocol::SaodvMlet),
            "AODV_MLET" => Ok(Protocol::AodvMlet),
            _ => Err(format!("unknown protocol `{s}` (expected AODV|SAODV|SAODV_MLET|AODV_MLET)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sophistication {
    /// Constant random values and channel.
    NaiveFixed,
    /// Values and channel drawn uniformly and independently.
    NaiveRandom,
    /// Tags packets exactly like an honest sender.
    Insider,
}

impl Sophistication {
    pub fn token(self) -> &'static str {
        match self {
            Sophistication::NaiveFixed => "naive_fixed",
            Sophistication::NaiveRandom => "naive_random",
            Sophistication::Insider => "insider",
        }
    }
}

impl FromStr for Sophistication {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "naive_fixed" => Ok(Sophistication::NaiveFixed),
            "naive_random" => Ok(Sophistication::NaiveRandom),
            "insider" => Ok(Sophistication::Insider),
            _ => Err(format!("unknown sophistication `{s}` (expected naive_fixed|naive_random|insider)")),
        }
    }
}

/// Attack families named for completeness; only resource exhaustion is simulated.
pub const REJECTED_ATTACK_MODES: [&str; 4] =
    ["node_outage", "link_jamming", "collision", "traffic_manipulation"];

#[derive(Debug, Clone, PartialEq)]
pub struct AttackerParams {
    pub enabled: bool,
    pub target: NodeId,
    pub start: f64,
    pub rate: f64,
    pub payload: usize,
    pub sophistication: Sophistication,
    pub rv1: f64,
    pub rv2: f64,
    pub channel: u32,
}

impl Default for AttackerParams {
    fn default() -> Self {
        AttackerParams {
            enabled: false,
            target: NodeId(0),
            start: 5.0,
            rate: 200.0,
            payload: 100,
            sophistication: Sophistication::NaiveFixed,
            rv1: 0.2,
            rv2: 0.8,
            channel: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MobilityModel {
    #[default]
    Waypoint,
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityParams {
    pub model: MobilityModel,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause: f64,
    pub update_interval: f64,
}

impl Default for MobilityParams {
    fn default() -> Self {
        MobilityParams {
            model: MobilityModel::Waypoint,
            speed_min: 0.0,
            speed_max: 5.0,
            pause: 2.0,
            update_interval: 0.1,
        }
    }
}

/// Constant-bit-rate application flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub src: NodeId,
    pub dst: NodeId,
    /// Packets per second.
    pub rate: f64,
    pub size: usize,
    pub start: f64,
    pub stop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeOverride {
    pub pos: Option<Vec2>,
    pub vel: Option<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub nn: u32,
    pub area_x: f64,
    pub area_y: f64,
    pub stop: f64,
    pub protocol: Protocol,
    pub rng_seed: u64,
    pub range_r: f64,
    pub num_channels: u32,
    pub generalized_channels: bool,
    pub channel_map: ChannelMap,
    pub paper_range_check: bool,
    pub physical_channels: bool,
    pub let_threshold: f64,
    pub let_mode: LetMode,
    pub let_applies_to: BTreeSet<PacketKind>,
    pub let_annex_bytes: usize,
    pub bitrate: f64,
    pub prop_delay: f64,
    pub loss_prob: f64,
    pub hello_interval: f64,
    pub hello_loss_limit: u32,
    pub route_lifetime: f64,
    pub rreq_retries: u32,
    pub rreq_retry_timeout: f64,
    pub rreq_cache_ttl: f64,
    pub buffer_capacity: usize,
    pub intermediate_rrep: bool,
    pub sample_interval: f64,
    pub energy: EnergyParams,
    pub attacker: AttackerParams,
    pub mobility: MobilityParams,
    pub nodes: BTreeMap<u32, NodeOverride>,
    pub flows: Vec<FlowSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nn: 25,
            area_x: 50.0,
            area_y: 50.0,
            stop: 50.0,
            protocol: Protocol::Saodv,
            rng_seed: 1,
            range_r: 15.0,
            num_channels: 2,
            generalized_channels: true,
            channel_map: ChannelMap::Linear,
            paper_range_check: false,
            physical_channels: false,
            let_threshold: 0.0,
            let_mode: LetMode::Strict,
            let_applies_to: BTreeSet::from([PacketKind::Rreq]),
            let_annex_bytes: KINEMATICS_ANNEX_BYTES,
            bitrate: 250_000.0,
            prop_delay: 0.0,
            loss_prob: 0.0,
            hello_interval: 1.0,
            hello_loss_limit: 2,
            route_lifetime: 10.0,
            rreq_retries: 2,
            rreq_retry_timeout: 1.0,
            rreq_cache_ttl: 5.0,
            buffer_capacity: 64,
            intermediate_rrep: false,
            sample_interval: 1.0,
            energy: EnergyParams::default(),
            attacker: AttackerParams::default(),
            mobility: MobilityParams::default(),
            nodes: BTreeMap::new(),
            flows: Vec::new(),
        }
    }
}

/// Default MLET threshold when `let_threshold` is absent and the protocol is mobility aware.
pub const DEFAULT_MLET_THRESHOLD: f64 = 5.0;

impl ScenarioConfig {
    /// Honest nodes plus the attacker, if enabled.
    pub fn total_nodes(&self) -> u32 {
        self.nn + u32::from(self.attacker.enabled)
    }

    pub fn attacker_id(&self) -> Option<NodeId> {
        self.attacker.enabled.then_some(NodeId(self.nn))
    }

    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        validate_config(&parse_raw(text)?)
    }

    /// Serializes every field as `key = value` lines; [`ScenarioConfig::parse`] restores an
    /// equal value.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            writeln!(s, "{k} = {v}").unwrap();
        };
        kv("nn", &self.nn);
        kv("x", &self.area_x);
        kv("y", &self.area_y);
        kv("stop", &self.stop);
        kv("rp", &self.protocol.token());
        kv("seed", &self.rng_seed);
        kv("range", &self.range_r);
        kv("channels", &self.num_channels);
        kv("generalized_channels", &self.generalized_channels);
        kv("channel_map", &self.channel_map.token());
        kv("paper_range_check", &self.paper_range_check);
        kv("physical_channels", &self.physical_channels);
        kv("let_threshold", &self.let_threshold);
        kv("let_mode", &self.let_mode.token());
        let applies: Vec<&str> = self.let_applies_to.iter().map(|k| k.token()).collect();
        kv("let_applies_to", &applies.join(","));
        kv("let_annex_bytes", &self.let_annex_bytes);
        kv("bitrate", &self.bitrate);
        kv("prop_delay", &self.prop_delay);
        kv("loss_prob", &self.loss_prob);
        kv("hello_interval", &self.hello_interval);
        kv("hello_loss_limit", &self.hello_loss_limit);
        kv("route_lifetime", &self.route_lifetime);
        kv("rreq_retries", &self.rreq_retries);
        kv("rreq_retry_timeout", &self.rreq_retry_timeout);
        kv("rreq_cache_ttl", &self.rreq_cache_ttl);
        kv("buffer_capacity", &self.buffer_capacity);
        kv("intermediate_rrep", &self.intermediate_rrep);
        kv("sample_interval", &self.sample_interval);
        kv("energy.initial", &self.energy.initial);
        kv("energy.tx_per_byte", &self.energy.tx_per_byte);
        kv("energy.rx_per_byte", &self.energy.rx_per_byte);
        kv("energy.idle_per_sec", &self.energy.idle_per_sec);
        let a = &self.attacker;
        kv("attacker.enabled", &a.enabled);
        kv("attacker.target", &a.target);
        kv("attacker.start", &a.start);
        kv("attacker.rate", &a.rate);
        kv("attacker.payload", &a.payload);
        kv("attacker.sophistication", &a.sophistication.token());
        kv("attacker.rv1", &a.rv1);
        kv("attacker.rv2", &a.rv2);
        kv("attacker.channel", &a.channel);
        kv("attacker.mode", &"resource_exhaustion");
        let m = &self.mobility;
        kv(
            "mobility.model",
            &match m.model {
                MobilityModel::Waypoint => "waypoint",
                MobilityModel::Static => "static",
            },
        );
        kv("mobility.speed_min", &m.speed_min);
        kv("mobility.speed_max", &m.speed_max);
        kv("mobility.pause", &m.pause);
        kv("mobility.update_interval", &m.update_interval);
        for (i, o) in &self.nodes {
            if let Some(p) = o.pos {
                kv(&format!("node.{i}.pos"), &format!("{},{}", p.x, p.y));
            }
            if let Some(v) = o.vel {
                kv(&format!("node.{i}.vel"), &format!("{},{}", v.x, v.y));
            }
        }
        for (j, f) in self.flows.iter().enumerate() {
            let mut v = format!("{},{},{},{},{}", f.src, f.dst, f.rate, f.size, f.start);
            if let Some(stop) = f.stop {
                write!(v, ",{stop}").unwrap();
            }
            kv(&format!("flow.{j}"), &v);
        }
        s
    }
}

impl FromStr for ScenarioConfig {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        ScenarioConfig::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration:{}", .violations.iter().map(|v| format!("\n  {v}")).collect::<String>())]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl ConfigError {
    pub fn keys(&self) -> Vec<&str> {
        self.violations.iter().map(|v| v.key.as_str()).collect()
    }
}

/// Raw key/value document.
pub type RawConfig = BTreeMap<String, String>;

/// Splits `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::new();
    let mut violations = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            violations.push(Violation {
                key: format!("line {}", n + 1),
                message: format!("line {}: expected `key = value`", n + 1),
            });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if raw.insert(k.to_string(), v.to_string()).is_some() {
            violations.push(Violation {
                key: k.to_string(),
                message: format!("{k} is set more than once (line {})", n + 1),
            });
        }
    }
    if violations.is_empty() {
        Ok(raw)
    } else {
        Err(ConfigError { violations })
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<&'a str>,
    violations: Vec<Violation>,
}

impl<'a> Reader<'a> {
    fn violation(&mut self, key: &str, message: String) {
        self.violations.push(Violation { key: key.to_string(), message });
    }

    fn get(&mut self, key: &'static str) -> Option<&'a str> {
        let (k, v) = self.raw.get_key_value(key)?;
        self.used.insert(k.as_str());
        Some(v.as_str())
    }

    fn value<T: FromStr>(&mut self, key: &'static str, default: T) -> T
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => default,
            Some(v) => match v.parse::<T>() {
                Ok(x) => x,
                Err(e) => {
                    self.violation(key, format!("{key}: cannot parse `{v}`: {e}"));
                    default
                }
            },
        }
    }

    fn real(&mut self, key: &'static str, default: f64) -> f64 {
        let x = self.value(key, default);
        if !x.is_finite() {
            self.violation(key, format!("{key} must be finite"));
            return default;
        }
        x
    }

    fn check(&mut self, ok: bool, key: &str, message: &str) {
        if !ok {
            self.violation(key, message.to_string());
        }
    }
}

fn parse_pair(v: &str) -> Result<Vec2, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `a,b`, got `{v}`"));
    }
    let a: f64 = parts[0].parse().map_err(|_| format!("`{}` is not a number", parts[0]))?;
    let b: f64 = parts[1].parse().map_err(|_| format!("`{}` is not a number", parts[1]))?;
    if !a.is_finite() || !b.is_finite() {
        return Err("components must be finite".into());
    }
    Ok(Vec2::new(a, b))
}

fn parse_flow(v: &str) -> Result<FlowSpec, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if !(5..=6).contains(&parts.len()) {
        return Err(format!("expected `src,dst,rate,size,start[,stop]`, got `{v}`"));
    }
    let num = |s: &str| -> Result<f64, String> {
        let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err("values must be finite".into())
        }
    };
    let id = |s: &str| -> Result<NodeId, String> {
        s.parse::<u32>().map(NodeId).map_err(|_| format!("`{s}` is not a node id"))
    };
    Ok(FlowSpec {
        src: id(parts[0])?,
        dst: id(parts[1])?,
        rate: num(parts[2])?,
        size: parts[3].parse().map_err(|_| format!("`{}` is not a byte count", parts[3]))?,
        start: num(parts[4])?,
        stop: parts.get(5).map(|s| num(s)).transpose()?,
    })
}

fn parse_kinds(v: &str) -> Result<BTreeSet<PacketKind>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<PacketKind>())
        .collect()
}

/// Builds a validated config from raw key/value pairs. Missing keys take the defaults listed in
/// the module documentation.
pub fn validate_config(raw: &RawConfig) -> Result<ScenarioConfig, ConfigError> {
    let d = ScenarioConfig::default();
    let mut r = Reader { raw, used: BTreeSet::new(), violations: Vec::new() };

    let nn: u32 = r.value("nn", d.nn);
    let area_x = r.real("x", d.area_x);
    let area_y = r.real("y", d.area_y);
    let stop = r.real("stop", d.stop);
    let protocol: Protocol = r.value("rp", d.protocol);
    let rng_seed: u64 = r.value("seed", d.rng_seed);
    let range_r = r.real("range", d.range_r);
    let num_channels: u32 = r.value("channels", d.num_channels);
    let generalized_channels: bool = r.value("generalized_channels", d.generalized_channels);
    let channel_map: ChannelMap = r.value("channel_map", d.channel_map);
    let paper_range_check: bool = r.value("paper_range_check", d.paper_range_check);
    let physical_channels: bool = r.value("physical_channels", d.physical_channels);
    let default_threshold = if protocol.mobility_aware() { DEFAULT_MLET_THRESHOLD } else { 0.0 };
    let let_threshold = r.real("let_threshold", default_threshold);
    let let_mode: LetMode = r.value("let_mode", d.let_mode);
    let let_applies_to = match r.get("let_applies_to") {
        None => d.let_applies_to.clone(),
        Some(v) => match parse_kinds(v) {
            Ok(set) => set,
            Err(e) => {
                r.violation("let_applies_to", format!("let_applies_to: {e}"));
                d.let_applies_to.clone()
            }
        },
    };
    let let_annex_bytes: usize = r.value("let_annex_bytes", d.let_annex_bytes);
    let bitrate = r.real("bitrate", d.bitrate);
    let prop_delay = r.real("prop_delay", d.prop_delay);
    let loss_prob = r.real("loss_prob", d.loss_prob);
    let hello_interval = r.real("hello_interval", d.hello_interval);
    let hello_loss_limit: u32 = r.value("hello_loss_limit", d.hello_loss_limit);
    let route_lifetime = r.real("route_lifetime", d.route_lifetime);
    let rreq_retries: u32 = r.value("rreq_retries", d.rreq_retries);
    let rreq_retry_timeout = r.real("rreq_retry_timeout", d.rreq_retry_timeout);
    let rreq_cache_ttl = r.real("rreq_cache_ttl", d.rreq_cache_ttl);
    let buffer_capacity: usize = r.value("buffer_capacity", d.buffer_capacity);
    let intermediate_rrep: bool = r.value("intermediate_rrep", d.intermediate_rrep);
    let sample_interval = r.real("sample_interval", d.sample_interval);

    let energy = EnergyParams {
        initial: r.real("energy.initial", d.energy.initial),
        tx_per_byte: r.real("energy.tx_per_byte", d.energy.tx_per_byte),
        rx_per_byte: r.real("energy.rx_per_byte", d.energy.rx_per_byte),
        idle_per_sec: r.real("energy.idle_per_sec", d.energy.idle_per_sec),
    };

    let da = &d.attacker;
    let attacker = AttackerParams {
        enabled: r.value("attacker.enabled", da.enabled),
        target: NodeId(r.value("attacker.target", da.target.0)),
        start: r.real("attacker.start", da.start),
        rate: r.real("attacker.rate", da.rate),
        payload: r.value("attacker.payload", da.payload),
        sophistication: r.value("attacker.sophistication", da.sophistication),
        rv1: r.real("attacker.rv1", da.rv1),
        rv2: r.real("attacker.rv2", da.rv2),
        channel: r.value("attacker.channel", da.channel),
    };
    if let Some(mode) = r.get("attacker.mode") {
        let m = mode.to_ascii_lowercase();
        if REJECTED_ATTACK_MODES.contains(&m.as_str()) {
            r.violation("attacker.mode", format!("attacker.mode `{mode}` is not supported (only resource_exhaustion)"));
        } else if m != "resource_exhaustion" {
            r.violation("attacker.mode", format!("attacker.mode: unknown mode `{mode}`"));
        }
    }

    let dm = &d.mobility;
    let model = match r.get("mobility.model") {
        None => dm.model,
        Some(v) => match v.to_ascii_lowercase().as_str() {
            "waypoint" => MobilityModel::Waypoint,
            "static" => MobilityModel::Static,
            _ => {
                r.violation("mobility.model", format!("mobility.model: unknown model `{v}` (expected waypoint|static)"));
                dm.model
            }
        },
    };
    let mobility = MobilityParams {
        model,
        speed_min: r.real("mobility.speed_min", dm.speed_min),
        speed_max: r.real("mobility.speed_max", dm.speed_max),
        pause: r.real("mobility.pause", dm.pause),
        update_interval: r.real("mobility.update_interval", dm.update_interval),
    };

    // indexed keys
    let mut nodes: BTreeMap<u32, NodeOverride> = BTreeMap::new();
    let mut flows: BTreeMap<u32, FlowSpec> = BTreeMap::new();
    let mut unknown = Vec::new();
    for (k, v) in raw {
        if r.used.contains(k.as_str()) {
            continue;
        }
        let parts: Vec<&str> = k.split('.').collect();
        match parts.as_slice() {
            ["node", idx, field @ ("pos" | "vel")] => {
                let Ok(i) = idx.parse::<u32>() else {
                    unknown.push(k.clone());
                    continue;
                };
                match parse_pair(v) {
                    Ok(p) => {
                        let o = nodes.entry(i).or_default();
                        if *field == "pos" {
                            o.pos = Some(p);
                        } else {
                            o.vel = Some(p);
                        }
                    }
                    Err(e) => r.violation(k, format!("{k}: {e}")),
                }
            }
            ["flow", idx] => {
                let Ok(j) = idx.parse::<u32>() else {
                    unknown.push(k.clone());
                    continue;
                };
                match parse_flow(v) {
                    Ok(f) => {
                        flows.insert(j, f);
                    }
                    Err(e) => r.violation(k, format!("{k}: {e}")),
                }
            }
            _ => unknown.push(k.clone()),
        }
    }
    for k in unknown {
        r.violation(&k, format!("unknown key `{k}`"));
    }

    let cfg = ScenarioConfig {
        nn,
        area_x,
        area_y,
        stop,
        protocol,
        rng_seed,
        range_r,
        num_channels,
        generalized_channels,
        channel_map,
        paper_range_check,
        physical_channels,
        let_threshold,
        let_mode,
        let_applies_to,
        let_annex_bytes,
        bitrate,
        prop_delay,
        loss_prob,
        hello_interval,
        hello_loss_limit,
        route_lifetime,
        rreq_retries,
        rreq_retry_timeout,
        rreq_cache_ttl,
        buffer_capacity,
        intermediate_rrep,
        sample_interval,
        energy,
        attacker,
        mobility,
        nodes,
        flows: flows.into_values().collect(),
    };
    check_invariants(&cfg, &mut r);

    if r.violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { violations: r.violations })
    }
}

fn check_invariants(c: &ScenarioConfig, r: &mut Reader<'_>) {
    r.check(c.nn >= 1, "nn", "nn must be ≥ 1");
    r.check(c.area_x > 0.0, "x", "x must be > 0");
    r.check(c.area_y > 0.0, "y", "y must be > 0");
    r.check(c.stop > 0.0, "stop", "stop must be > 0");
    r.check(c.range_r > 0.0, "range", "range must be > 0");
    r.check(c.num_channels >= 1, "channels", "channels must be ≥ 1");
    r.check(
        c.num_channels <= 2 || c.generalized_channels,
        "channels",
        "channels > 2 requires generalized_channels = true",
    );
    r.check(c.let_threshold >= 0.0, "let_threshold", "let_threshold must be ≥ 0");
    r.check(
        c.let_applies_to.iter().all(|k| matches!(k, PacketKind::Rreq | PacketKind::Rrep | PacketKind::Data)),
        "let_applies_to",
        "let_applies_to may only contain RREQ, RREP, DATA",
    );
    r.check(c.bitrate > 0.0, "bitrate", "bitrate must be > 0");
    r.check(c.prop_delay >= 0.0, "prop_delay", "prop_delay must be ≥ 0");
    r.check((0.0..1.0).contains(&c.loss_prob), "loss_prob", "loss_prob must lie in [0,1)");
    r.check(c.hello_interval > 0.0, "hello_interval", "hello_interval must be > 0");
    r.check(c.hello_loss_limit >= 1, "hello_loss_limit", "hello_loss_limit must be ≥ 1");
    r.check(c.route_lifetime > 0.0, "route_lifetime", "route_lifetime must be > 0");
    r.check(c.rreq_retry_timeout > 0.0, "rreq_retry_timeout", "rreq_retry_timeout must be > 0");
    r.check(c.rreq_cache_ttl > 0.0, "rreq_cache_ttl", "rreq_cache_ttl must be > 0");
    r.check(c.buffer_capacity >= 1, "buffer_capacity", "buffer_capacity must be ≥ 1");
    r.check(c.sample_interval > 0.0, "sample_interval", "sample_interval must be > 0");
    r.check(c.energy.initial > 0.0, "energy.initial", "energy.initial must be > 0");
    r.check(c.energy.tx_per_byte >= 0.0, "energy.tx_per_byte", "energy.tx_per_byte must be ≥ 0");
    r.check(c.energy.rx_per_byte >= 0.0, "energy.rx_per_byte", "energy.rx_per_byte must be ≥ 0");
    r.check(c.energy.idle_per_sec >= 0.0, "energy.idle_per_sec", "energy.idle_per_sec must be ≥ 0");

    let a = &c.attacker;
    if a.enabled {
        r.check(a.rate > 0.0, "attacker.rate", "attacker.rate must be > 0 when the attacker is enabled");
        r.check(a.target.0 < c.nn, "attacker.target", "attacker.target must be < nn");
    }
    r.check(a.start >= 0.0, "attacker.start", "attacker.start must be ≥ 0");
    r.check(a.payload >= 1, "attacker.payload", "attacker.payload must be ≥ 1");

    let m = &c.mobility;
    r.check(m.speed_min >= 0.0, "mobility.speed_min", "mobility.speed_min must be ≥ 0");
    r.check(m.speed_max >= m.speed_min, "mobility.speed_max", "mobility.speed_max must be ≥ mobility.speed_min");
    r.check(m.pause >= 0.0, "mobility.pause", "mobility.pause must be ≥ 0");
    r.check(m.update_interval > 0.0, "mobility.update_interval", "mobility.update_interval must be > 0");

    let total = c.total_nodes();
    for (i, o) in &c.nodes {
        if *i >= total {
            r.violation(&format!("node.{i}"), format!("node.{i}: no such node (total {total})"));
        }
        if let Some(p) = o.pos {
            if !(0.0..=c.area_x).contains(&p.x) || !(0.0..=c.area_y).contains(&p.y) {
                r.violation(&format!("node.{i}.pos"), format!("node.{i}.pos lies outside the area"));
            }
        }
    }
    for (j, f) in c.flows.iter().enumerate() {
        let key = format!("flow.{j}");
        if f.src.0 >= c.nn || f.dst.0 >= c.nn {
            r.violation(&key, format!("{key}: endpoints must be honest nodes (< nn)"));
        }
        if f.src == f.dst {
            r.violation(&key, format!("{key}: src and dst must differ"));
        }
        if !(f.rate > 0.0) {
            r.violation(&key, format!("{key}: rate must be > 0"));
        }
        if f.size == 0 {
            r.violation(&key, format!("{key}: size must be ≥ 1"));
        }
        if f.start < 0.0 {
            r.violation(&key, format!("{key}: start must be ≥ 0"));
        }
        if let Some(stop) = f.stop {
            if stop <= f.start {
                r.violation(&key, format!("{key}: stop must be > start"));
            }
        }
    }
}
