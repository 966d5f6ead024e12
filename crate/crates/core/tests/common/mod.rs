//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use manetsim_core::aodv::RoutingTable;
use manetsim_core::config::{FlowSpec, MobilityModel, NodeOverride, Protocol, ScenarioConfig};
use manetsim_core::model::{NodeId, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RANGE: f64 = 15.0;
pub const AREA: f64 = 100.0;

/// Random connected static topology of `n` nodes: each new node lands within range of a
/// previously placed one.
pub fn random_topology(n: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<Vec2> = vec![Vec2::new(AREA / 2.0, AREA / 2.0)];
    while pts.len() < n {
        let anchor = pts[rng.gen_range(0..pts.len())];
        let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let dist: f64 = rng.gen_range(4.0..RANGE * 0.98);
        let p = Vec2::new(anchor.x + dist * ang.cos(), anchor.y + dist * ang.sin());
        if (0.0..=AREA).contains(&p.x) && (0.0..=AREA).contains(&p.y) {
            pts.push(p);
        }
    }
    pts
}

/// All-pairs hop distances on the unit-disk graph.
pub fn bfs_all(pts: &[Vec2], r: f64) -> Vec<Vec<Option<u32>>> {
    let n = pts.len();
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for v in 0..n {
                    if dist[v].is_none() && pts[u].distance(pts[v]) <= r {
                        dist[v] = Some(dist[u].unwrap() + 1);
                        q.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

pub fn static_config(pts: &[Vec2], flows: Vec<FlowSpec>, stop: f64, protocol: Protocol) -> ScenarioConfig {
    let mut nodes = BTreeMap::new();
    for (i, p) in pts.iter().enumerate() {
        nodes.insert(i as u32, NodeOverride { pos: Some(*p), vel: None });
    }
    let mut c = ScenarioConfig {
        nn: pts.len() as u32,
        area_x: AREA,
        area_y: AREA,
        stop,
        protocol,
        range_r: RANGE,
        nodes,
        flows,
        ..ScenarioConfig::default()
    };
    c.mobility.model = MobilityModel::Static;
    c
}

/// Follows next hops of valid entries from every node toward every destination. Returns the
/// first `(start, dest)` that revisits a node.
pub fn find_loop(tables: &[RoutingTable], now: f64) -> Option<(NodeId, NodeId)> {
    let dests: BTreeSet<NodeId> = tables.iter().flat_map(|t| t.entries.keys().copied()).collect();
    for start in 0..tables.len() {
        for &d in &dests {
            let mut seen = BTreeSet::new();
            let mut at = NodeId(start as u32);
            while at != d {
                if !seen.insert(at) {
                    return Some((NodeId(start as u32), d));
                }
                match tables.get(at.index()).and_then(|t| t.valid_route(d, now)) {
                    Some(e) => at = e.next_hop,
                    None => break,
                }
            }
        }
    }
    None
}
