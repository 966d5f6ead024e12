//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use manetsim_cli::{analyze_events, parse_trace, sweep};
use manetsim_core::aodv::RoutingTable;
use manetsim_core::config::{FlowSpec, MobilityModel, NodeOverride, Protocol, ScenarioConfig, Sophistication};
use manetsim_core::engine::{run, RunOutput, ATTACK_FID};
use manetsim_core::mobility::{link_expiration_time, Kinematics, Let, LetMode};
use manetsim_core::model::{NodeId, PacketKind, Vec2};
use manetsim_core::saodv::{implied_channel, select_channel, verify, ChannelMap, SecurityConfig, VerifyOutcome};
use manetsim_core::scenarios;
use manetsim_core::trace::{render, EventType, TraceEvent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("link lifetime matches stepping oracle", let_oracle),
        ("honest tags always verify", tag_soundness),
        ("random guess accepted one time in k", guess_sweep),
        ("verification drops every forged packet", table1_drops),
        ("victim energy protected", energy_protection),
        ("link filter avoids breaks", mlet_breaks),
        ("discovered routes are shortest and loop free", aodv_bfs),
        ("deterministic well-formed traces", trace_format),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {} {name}: PASS ({d}; {secs:.2} s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({d}; {secs:.2} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn canned(name: &str) -> ScenarioConfig {
    scenarios::by_name(name).expect("known scenario").expect("valid scenario")
}

fn with(mut c: ScenarioConfig, p: Protocol) -> ScenarioConfig {
    c.protocol = p;
    c
}

fn kin(x: f64, y: f64, vx: f64, vy: f64) -> Kinematics {
    Kinematics::new(Vec2::new(x, y), Vec2::new(vx, vy))
}

/// First 1 ms step at which the pair is farther apart than `r`.
fn stepping_oracle(s: &Kinematics, rcv: &Kinematics, r: f64, horizon: f64) -> Option<f64> {
    let mut n = 0u64;
    loop {
        let t = n as f64 * 1e-3;
        if t > horizon {
            return None;
        }
        if rcv.extrapolate(t).distance(s.extrapolate(t)) > r {
            return Some(t);
        }
        n += 1;
    }
}

fn let_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e7);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    while pairs < 1000 {
        let r = rng.gen_range(5.0..50.0);
        let s = kin(0.0, 0.0, rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let rcv = kin(
            rng.gen_range(-0.7..0.7) * r,
            rng.gen_range(-0.7..0.7) * r,
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        );
        if (rcv.vel - s.vel).norm() < 1.0 || rcv.pos.norm() > r {
            continue;
        }
        pairs += 1;
        let analytic = link_expiration_time(&s, &rcv, r, LetMode::Strict)
            .map_err(|e| e.to_string())?
            .finite()
            .ok_or("finite lifetime expected for a moving pair")?;
        let oracle = stepping_oracle(&s, &rcv, r, 500.0).ok_or("oracle never separated")?;
        worst = worst.max((analytic - oracle).abs());
    }
    ensure!(worst <= 0.01, "max error {worst:.4} s over {pairs} pairs");

    let still = kin(3.0, 4.0, 0.0, 0.0);
    for mode in [LetMode::Paper, LetMode::Strict] {
        let l = link_expiration_time(&still, &kin(5.0, 4.0, 0.0, 0.0), 10.0, mode).map_err(|e| e.to_string())?;
        ensure!(l == Let::Infinite, "stationary pair gave {l:?}");
    }
    let l = link_expiration_time(&kin(0.0, 0.0, 0.0, 0.0), &kin(0.0, 0.0, 10.0, 0.0), 250.0, LetMode::Strict)
        .map_err(|e| e.to_string())?;
    ensure!(
        l.finite().map(|v| format!("{v:.6}")).as_deref() == Some("25.000000"),
        "fleeing receiver gave {l:?}"
    );
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.1} s");
    Ok(format!("{pairs} pairs, max error {worst:.4} s, exact cases hold"))
}

fn tag_soundness() -> Outcome {
    let mut checked = 0u64;
    let mut check = |rv1: f64, rv2: f64, k: u32, map: ChannelMap| -> Result<(), String> {
        let cfg = SecurityConfig { k, map, ..SecurityConfig::default() };
        let ch = select_channel(rv1, rv2, &cfg).map_err(|e| e.to_string())?;
        let mut h = manetsim_core::model::CommonHeader::new(0, PacketKind::Data, 64, NodeId(0), NodeId(1));
        h.rv1 = rv1;
        h.rv2 = rv2;
        h.channel = ch;
        checked += 1;
        ensure!(
            verify(&h, &cfg) == VerifyOutcome::Accept,
            "rv1={rv1} rv2={rv2} k={k} {map:?} channel {ch} rejected"
        );
        Ok(())
    };
    let grid = 100;
    for k in 1..=16 {
        for map in [ChannelMap::Linear, ChannelMap::Balanced] {
            for i in 0..=grid {
                for j in 0..=grid {
                    check(i as f64 / grid as f64, j as f64 / grid as f64, k, map)?;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5a0d);
    for _ in 0..100_000 {
        let map = if rng.gen::<bool>() { ChannelMap::Linear } else { ChannelMap::Balanced };
        check(rng.gen(), rng.gen(), rng.gen_range(1..=16), map)?;
    }
    Ok(format!("{checked} honest tags accepted, k in 1..=16"))
}

fn guess_sweep() -> Outcome {
    let start = Instant::now();
    let mut base = canned("attack_demo");
    base.attacker.sophistication = Sophistication::NaiveRandom;
    let ks = [1, 2, 4, 8];
    let rows = sweep(&base, &ks, 10).map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    for row in &rows {
        let expected = 1.0 / row.k as f64;
        let min_arr = row.arrivals.iter().copied().min().unwrap_or(0);
        ensure!(min_arr >= 2000, "k={}: a repetition saw only {min_arr} attack packets", row.k);
        ensure!(row.fractions.len() == 10, "k={}: {} repetitions had arrivals", row.k, row.fractions.len());
        ensure!(
            (row.mean - expected).abs() <= 0.05,
            "k={}: mean {:.4} vs expected {expected:.4}",
            row.k,
            row.mean
        );
        details.push(format!("k={} {:.3}", row.k, row.mean));
    }
    ensure!(rows.windows(2).all(|w| w[1].mean < w[0].mean), "not monotone: {}", details.join(", "));
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(details.join(", "))
}

fn attack_data_at(trace: &[TraceEvent], victim: NodeId, event: EventType) -> usize {
    trace
        .iter()
        .filter(|e| e.event == event && e.source == victim && e.pkt_type == PacketKind::Data && e.fid == ATTACK_FID)
        .count()
}

fn table1_drops() -> Outcome {
    let c = canned("table1_saodv");
    let a = &c.attacker;
    let honest = implied_channel(a.rv1, a.rv2, c.num_channels, c.channel_map);
    ensure!(honest != a.channel, "attacker tag {} is not a forgery", a.channel);
    let victim = a.target;
    let aodv = run(&with(c.clone(), Protocol::Aodv));
    let saodv = run(&with(c.clone(), Protocol::Saodv));
    let aodv_drops = attack_data_at(&aodv.trace, victim, EventType::Drop);
    let aodv_recv = attack_data_at(&aodv.trace, victim, EventType::Receive);
    let saodv_drops = attack_data_at(&saodv.trace, victim, EventType::Drop);
    let arrivals = saodv.report.attack.arrivals as usize;
    ensure!(arrivals > 0, "no attack packets reached the victim");
    ensure!(aodv_drops == 0, "AODV victim dropped {aodv_drops} attack packets");
    ensure!(aodv_recv > 0, "AODV victim received no attack packets");
    ensure!(saodv_drops == arrivals, "SAODV dropped {saodv_drops} of {arrivals} arrivals");
    ensure!(attack_data_at(&saodv.trace, victim, EventType::Receive) == 0, "SAODV victim received forged DATA");
    Ok(format!("AODV drops 0 ({aodv_recv} received), SAODV drops {saodv_drops} of {arrivals}"))
}

fn energy_protection() -> Outcome {
    let c = canned("attack_demo");
    let aodv = run(&with(c.clone(), Protocol::Aodv));
    let saodv = run(&with(c.clone(), Protocol::Saodv));
    let (ma, ms) = (&aodv.metrics.samples, &saodv.metrics.samples);
    ensure!(ma.len() == ms.len() && !ma.is_empty(), "sample counts differ");
    for (a, s) in ma.iter().zip(ms) {
        ensure!(s.victim_energy >= a.victim_energy, "t={}: SAODV {} < AODV {}", s.t, s.victim_energy, a.victim_energy);
    }
    let dep = aodv.report.victim_depleted_at().ok_or("AODV victim never depleted")?;
    ensure!(dep < c.stop, "AODV victim depleted at {dep}");

    // Idle listening plus the bare flood; every other cost only brings depletion earlier.
    let e = c.energy;
    let drain = c.attacker.rate * c.attacker.payload as f64 * e.rx_per_byte;
    let bound = (e.initial + drain * c.attacker.start) / (drain + e.idle_per_sec);
    ensure!(dep <= bound + c.sample_interval, "AODV depleted at {dep:.2} s, later than closed form {bound:.2} s");

    let retained = saodv.report.victim_final_energy / saodv.report.victim_initial_energy;
    ensure!(retained > 0.5, "SAODV victim retains {:.1}%", 100.0 * retained);

    // The same law is exact when the flood is the only traffic.
    let mut iso = ScenarioConfig {
        nn: 1,
        stop: 60.0,
        protocol: Protocol::Aodv,
        hello_interval: 1000.0,
        route_lifetime: 100.0,
        ..ScenarioConfig::default()
    };
    iso.mobility.model = MobilityModel::Static;
    iso.attacker.enabled = true;
    iso.attacker.start = 0.0;
    iso.nodes.insert(0, NodeOverride { pos: Some(Vec2::new(25.0, 25.0)), vel: None });
    iso.nodes.insert(1, NodeOverride { pos: Some(Vec2::new(30.0, 25.0)), vel: None });
    let d = iso.attacker.rate * iso.attacker.payload as f64 * iso.energy.rx_per_byte;
    let predicted = iso.energy.initial / (d + iso.energy.idle_per_sec);
    let got = run(&iso).report.victim_depleted_at().ok_or("isolated victim never depleted")?;
    ensure!((got - predicted).abs() <= iso.sample_interval, "isolated: predicted {predicted:.3} got {got:.3}");

    Ok(format!(
        "AODV depleted at {dep:.2} s (bound {bound:.2} s), SAODV retains {:.1}%, isolated {got:.3} vs {predicted:.3} s",
        100.0 * retained
    ))
}

fn count(out: &RunOutput, pred: impl Fn(&TraceEvent) -> bool) -> usize {
    out.trace.iter().filter(|e| pred(e)).count()
}

fn mlet_breaks() -> Outcome {
    let c = canned("fig11_mlet");
    let base = run(&with(c.clone(), Protocol::Aodv));
    let aware = run(&c);
    let rerr = |o: &RunOutput| count(o, |e| e.event == EventType::Send && e.pkt_type == PacketKind::Rerr);
    let lost = |o: &RunOutput| {
        count(o, |e| e.event == EventType::Drop && e.pkt_type == PacketKind::Data && e.fid != ATTACK_FID)
    };
    let (rb, ra, lb, la) = (rerr(&base), rerr(&aware), lost(&base), lost(&aware));
    ensure!(ra < rb, "RERR {ra} with filter vs {rb} without");
    ensure!(la < lb, "DATA drops {la} with filter vs {lb} without");

    let mut zero = c.clone();
    zero.let_threshold = 0.0;
    zero.let_annex_bytes = 0;
    zero.let_mode = LetMode::Strict;
    let a = render(&run(&with(zero.clone(), Protocol::Aodv)).trace);
    let b = render(&run(&with(zero, Protocol::AodvMlet)).trace);
    ensure!(a == b, "zero threshold trace differs from baseline");
    Ok(format!("RERR {rb} -> {ra}, honest DATA drops {lb} -> {la}, zero threshold identical"))
}

const RANGE: f64 = 15.0;
const AREA: f64 = 100.0;

fn random_topology(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec2> {
    let mut pts = vec![Vec2::new(AREA / 2.0, AREA / 2.0)];
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

fn bfs_from(pts: &[Vec2], s: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; pts.len()];
    dist[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for v in 0..pts.len() {
            if dist[v].is_none() && pts[u].distance(pts[v]) <= RANGE {
                dist[v] = Some(dist[u].unwrap() + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

fn has_loop(tables: &[RoutingTable], now: f64) -> bool {
    let dests: BTreeSet<NodeId> = tables.iter().flat_map(|t| t.entries.keys().copied()).collect();
    for start in 0..tables.len() {
        for &d in &dests {
            let mut seen = BTreeSet::new();
            let mut at = NodeId(start as u32);
            while at != d {
                if !seen.insert(at) {
                    return true;
                }
                match tables.get(at.index()).and_then(|t| t.valid_route(d, now)) {
                    Some(e) => at = e.next_hop,
                    None => break,
                }
            }
        }
    }
    false
}

fn aodv_bfs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb75);
    let mut discoveries = 0;
    for case in 0..50 {
        let n = rng.gen_range(3..=10);
        let pts = random_topology(n, &mut rng);
        let flows: Vec<FlowSpec> = (0..3)
            .map(|j| {
                let src = rng.gen_range(0..n) as u32;
                let mut dst = rng.gen_range(0..n) as u32;
                if dst == src {
                    dst = (src + 1) % n as u32;
                }
                FlowSpec { src: NodeId(src), dst: NodeId(dst), rate: 2.0, size: 64, start: 2.0 + 0.3 * j as f64, stop: None }
            })
            .collect();
        let mut nodes = BTreeMap::new();
        for (i, p) in pts.iter().enumerate() {
            nodes.insert(i as u32, NodeOverride { pos: Some(*p), vel: None });
        }
        let mut cfg = ScenarioConfig {
            nn: n as u32,
            area_x: AREA,
            area_y: AREA,
            stop: 6.0,
            protocol: if case % 2 == 0 { Protocol::Aodv } else { Protocol::Saodv },
            range_r: RANGE,
            nodes,
            flows: flows.clone(),
            ..ScenarioConfig::default()
        };
        cfg.mobility.model = MobilityModel::Static;
        let out = run(&cfg);
        let bfs: Vec<_> = (0..n).map(|s| bfs_from(&pts, s)).collect();
        for d in &out.report.discoveries {
            ensure!(
                Some(d.hops) == bfs[d.node.index()][d.dest.index()],
                "case {case}: node {} found {} hops to {}, BFS {:?}",
                d.node,
                d.hops,
                d.dest,
                bfs[d.node.index()][d.dest.index()]
            );
            discoveries += 1;
        }
        for f in &flows {
            let e = out.tables[f.src.index()].valid_route(f.dst, cfg.stop).ok_or(format!("case {case}: no route {f:?}"))?;
            ensure!(Some(e.hop_count) == bfs[f.src.index()][f.dst.index()], "case {case}: flow {f:?} uses {} hops", e.hop_count);
        }
        ensure!(!has_loop(&out.tables, cfg.stop), "case {case}: routing loop");
    }
    Ok(format!("50 topologies, {discoveries} discoveries match BFS, no loops"))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn cli_run(config: &Path, out: &Path, seed: Option<u64>) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_manetsim"));
    cmd.env_remove("MANETSIM_SEED").arg("run").arg("--config").arg(config).arg("--out").arg(out);
    if let Some(s) = seed {
        cmd.arg("--seed").arg(s.to_string());
    }
    let o = cmd.output().map_err(|e| e.to_string())?;
    ensure!(o.status.success(), "run {} failed: {}", config.display(), String::from_utf8_lossy(&o.stderr));
    std::fs::read(out.join("trace.tr")).map_err(|e| e.to_string())
}

fn trace_format() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = workspace_root();
    let mut lines = 0usize;
    let mut runs = 0;
    for (name, seed) in [
        ("three_node", None),
        ("fig11_mlet", None),
        ("table1_saodv", None),
        ("table1_aodv", Some(99)),
        ("attack_demo", Some(3)),
    ] {
        let config = root.join("configs").join(format!("{name}.conf"));
        let a = cli_run(&config, &tmp.path().join(format!("{name}_a")), seed)?;
        let b = cli_run(&config, &tmp.path().join(format!("{name}_b")), seed)?;
        ensure!(a == b, "{name}: repeated runs differ");
        runs += 1;
        let text = String::from_utf8(a).map_err(|e| e.to_string())?;
        for (i, l) in text.lines().enumerate() {
            ensure!(l.split_whitespace().count() == 12, "{name} line {}: not 12 fields", i + 1);
            lines += 1;
        }
        let events = parse_trace(&text).map_err(|e| e.to_string())?;
        ensure!(
            events.iter().map(|e| e.to_string()).collect::<Vec<_>>() == text.lines().collect::<Vec<_>>(),
            "{name}: parse and print does not round trip"
        );
        let series = analyze_events(&events, 1.0, NodeId(0));
        ensure!(!series.to_csv().is_empty(), "{name}: empty analysis");
    }
    let golden = std::fs::read_to_string(root.join("crates/cli/tests/golden/three_node.tr")).map_err(|e| e.to_string())?;
    let fresh = std::fs::read_to_string(tmp.path().join("three_node_a/trace.tr")).map_err(|e| e.to_string())?;
    ensure!(golden == fresh, "three_node trace differs from the golden file");
    Ok(format!("{runs} scenarios repeat byte for byte, {lines} lines of 12 fields, golden file matches"))
}
