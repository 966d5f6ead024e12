//! `manetsim` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O failure, 4 malformed trace.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use manetsim_core::config::{ConfigError, ScenarioConfig};
use manetsim_core::engine::{run_with_sink, ATTACK_FID};
use manetsim_core::mobility::{link_expiration_time, Kinematics, Let, LetMode};
use manetsim_core::model::{NodeId, PacketKind, Vec2};
use manetsim_core::trace::{EventType, NullSink, TraceEvent, TraceParseError, WriteSink};

pub const SEED_ENV: &str = "MANETSIM_SEED";
pub const TRACE_FILE: &str = "trace.tr";
pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Debug, Parser)]
#[command(name = "manetsim", version, about = "Deterministic MANET simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trace.tr and metrics.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed and MANETSIM_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Turn a trace into per-interval CSV series.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        interval: f64,
        /// Node whose drops are counted.
        #[arg(long, default_value_t = 0)]
        node: u32,
    },
    /// Victim accept fraction of attacker DATA as a function of the channel count.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma separated channel counts, e.g. `1,2,4,8`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        k: Vec<i64>,
        #[arg(long, default_value_t = 10)]
        reps: u32,
    },
    /// Predicted link lifetime between a sender and a receiver.
    #[command(allow_negative_numbers = true)]
    Let {
        #[arg(long)]
        sx: f64,
        #[arg(long)]
        sy: f64,
        #[arg(long)]
        svx: f64,
        #[arg(long)]
        svy: f64,
        #[arg(long)]
        rx: f64,
        #[arg(long)]
        ry: f64,
        #[arg(long)]
        rvx: f64,
        #[arg(long)]
        rvy: f64,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Paper,
    Strict,
}

impl From<ModeArg> for LetMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => LetMode::Paper,
            ModeArg::Strict => LetMode::Strict,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration:\n{0}")]
    Config(ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Trace(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Trace(_) => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run_cli<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    match execute(cli.command, env_seed.as_deref(), out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command, env_seed: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, seed, out: dir } => cmd_run(&config, seed, env_seed, &dir, out),
        Command::Analyze { trace, interval, node } => cmd_analyze(&trace, interval, NodeId(node), out),
        Command::Sweep { config, k, reps } => cmd_sweep(&config, &k, reps, out),
        Command::Let { sx, sy, svx, svy, rx, ry, rvx, rvy, r, mode } => {
            let s = Kinematics::new(Vec2::new(sx, sy), Vec2::new(svx, svy));
            let rcv = Kinematics::new(Vec2::new(rx, ry), Vec2::new(rvx, rvy));
            cmd_let(&s, &rcv, r, mode.map(LetMode::from), out)
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ScenarioConfig::parse(&text).map_err(CliError::Config)
}

/// Flag beats environment beats config.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, config: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        None => Ok(config),
    }
}

fn out_write(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

pub fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    env_seed: Option<&str>,
    dir: &Path,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    cfg.rng_seed = resolve_seed(seed, env_seed, cfg.rng_seed)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let trace_path = dir.join(TRACE_FILE);
    let file = fs::File::create(&trace_path).map_err(io_err(&trace_path))?;
    let mut sink = WriteSink(BufWriter::new(file));
    let summary = run_with_sink(&cfg, &mut sink).map_err(io_err(&trace_path))?;
    sink.0.flush().map_err(io_err(&trace_path))?;
    let metrics_path = dir.join(METRICS_FILE);
    fs::write(&metrics_path, summary.metrics.to_csv()).map_err(io_err(&metrics_path))?;
    let text = format!(
        "{}trace: {}\nmetrics: {}\n",
        summary.report,
        trace_path.display(),
        metrics_path.display()
    );
    out_write(out, &text)
}

/// Per-interval series derived from a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub interval: f64,
    /// Drops at the chosen node per interval.
    pub drops: Vec<u64>,
    /// Honest DATA drops anywhere, cumulative at the end of each interval.
    pub cum_loss: Vec<u64>,
    /// Victim energy at the end of each interval, from metrics.csv when available.
    pub energy: Option<Vec<Option<f64>>>,
}

impl Series {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,drops,cum_loss");
        if self.energy.is_some() {
            s.push_str(",victim_energy");
        }
        s.push('\n');
        for i in 0..self.drops.len() {
            s.push_str(&format!("{:.6},{},{}", i as f64 * self.interval, self.drops[i], self.cum_loss[i]));
            if let Some(e) = &self.energy {
                match e[i] {
                    Some(v) => s.push_str(&format!(",{v:.6}")),
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Strict parse of a whole trace; the error names the 1-based line.
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse::<TraceEvent>().map_err(|e| match e {
                TraceParseError::FieldCount(_) => {
                    CliError::Trace(format!("line {}: expected 12 fields", i + 1))
                }
                other => CliError::Trace(format!("line {}: {other}", i + 1)),
            })
        })
        .collect()
}

/// Bins events into `[i·interval, (i+1)·interval)`.
pub fn analyze_events(events: &[TraceEvent], interval: f64, node: NodeId) -> Series {
    let bins = events
        .iter()
        .map(|e| (e.time / interval).floor() as usize + 1)
        .max()
        .unwrap_or(0);
    let mut drops = vec![0u64; bins];
    let mut loss = vec![0u64; bins];
    for e in events.iter().filter(|e| e.event == EventType::Drop) {
        let b = (e.time / interval).floor() as usize;
        if e.source == node {
            drops[b] += 1;
        }
        if e.pkt_type == PacketKind::Data && e.fid != ATTACK_FID {
            loss[b] += 1;
        }
    }
    let cum_loss = loss
        .iter()
        .scan(0u64, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    Series { interval, drops, cum_loss, energy: None }
}

/// `(t, victim_energy)` rows of a metrics file.
pub fn parse_metrics(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == manetsim_core::metrics::METRICS_HEADER => {}
        _ => return Err(CliError::Trace(format!("{METRICS_FILE} line 1: unexpected header"))),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split(',').collect();
            let bad = || CliError::Trace(format!("{METRICS_FILE} line {}: malformed row", i + 1));
            if cols.len() != 7 {
                return Err(bad());
            }
            let t = cols[0].parse::<f64>().map_err(|_| bad())?;
            let e = cols[3].parse::<f64>().map_err(|_| bad())?;
            Ok((t, e))
        })
        .collect()
}

pub fn cmd_analyze(trace: &Path, interval: f64, node: NodeId, out: &mut dyn Write) -> Result<(), CliError> {
    if !(interval.is_finite() && interval > 0.0) {
        return Err(CliError::Usage(format!("--interval must be positive, got {interval}")));
    }
    let text = fs::read_to_string(trace).map_err(io_err(trace))?;
    let events = parse_trace(&text)?;
    let mut series = analyze_events(&events, interval, node);
    let metrics_path = trace.with_file_name(METRICS_FILE);
    if metrics_path.is_file() {
        let mtext = fs::read_to_string(&metrics_path).map_err(io_err(&metrics_path))?;
        let rows = parse_metrics(&mtext)?;
        let energy = (0..series.drops.len())
            .map(|i| {
                let end = (i + 1) as f64 * interval;
                rows.iter().rev().find(|(t, _)| *t <= end + 1e-9).map(|r| r.1)
            })
            .collect();
        series.energy = Some(energy);
    }
    out_write(out, &series.to_csv())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: u32,
    pub mean: f64,
    pub stddev: f64,
    /// Accept fraction of every repetition, in seed order.
    pub fractions: Vec<f64>,
    /// Attack packets that reached the victim in each repetition.
    pub arrivals: Vec<u64>,
}

/// Runs `reps` seeds per channel count; repetition `i` uses `base seed + i`.
pub fn sweep(base: &ScenarioConfig, ks: &[u32], reps: u32) -> Result<Vec<SweepRow>, CliError> {
    if !base.attacker.enabled {
        return Err(CliError::Usage("sweep needs attacker.enabled = true".into()));
    }
    if reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    for &k in ks {
        if k == 0 {
            return Err(CliError::Usage("channel counts must be at least 1".into()));
        }
        if k > 2 && !base.generalized_channels {
            return Err(CliError::Usage(format!("k = {k} needs generalized_channels = true")));
        }
    }
    let jobs: Vec<(u32, u32)> = ks.iter().flat_map(|&k| (0..reps).map(move |r| (k, r))).collect();
    let results: Vec<(Option<f64>, u64)> = jobs
        .par_iter()
        .map(|&(k, rep)| {
            let mut cfg = base.clone();
            cfg.num_channels = k;
            cfg.rng_seed = base.rng_seed.wrapping_add(u64::from(rep));
            let s = run_with_sink(&cfg, &mut NullSink).expect("null sink cannot fail");
            (s.report.attack.accept_fraction(), s.report.attack.arrivals)
        })
        .collect();
    let mut rows = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let chunk = &results[i * reps as usize..(i + 1) * reps as usize];
        let fractions: Vec<f64> = chunk.iter().filter_map(|r| r.0).collect();
        let arrivals = chunk.iter().map(|r| r.1).collect();
        let n = fractions.len() as f64;
        let mean = fractions.iter().sum::<f64>() / n;
        let var = if fractions.len() > 1 {
            fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        rows.push(SweepRow { k, mean, stddev: var.sqrt(), fractions, arrivals });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("k,mean_accept_fraction,stddev\n");
    for r in rows {
        s.push_str(&format!("{},{:.6},{:.6}\n", r.k, r.mean, r.stddev));
    }
    s
}

pub fn cmd_sweep(config: &Path, ks: &[i64], reps: u32, out: &mut dyn Write) -> Result<(), CliError> {
    if ks.is_empty() {
        return Err(CliError::Usage("--k needs at least one value".into()));
    }
    let ks: Vec<u32> = ks
        .iter()
        .map(|&k| {
            u32::try_from(k)
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| CliError::Usage(format!("channel counts must be at least 1, got {k}")))
        })
        .collect::<Result<_, _>>()?;
    let base = load_config(config)?;
    let rows = sweep(&base, &ks, reps)?;
    out_write(out, &sweep_csv(&rows))
}

pub fn format_let(l: Let) -> String {
    match l {
        Let::Infinite => "inf".to_string(),
        Let::Finite(v) => format!("{v:.6}"),
    }
}

/// Prints one value, or `paper` and `strict` lines when the two modes disagree.
pub fn cmd_let(
    sender: &Kinematics,
    receiver: &Kinematics,
    r: f64,
    mode: Option<LetMode>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(CliError::Usage(format!("--r must be a positive finite number, got {r}")));
    }
    let compute = |m: LetMode| {
        link_expiration_time(sender, receiver, r, m).map_err(|e| CliError::Usage(e.to_string()))
    };
    let text = match mode {
        Some(m) => format!("{}\n", format_let(compute(m)?)),
        None => {
            let p = format_let(compute(LetMode::Paper)?);
            let s = format_let(compute(LetMode::Strict)?);
            if p == s {
                format!("{p}\n")
            } else {
                format!("paper {p}\nstrict {s}\n")
            }
        }
    };
    out_write(out, &text)
}
