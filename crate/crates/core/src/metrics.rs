//! Sampled time series and the end-of-run summary.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::model::{DropReason, NodeId};

pub const METRICS_HEADER: &str = "t,malicious_drops,malicious_accepts,victim_energy,cum_loss,ctrl_overhead,delivered";

/// One row of the metrics series.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Attacker DATA dropped at the victim since the previous sample.
    pub malicious_drops: u64,
    /// Attacker DATA accepted by the victim since the previous sample.
    pub malicious_accepts: u64,
    pub victim_energy: f64,
    /// Honest DATA dropped anywhere, cumulative.
    pub cum_loss: u64,
    /// RREQ, RREP and RERR transmissions, cumulative.
    pub ctrl_overhead: u64,
    /// Honest DATA delivered, cumulative.
    pub delivered: u64,
    /// Remaining energy of every node, by id. Not written to CSV.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub samples: Vec<Sample>,
}

impl Metrics {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(METRICS_HEADER);
        s.push('\n');
        for r in &self.samples {
            writeln!(
                s,
                "{:.6},{},{},{:.6},{},{},{}",
                r.t, r.malicious_drops, r.malicious_accepts, r.victim_energy, r.cum_loss, r.ctrl_overhead, r.delivered
            )
            .unwrap();
        }
        s
    }

    /// Victim energy column.
    pub fn victim_energy(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.victim_energy).collect()
    }
}

/// Totals for attacker DATA observed at the victim.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttackTotals {
    /// Attack DATA transmitted by the attacker.
    pub sent: u64,
    /// Copies that reached the victim's radio while it was alive.
    pub arrivals: u64,
    pub accepts: u64,
    pub drops: u64,
}

impl AttackTotals {
    /// Accepted share of arrivals; `None` when nothing arrived.
    pub fn accept_fraction(&self) -> Option<f64> {
        (self.arrivals > 0).then(|| self.accepts as f64 / self.arrivals as f64)
    }
}

/// A completed route discovery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscoveryRecord {
    pub t: f64,
    pub node: NodeId,
    pub dest: NodeId,
    pub hops: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub protocol: String,
    pub seed: u64,
    pub stop: f64,
    pub honest_sent: u64,
    pub delivered: u64,
    pub drops: BTreeMap<DropReason, u64>,
    pub rerr_sent: u64,
    pub ctrl_overhead: u64,
    pub victim: NodeId,
    pub victim_final_energy: f64,
    pub victim_initial_energy: f64,
    /// Time each node ran out of energy, by id.
    pub depleted_at: Vec<Option<f64>>,
    pub attack: AttackTotals,
    pub discoveries: Vec<DiscoveryRecord>,
    pub events_processed: u64,
}

impl Report {
    pub fn drop_count(&self, reason: DropReason) -> u64 {
        self.drops.get(&reason).copied().unwrap_or(0)
    }

    pub fn victim_depleted_at(&self) -> Option<f64> {
        self.depleted_at.get(self.victim.index()).copied().flatten()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "protocol {} seed {} stop {}", self.protocol, self.seed, self.stop)?;
        writeln!(f, "honest data: sent {} delivered {}", self.honest_sent, self.delivered)?;
        writeln!(f, "control overhead: {} (RERR {})", self.ctrl_overhead, self.rerr_sent)?;
        writeln!(f, "drops by reason:")?;
        for r in DropReason::ALL {
            writeln!(f, "  {:<18} {}", r.token(), self.drop_count(r))?;
        }
        writeln!(
            f,
            "attack at victim {}: sent {} arrived {} accepted {} dropped {}",
            self.victim, self.attack.sent, self.attack.arrivals, self.attack.accepts, self.attack.drops
        )?;
        let pct = if self.victim_initial_energy > 0.0 {
            100.0 * self.victim_final_energy / self.victim_initial_energy
        } else {
            0.0
        };
        write!(f, "victim final energy: {:.6} J ({pct:.1}%)", self.victim_final_energy)?;
        if let Some(t) = self.victim_depleted_at() {
            write!(f, ", depleted at {t:.6} s")?;
        }
        writeln!(f)
    }
}
