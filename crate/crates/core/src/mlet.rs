//! Mobility-aware link admission: senders piggyback their kinematics, receivers reject links
//! whose predicted lifetime is below a threshold.

use std::collections::BTreeSet;

use crate::mobility::{link_expiration_time, Kinematics, LetMode};
use crate::model::{CommonHeader, PacketKind};

/// Four floats plus framing.
pub const KINEMATICS_ANNEX_BYTES: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct LetConfig {
    pub threshold: f64,
    pub applies_to: BTreeSet<PacketKind>,
    pub mode: LetMode,
    pub annex_bytes: usize,
}

impl Default for LetConfig {
    fn default() -> Self {
        LetConfig {
            threshold: 5.0,
            applies_to: BTreeSet::from([PacketKind::Rreq]),
            mode: LetMode::Strict,
            annex_bytes: KINEMATICS_ANNEX_BYTES,
        }
    }
}

impl LetConfig {
    pub fn applies(&self, kind: PacketKind) -> bool {
        self.applies_to.contains(&kind)
    }
}

/// Attaches `sender_kin` when the header's kind is covered. Re-annotating a header that already
/// carries an annex replaces it without growing the size again.
pub fn annotate(mut header: CommonHeader, sender_kin: Kinematics, cfg: &LetConfig) -> CommonHeader {
    if !cfg.applies(header.kind) {
        return header;
    }
    if header.sender_kin.is_none() {
        header.size += cfg.annex_bytes;
    }
    header.sender_kin = Some(sender_kin);
    header
}

/// True when the predicted link lifetime reaches the threshold. Invalid kinematics reject.
pub fn admit_link(sender: &Kinematics, receiver: &Kinematics, r: f64, cfg: &LetConfig) -> bool {
    match link_expiration_time(sender, receiver, r, cfg.mode) {
        Ok(l) => l.at_least(cfg.threshold),
        Err(_) => false,
    }
}
