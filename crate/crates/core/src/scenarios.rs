//! Canned scenarios shipped in the repository's `configs/` directory.

use crate::config::{ConfigError, ScenarioConfig};

pub const TABLE1_AODV: &str = include_str!("../../../configs/table1_aodv.conf");
pub const TABLE1_SAODV: &str = include_str!("../../../configs/table1_saodv.conf");
pub const ATTACK_DEMO: &str = include_str!("../../../configs/attack_demo.conf");
pub const FIG11_MLET: &str = include_str!("../../../configs/fig11_mlet.conf");
pub const THREE_NODE: &str = include_str!("../../../configs/three_node.conf");

/// `(name, text)` for every canned scenario.
pub const ALL: [(&str, &str); 5] = [
    ("table1_aodv", TABLE1_AODV),
    ("table1_saodv", TABLE1_SAODV),
    ("attack_demo", ATTACK_DEMO),
    ("fig11_mlet", FIG11_MLET),
    ("three_node", THREE_NODE),
];

pub fn by_name(name: &str) -> Option<Result<ScenarioConfig, ConfigError>> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| ScenarioConfig::parse(text))
}
