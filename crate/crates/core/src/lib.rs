//! Deterministic discrete-event simulator for mobile ad-hoc networks.
//!
//! On-demand distance-vector routing with an optional per-packet channel tag check, a
//! mobility-aware link filter based on predicted link lifetime, a resource-exhaustion
//! attacker, a linear energy model and NS-2 style traces.
//!
//! Geometry, mobility and radio math are generic over [`Scalar`] (`f32` or `f64`); the event
//! engine runs on `f64`. Aliases for both widths are exported below.

pub mod aodv;
pub mod config;
pub mod energy;
pub mod engine;
pub mod medium;
pub mod metrics;
pub mod mlet;
pub mod mobility;
pub mod model;
pub mod saodv;
pub mod scalar;
pub mod scenarios;
pub mod trace;

pub use config::{ConfigError, Protocol, ScenarioConfig, Sophistication};
pub use engine::{run, run_with_sink, RunOutput, RunSummary};
pub use mobility::{link_expiration_time, Kinematics, Let, LetMode};
pub use model::{CommonHeader, DropReason, NodeId, PacketKind, Vec2, BROADCAST};
pub use scalar::Scalar;
pub use trace::{EventType, TraceEvent};

pub type Vec2d = Vec2<f64>;
pub type Vec2f = Vec2<f32>;
pub type KinematicsD = Kinematics<f64>;
pub type KinematicsF = Kinematics<f32>;
pub type LetD = Let<f64>;
pub type LetF = Let<f32>;
