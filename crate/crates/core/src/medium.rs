//! Idealized shared radio: disk connectivity, serialization delay and independent loss.

use rand::Rng;

use crate::mobility::Kinematics;
use crate::model::{NodeId, Vec2};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumConfig<T = f64> {
    pub range_r: T,
    pub bitrate: T,
    pub prop_delay: T,
    pub loss_prob: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery<P, T = f64> {
    pub receiver: NodeId,
    pub arrival_time: T,
    pub packet: P,
}

/// Distance at most `r`, boundary included.
pub fn in_range<T: Scalar>(a: Vec2<T>, b: Vec2<T>, r: T) -> bool {
    a.distance(b) <= r
}

/// Serialization time of `size` bytes.
pub fn tx_delay<T: Scalar>(size: usize, bitrate: T) -> T {
    T::of(size as f64 * 8.0) / bitrate
}

/// Copies `packet` to every node other than `sender` that is in range at time `t`.
///
/// `kinematics[i]` is the state of node `i` at `t`; `None` marks a node that cannot receive
/// (dead). Loss is drawn once per in-range candidate, in ascending id order, only when
/// `loss_prob > 0`.
pub fn broadcast<P: Clone, T: Scalar, R: Rng + ?Sized>(
    sender: NodeId,
    packet: &P,
    size: usize,
    t: T,
    kinematics: &[Option<Kinematics<T>>],
    cfg: &MediumConfig<T>,
    rng: &mut R,
) -> Vec<Delivery<P, T>> {
    let Some(Some(origin)) = kinematics.get(sender.index()) else {
        return Vec::new();
    };
    let arrival = t + tx_delay(size, cfg.bitrate) + cfg.prop_delay;
    let mut out = Vec::new();
    for (i, kin) in kinematics.iter().enumerate() {
        let Some(kin) = kin else { continue };
        if i == sender.index() || !in_range(origin.pos, kin.pos, cfg.range_r) {
            continue;
        }
        if cfg.loss_prob > T::zero() && T::of(rng.gen::<f64>()) < cfg.loss_prob {
            continue;
        }
        out.push(Delivery { receiver: NodeId(i as u32), arrival_time: arrival, packet: packet.clone() });
    }
    out
}
