//! Random-value channel tagging and receiver-side tag verification.
//!
//! A sender draws two uniform values per transmitted packet and derives the channel from them.
//! A receiver recomputes the channel from the values carried in the header and drops packets
//! whose values are out of range or whose channel disagrees.

use rand::Rng;
use thiserror::Error;

use crate::model::CommonHeader;
use crate::scalar::Scalar;

/// How `(rv1, rv2)` maps to one of `k > 2` channels. Two channels always use the plain
/// `rv1 <= rv2` rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelMap {
    /// `1 + min(k−1, floor(k·h))` with `h = (rv1 − rv2 + 1)/2`. `h` is triangular on `[0,1]`,
    /// so outer channels are selected less often than inner ones.
    #[default]
    Linear,
    /// Same as `Linear` after pushing `rv1 − rv2` through its own CDF, which makes `h` uniform
    /// and every channel equally likely for honest draws.
    Balanced,
}

impl ChannelMap {
    pub fn token(self) -> &'static str {
        match self {
            ChannelMap::Linear => "linear",
            ChannelMap::Balanced => "balanced",
        }
    }
}

impl std::str::FromStr for ChannelMap {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ChannelMap::Linear),
            "balanced" => Ok(ChannelMap::Balanced),
            _ => Err(format!("unknown channel map `{s}` (expected linear|balanced)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityConfig {
    pub k: u32,
    /// Allows `k > 2`.
    pub generalized: bool,
    pub map: ChannelMap,
    /// Only check `rv1 + rv2 ∈ [0,2]` instead of each value in `[0,1]`.
    pub paper_range_check: bool,
}

impl Default for SecurityConfig {
    fn default() -> Self {
        SecurityConfig { k: 2, generalized: true, map: ChannelMap::Linear, paper_range_check: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VerifyOutcome {
    Accept,
    DropRange,
    DropMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ChannelError {
    #[error("random value {0} outside [0,1]")]
    OutOfRange(f64),
    #[error("channel count must be at least 1")]
    NoChannels,
    #[error("{0} channels requested but generalized mapping is disabled")]
    NotGeneralized(u32),
}

/// Two independent uniform draws on `[0,1)`, `rv1` first.
pub fn draw_random_values<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let rv1 = rng.gen::<f64>();
    let rv2 = rng.gen::<f64>();
    (rv1, rv2)
}

fn unit<T: Scalar>(v: T) -> bool {
    v >= T::zero() && v <= T::one()
}

/// Channel in `1..=k` implied by the random values.
pub fn select_channel<T: Scalar>(rv1: T, rv2: T, cfg: &SecurityConfig) -> Result<u32, ChannelError> {
    for v in [rv1, rv2] {
        if !unit(v) {
            return Err(ChannelError::OutOfRange(v.to_f64_lossy()));
        }
    }
    if cfg.k == 0 {
        return Err(ChannelError::NoChannels);
    }
    if cfg.k > 2 && !cfg.generalized {
        return Err(ChannelError::NotGeneralized(cfg.k));
    }
    Ok(implied_channel(rv1, rv2, cfg.k, cfg.map))
}

/// Total version of [`select_channel`]: accepts any finite reals and clamps into `1..=k`.
pub fn implied_channel<T: Scalar>(rv1: T, rv2: T, k: u32, map: ChannelMap) -> u32 {
    match k {
        0 | 1 => 1,
        2 => {
            if rv1 <= rv2 {
                1
            } else {
                2
            }
        }
        _ => {
            let diff = rv1 - rv2;
            let h = match map {
                ChannelMap::Linear => (diff + T::one()) / T::of(2.0),
                ChannelMap::Balanced => difference_cdf(diff),
            };
            let kf = T::of(k as f64);
            let slot = (kf * h).floor().max(T::zero()).to_f64_lossy();
            let slot = if slot.is_finite() { slot as u64 } else { 0 };
            1 + (slot.min(k as u64 - 1) as u32)
        }
    }
}

/// CDF of `U1 − U2` for independent uniforms on `[0,1]`.
fn difference_cdf<T: Scalar>(x: T) -> T {
    let one = T::one();
    let half = T::of(0.5);
    if x <= -one {
        T::zero()
    } else if x <= T::zero() {
        half * (one + x) * (one + x)
    } else if x < one {
        one - half * (one - x) * (one - x)
    } else {
        one
    }
}

/// Receiver-side check: value range first, then channel consistency.
pub fn verify(header: &CommonHeader, cfg: &SecurityConfig) -> VerifyOutcome {
    let (rv1, rv2) = (header.rv1, header.rv2);
    if !rv1.is_finite() || !rv2.is_finite() {
        return VerifyOutcome::DropRange;
    }
    let sum = rv1 + rv2;
    if !(0.0..=2.0).contains(&sum) {
        return VerifyOutcome::DropRange;
    }
    if !cfg.paper_range_check && !(unit(rv1) && unit(rv2)) {
        return VerifyOutcome::DropRange;
    }
    if header.channel != implied_channel(rv1, rv2, cfg.k, cfg.map) {
        return VerifyOutcome::DropMismatch;
    }
    VerifyOutcome::Accept
}

/// Draws fresh values and stamps `rv1`, `rv2` and `channel` on an outgoing header.
pub fn tag<R: Rng + ?Sized>(header: &mut CommonHeader, cfg: &SecurityConfig, rng: &mut R) {
    let (rv1, rv2) = draw_random_values(rng);
    header.rv1 = rv1;
    header.rv2 = rv2;
    header.channel = implied_channel(rv1, rv2, cfg.k, cfg.map);
}
