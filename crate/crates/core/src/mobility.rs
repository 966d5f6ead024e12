//! Random-waypoint kinematics and link expiration time prediction.

use rand::Rng;
use thiserror::Error;

use crate::model::Vec2;
use crate::scalar::Scalar;

/// Position and velocity of a node at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Kinematics<T = f64> {
    pub pos: Vec2<T>,
    pub vel: Vec2<T>,
}

impl<T: Scalar> Kinematics<T> {
    pub fn new(pos: Vec2<T>, vel: Vec2<T>) -> Self {
        Kinematics { pos, vel }
    }

    pub fn stationary(pos: Vec2<T>) -> Self {
        Kinematics { pos, vel: Vec2::zero() }
    }

    pub fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite()
    }

    /// Constant-velocity extrapolation `dt` seconds ahead.
    pub fn extrapolate(&self, dt: T) -> Vec2<T> {
        self.pos + self.vel * dt
    }
}

/// Area and speed bounds for random-waypoint motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointBounds<T = f64> {
    pub area_x: T,
    pub area_y: T,
    pub speed_min: T,
    pub speed_max: T,
    pub pause: T,
}

/// One random-waypoint leg: the node waits at `current` until `leg_start_time`, then heads to
/// `target` at `speed` and stays there once arrived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointState<T = f64> {
    pub current: Vec2<T>,
    pub target: Vec2<T>,
    pub speed: T,
    pub pause_until: T,
    pub leg_start_time: T,
}

impl<T: Scalar> WaypointState<T> {
    /// A node that never moves.
    pub fn fixed(pos: Vec2<T>) -> Self {
        WaypointState {
            current: pos,
            target: pos,
            speed: T::zero(),
            pause_until: T::zero(),
            leg_start_time: T::zero(),
        }
    }

    /// Straight-line motion at `vel` from `pos`, starting at `t`, until the node reaches the
    /// boundary of `[0,area_x]×[0,area_y]`, where it stops.
    pub fn linear(pos: Vec2<T>, vel: Vec2<T>, area_x: T, area_y: T, t: T) -> Self {
        let speed = vel.norm();
        if speed == T::zero() {
            let mut s = Self::fixed(pos);
            s.leg_start_time = t;
            s.pause_until = t;
            return s;
        }
        let exit = |p: T, v: T, hi: T| -> T {
            if v > T::zero() {
                (hi - p) / v
            } else if v < T::zero() {
                -p / v
            } else {
                T::infinity()
            }
        };
        let dt = exit(pos.x, vel.x, area_x).min(exit(pos.y, vel.y, area_y)).max(T::zero());
        let mut target = pos + vel * dt;
        target.x = target.x.max(T::zero()).min(area_x);
        target.y = target.y.max(T::zero()).min(area_y);
        WaypointState { current: pos, target, speed, pause_until: t, leg_start_time: t }
    }

    /// First leg from `pos` at time `t` with no initial pause. Draw order: target.x, target.y,
    /// speed.
    pub fn start<R: Rng + ?Sized>(
        pos: Vec2<T>,
        rng: &mut R,
        t: T,
        bounds: &WaypointBounds<T>,
    ) -> Self {
        let (target, speed) = draw_leg(rng, bounds);
        WaypointState { current: pos, target, speed, pause_until: t, leg_start_time: t }
    }

    pub fn leg_length(&self) -> T {
        self.current.distance(self.target)
    }

    /// Time at which the node reaches `target` (infinite for a zero-speed leg of non-zero
    /// length).
    pub fn arrival_time(&self) -> T {
        let len = self.leg_length();
        if len == T::zero() {
            self.leg_start_time
        } else if self.speed <= T::zero() {
            T::infinity()
        } else {
            self.leg_start_time + len / self.speed
        }
    }

    pub fn arrived(&self, t: T) -> bool {
        t >= self.arrival_time()
    }
}

fn draw_leg<T: Scalar, R: Rng + ?Sized>(rng: &mut R, b: &WaypointBounds<T>) -> (Vec2<T>, T) {
    let ux: f64 = rng.gen();
    let uy: f64 = rng.gen();
    let us: f64 = rng.gen();
    let target = Vec2::new(b.area_x * T::of(ux), b.area_y * T::of(uy));
    let speed = b.speed_min + (b.speed_max - b.speed_min) * T::of(us);
    (target, speed)
}

/// Position and velocity on the current leg at time `t`.
pub fn kinematics_at<T: Scalar>(state: &WaypointState<T>, t: T) -> Kinematics<T> {
    if t < state.leg_start_time {
        return Kinematics::stationary(state.current);
    }
    let delta = state.target - state.current;
    let len = delta.norm();
    if len == T::zero() || state.speed <= T::zero() {
        return Kinematics::stationary(state.current);
    }
    let travelled = state.speed * (t - state.leg_start_time);
    if travelled >= len {
        return Kinematics::stationary(state.target);
    }
    let frac = travelled / len;
    Kinematics::new(state.current + delta * frac, delta * (state.speed / len))
}

/// Starts the next leg at time `t`: the node pauses at its current position for
/// `bounds.pause`, then travels to a fresh uniform target at a fresh uniform speed.
pub fn advance_waypoint<T: Scalar, R: Rng + ?Sized>(
    state: &WaypointState<T>,
    rng: &mut R,
    t: T,
    bounds: &WaypointBounds<T>,
) -> WaypointState<T> {
    let here = kinematics_at(state, t).pos;
    let (target, speed) = draw_leg(rng, bounds);
    let resume = t + bounds.pause;
    WaypointState { current: here, target, speed, pause_until: resume, leg_start_time: resume }
}

/// Predicted remaining lifetime of a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Let<T = f64> {
    Finite(T),
    Infinite,
}

impl<T: Scalar> Let<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Let::Infinite)
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            Let::Finite(v) => Some(v),
            Let::Infinite => None,
        }
    }

    /// `self >= threshold`, with `Infinite` above every finite value.
    pub fn at_least(&self, threshold: T) -> bool {
        match *self {
            Let::Infinite => true,
            Let::Finite(v) => v >= threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LetMode {
    /// Square root of |P| on a negative discriminant, infinite whenever the relative velocity
    /// vanishes, no clamping.
    Paper,
    /// Zero on a negative discriminant or a negative root, zero for co-moving pairs that are
    /// already out of range.
    #[default]
    Strict,
}

impl LetMode {
    pub fn token(self) -> &'static str {
        match self {
            LetMode::Paper => "paper",
            LetMode::Strict => "strict",
        }
    }
}

impl std::str::FromStr for LetMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(LetMode::Paper),
            "strict" => Ok(LetMode::Strict),
            _ => Err(format!("unknown LET mode `{s}` (expected paper|strict)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MobilityError {
    #[error("kinematics contain a non-finite component")]
    NonFinite,
    #[error("transmission range must be positive and finite")]
    BadRange,
}

/// Relative-motion coefficients: `a`, `c` are relative velocity in x, y and `b`, `d` relative
/// position in x, y (receiver minus sender).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LetTerms<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    /// `(a²+c²)r² − (ad−bc)²`
    pub discriminant: T,
}

pub fn let_terms<T: Scalar>(sender: &Kinematics<T>, receiver: &Kinematics<T>, r: T) -> LetTerms<T> {
    let a = receiver.vel.x - sender.vel.x;
    let b = receiver.pos.x - sender.pos.x;
    let c = receiver.vel.y - sender.vel.y;
    let d = receiver.pos.y - sender.pos.y;
    let cross = a * d - b * c;
    let discriminant = (a * a + c * c) * (r * r) - cross * cross;
    LetTerms { a, b, c, d, discriminant }
}

/// Time until the distance between two constant-velocity nodes first exceeds `r`.
pub fn link_expiration_time<T: Scalar>(
    sender: &Kinematics<T>,
    receiver: &Kinematics<T>,
    r: T,
    mode: LetMode,
) -> Result<Let<T>, MobilityError> {
    if !sender.is_finite() || !receiver.is_finite() {
        return Err(MobilityError::NonFinite);
    }
    if !(r > T::zero()) || !r.is_finite() {
        return Err(MobilityError::BadRange);
    }
    let LetTerms { a, b, c, d, discriminant: p } = let_terms(sender, receiver, r);
    let speed_sq = a * a + c * c;
    match mode {
        LetMode::Paper => {
            if speed_sq == T::zero() {
                return Ok(Let::Infinite);
            }
            let q = if p >= T::zero() { p.sqrt() } else { (-p).sqrt() };
            Ok(Let::Finite((-(a * b + c * d) + q) / speed_sq))
        }
        LetMode::Strict => {
            if speed_sq == T::zero() {
                let dist = b.hypot(d);
                return Ok(if dist > r { Let::Finite(T::zero()) } else { Let::Infinite });
            }
            if p < T::zero() {
                return Ok(Let::Finite(T::zero()));
            }
            let v = (-(a * b + c * d) + p.sqrt()) / speed_sq;
            Ok(Let::Finite(v.max(T::zero())))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn bounds() -> WaypointBounds {
        WaypointBounds { area_x: 50.0, area_y: 50.0, speed_min: 0.0, speed_max: 5.0, pause: 2.0 }
    }

    #[test]
    fn kinematics_at_leg_start() {
        let s = WaypointState {
            current: v(0.0, 0.0),
            target: v(10.0, 0.0),
            speed: 2.0,
            pause_until: 1.0,
            leg_start_time: 1.0,
        };
        let k = kinematics_at(&s, 1.0);
        assert_eq!(k.pos, v(0.0, 0.0));
        assert_eq!(k.vel, v(2.0, 0.0));
        // halfway in time: 10 m leg at 2 m/s takes 5 s
        let k = kinematics_at(&s, 3.5);
        assert_abs_diff_eq!(k.pos.x, 5.0, epsilon = 1e-12);
        // paused before the leg
        let k = kinematics_at(&s, 0.5);
        assert_eq!(k.vel, v(0.0, 0.0));
        assert_eq!(k.pos, v(0.0, 0.0));
        // arrived
        let k = kinematics_at(&s, 100.0);
        assert_eq!(k.pos, v(10.0, 0.0));
        assert_eq!(k.vel, v(0.0, 0.0));
        assert_eq!(s.arrival_time(), 6.0);
    }

    #[test]
    fn advance_is_deterministic_and_bounded() {
        let s = WaypointState::fixed(v(25.0, 25.0));
        let a = advance_waypoint(&s, &mut ChaCha8Rng::seed_from_u64(9), 3.0, &bounds());
        let b = advance_waypoint(&s, &mut ChaCha8Rng::seed_from_u64(9), 3.0, &bounds());
        assert_eq!(a, b);
        assert_eq!(a.current, v(25.0, 25.0));
        assert_eq!(a.leg_start_time, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut st = s;
        for i in 0..500 {
            st = advance_waypoint(&st, &mut rng, i as f64, &bounds());
            assert!((0.0..=50.0).contains(&st.target.x));
            assert!((0.0..=50.0).contains(&st.target.y));
            assert!((0.0..=5.0).contains(&st.speed));
        }
    }

    #[test]
    fn fixed_speed_bounds_give_exact_speed() {
        let b = WaypointBounds { speed_min: 3.0, speed_max: 3.0, ..bounds() };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let s = WaypointState::start(v(1.0, 1.0), &mut rng, 0.0, &b);
            assert_eq!(s.speed, 3.0);
        }
    }

    #[test]
    fn linear_stops_at_boundary() {
        let s = WaypointState::linear(v(22.0, 37.0), v(0.0, -10.0), 50.0, 50.0, 0.0);
        assert_eq!(s.target, v(22.0, 0.0));
        assert_abs_diff_eq!(s.arrival_time(), 3.7, epsilon = 1e-12);
        let k = kinematics_at(&s, 1.0);
        assert_abs_diff_eq!(k.pos.y, 27.0, epsilon = 1e-12);
        assert_eq!(kinematics_at(&s, 10.0).pos, v(22.0, 0.0));
    }

    #[test]
    fn let_stationary_is_infinite() {
        let s = Kinematics::stationary(v(0.0, 0.0));
        let r = Kinematics::stationary(v(3.0, 4.0));
        for mode in [LetMode::Paper, LetMode::Strict] {
            assert_eq!(link_expiration_time(&s, &r, 250.0, mode).unwrap(), Let::Infinite);
        }
    }

    #[test]
    fn let_radial_flight() {
        let s = Kinematics::stationary(v(0.0, 0.0));
        let r = Kinematics::new(v(0.0, 0.0), v(10.0, 0.0));
        let t = link_expiration_time(&s, &r, 250.0, LetMode::Strict).unwrap();
        assert_eq!(t, Let::Finite(25.0));
        let t = link_expiration_time(&s, &r, 250.0, LetMode::Paper).unwrap();
        assert_eq!(t, Let::Finite(25.0));
    }

    #[test]
    fn let_negative_discriminant_modes_differ() {
        // parallel tracks 2r apart, opposite directions
        let r = 15.0;
        let s = Kinematics::new(v(0.0, 0.0), v(1.0, 0.0));
        let rc = Kinematics::new(v(0.0, 2.0 * r), v(-1.0, 0.0));
        let terms = let_terms(&s, &rc, r);
        assert!(terms.discriminant < 0.0);
        // a=-2, b=0, c=0, d=30: P = 4*225 - 3600 = -2700
        assert_abs_diff_eq!(terms.discriminant, -2700.0, epsilon = 1e-9);
        let paper = link_expiration_time(&s, &rc, r, LetMode::Paper).unwrap();
        assert_abs_diff_eq!(paper.finite().unwrap(), 2700f64.sqrt() / 4.0, epsilon = 1e-12);
        let strict = link_expiration_time(&s, &rc, r, LetMode::Strict).unwrap();
        assert_eq!(strict, Let::Finite(0.0));
    }

    #[test]
    fn let_strict_comoving_out_of_range_is_zero() {
        let s = Kinematics::new(v(0.0, 0.0), v(1.0, 1.0));
        let r = Kinematics::new(v(40.0, 0.0), v(1.0, 1.0));
        assert_eq!(link_expiration_time(&s, &r, 15.0, LetMode::Strict).unwrap(), Let::Finite(0.0));
        assert_eq!(link_expiration_time(&s, &r, 15.0, LetMode::Paper).unwrap(), Let::Infinite);
    }

    #[test]
    fn let_strict_clamps_separating_pair() {
        // 20 m apart and separating at 1 m/s with r = 15
        let s = Kinematics::stationary(v(0.0, 0.0));
        let r = Kinematics::new(v(20.0, 0.0), v(1.0, 0.0));
        let paper = link_expiration_time(&s, &r, 15.0, LetMode::Paper).unwrap();
        assert_abs_diff_eq!(paper.finite().unwrap(), -5.0, epsilon = 1e-12);
        assert_eq!(link_expiration_time(&s, &r, 15.0, LetMode::Strict).unwrap(), Let::Finite(0.0));
    }

    #[test]
    fn let_rejects_non_finite() {
        let s = Kinematics::new(v(f64::NAN, 0.0), v(0.0, 0.0));
        let r = Kinematics::stationary(v(0.0, 0.0));
        assert_eq!(
            link_expiration_time(&s, &r, 15.0, LetMode::Strict),
            Err(MobilityError::NonFinite)
        );
        assert_eq!(
            link_expiration_time(&r, &r, 0.0, LetMode::Strict),
            Err(MobilityError::BadRange)
        );
    }

    #[test]
    fn let_in_f32_tracks_f64() {
        let s = Kinematics::<f32>::new(Vec2::new(1.0, 2.0), Vec2::new(0.5, -1.0));
        let r = Kinematics::<f32>::new(Vec2::new(5.0, 3.0), Vec2::new(-2.0, 1.5));
        let s64 = Kinematics::<f64>::new(v(1.0, 2.0), v(0.5, -1.0));
        let r64 = Kinematics::<f64>::new(v(5.0, 3.0), v(-2.0, 1.5));
        let a = link_expiration_time(&s, &r, 15.0f32, LetMode::Strict).unwrap().finite().unwrap();
        let b = link_expiration_time(&s64, &r64, 15.0, LetMode::Strict).unwrap().finite().unwrap();
        assert_abs_diff_eq!(a as f64, b, epsilon = 1e-4);
    }
}
