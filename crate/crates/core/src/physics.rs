//! Free flight of a spinning ball: gravity, quadratic air drag and Magnus lift.
//!
//! The equations of motion act on position and linear velocity only; the spin
//! vector is carried unchanged through flight. Integration is classical RK4
//! with a fixed step, and plane crossings are located by bisection inside the
//! step that brackets them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::vec3::{Axis, Vec3};

/// Default integration step (s).
pub const DEFAULT_DT: f64 = 1e-3;

/// Crossing tolerance on the event function.
pub const EVENT_TOLERANCE: f64 = 1e-9;

/// Upper bound on bisection iterations when refining a crossing.
pub const MAX_BISECTIONS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("cavity radius {cavity} must be smaller than outer radius {outer}")]
    DegenerateShell { outer: f64, cavity: f64 },
    #[error("invalid ball parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("back-integrated segment passes below the table surface (z = {z} at t = {t})")]
    BelowTable { t: f64, z: f64 },
}

/// Kinematic state of the ball at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BallState<T> {
    pub t: T,
    /// Centre position (m).
    pub p: Vec3<T>,
    /// Linear velocity (m/s).
    pub v: Vec3<T>,
    /// Angular velocity (rad/s).
    pub w: Vec3<T>,
}

impl<T: Scalar> BallState<T> {
    pub fn new(t: T, p: Vec3<T>, v: Vec3<T>, w: Vec3<T>) -> Self {
        Self { t, p, v, w }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.p.is_finite() && self.v.is_finite() && self.w.is_finite()
    }

    /// Translational plus rotational kinetic energy.
    pub fn kinetic_energy(&self, params: &BallParams<T>) -> T {
        let half = T::lit(0.5);
        half * params.mass() * self.v.norm_squared() + half * params.inertia() * self.w.norm_squared()
    }
}

/// Physical constants of a hollow ball and the surrounding air.
///
/// Cross-section and moment of inertia are derived from the radii and never
/// set independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallParams<T> {
    mass: T,
    outer_radius: T,
    cavity_radius: T,
    gravity: T,
    drag_coefficient: T,
    lift_coefficient: T,
    air_density: T,
    cross_section: T,
    inertia: T,
}

impl<T: Scalar> BallParams<T> {
    pub fn new(
        mass: T,
        outer_radius: T,
        cavity_radius: T,
        gravity: T,
        drag_coefficient: T,
        lift_coefficient: T,
        air_density: T,
    ) -> Result<Self, PhysicsError> {
        let check = |name, v: T, ok: bool| {
            if ok && v.is_finite() {
                Ok(())
            } else {
                Err(PhysicsError::InvalidParameter { name, value: v.as_f64() })
            }
        };
        check("mass", mass, mass > T::zero())?;
        check("outer_radius", outer_radius, outer_radius > T::zero())?;
        check("cavity_radius", cavity_radius, cavity_radius >= T::zero())?;
        check("gravity", gravity, true)?;
        check("drag_coefficient", drag_coefficient, drag_coefficient >= T::zero())?;
        check("lift_coefficient", lift_coefficient, true)?;
        check("air_density", air_density, air_density >= T::zero())?;
        let inertia = ball_inertia(mass, outer_radius, cavity_radius)?;
        Ok(Self {
            mass,
            outer_radius,
            cavity_radius,
            gravity,
            drag_coefficient,
            lift_coefficient,
            air_density,
            cross_section: T::PI() * outer_radius * outer_radius,
            inertia,
        })
    }

    /// Regulation 40 mm ball in sea-level air.
    pub fn standard() -> Self {
        Self::new(
            T::lit(2.7e-3),
            T::lit(0.02),
            T::lit(0.0196),
            T::lit(9.81),
            T::lit(0.4),
            T::lit(0.6),
            T::lit(1.29),
        )
        .expect("standard ball parameters are valid")
    }

    /// Same ball with different aerodynamic coefficients; zero disables the force.
    pub fn with_aero(mut self, drag_coefficient: T, lift_coefficient: T) -> Self {
        self.drag_coefficient = drag_coefficient;
        self.lift_coefficient = lift_coefficient;
        self
    }

    pub fn with_gravity(mut self, gravity: T) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn mass(&self) -> T {
        self.mass
    }
    pub fn outer_radius(&self) -> T {
        self.outer_radius
    }
    pub fn cavity_radius(&self) -> T {
        self.cavity_radius
    }
    pub fn gravity(&self) -> T {
        self.gravity
    }
    pub fn drag_coefficient(&self) -> T {
        self.drag_coefficient
    }
    pub fn lift_coefficient(&self) -> T {
        self.lift_coefficient
    }
    pub fn air_density(&self) -> T {
        self.air_density
    }
    pub fn cross_section(&self) -> T {
        self.cross_section
    }
    pub fn inertia(&self) -> T {
        self.inertia
    }
}

/// Moment of inertia of a spherical shell with outer radius `r1` and a
/// concentric cavity of radius `r2`.
pub fn ball_inertia<T: Scalar>(mass: T, r1: T, r2: T) -> Result<T, PhysicsError> {
    if r2 >= r1 || r2 < T::zero() {
        return Err(PhysicsError::DegenerateShell {
            outer: r1.as_f64(),
            cavity: r2.as_f64(),
        });
    }
    let r1_3 = r1 * r1 * r1;
    let r2_3 = r2 * r2 * r2;
    let r1_5 = r1_3 * r1 * r1;
    let r2_5 = r2_3 * r2 * r2;
    Ok(T::lit(0.4) * mass * (r1_5 - r2_5) / (r1_3 - r2_3))
}

pub fn gravity_force<T: Scalar>(params: &BallParams<T>) -> Vec3<T> {
    Vec3::new(T::zero(), T::zero(), -params.mass * params.gravity)
}

/// Quadratic drag, antiparallel to the velocity.
pub fn drag_force<T: Scalar>(v: Vec3<T>, params: &BallParams<T>) -> Vec3<T> {
    let k = T::lit(0.5) * params.drag_coefficient * params.air_density * params.cross_section;
    v * (-k * v.norm())
}

/// Magnus lift, perpendicular to both spin and velocity.
pub fn magnus_force<T: Scalar>(v: Vec3<T>, w: Vec3<T>, params: &BallParams<T>) -> Vec3<T> {
    let k = T::lit(0.5)
        * params.lift_coefficient
        * params.air_density
        * params.cross_section
        * params.outer_radius;
    w.cross(v) * k
}

/// Linear acceleration of the ball in flight.
pub fn aero_accel<T: Scalar>(state: &BallState<T>, params: &BallParams<T>) -> Vec3<T> {
    accel(state.v, state.w, params)
}

#[inline]
fn accel<T: Scalar>(v: Vec3<T>, w: Vec3<T>, params: &BallParams<T>) -> Vec3<T> {
    let f = gravity_force(params) + drag_force(v, params) + magnus_force(v, w, params);
    f / params.mass
}

/// One RK4 step; `dt` may be negative.
#[inline]
pub(crate) fn advance<T: Scalar>(s: &BallState<T>, dt: T, params: &BallParams<T>) -> BallState<T> {
    let half = T::lit(0.5);
    let w = s.w;
    let k1v = accel(s.v, w, params);
    let k1p = s.v;
    let v2 = s.v + k1v * (dt * half);
    let k2v = accel(v2, w, params);
    let k2p = v2;
    let v3 = s.v + k2v * (dt * half);
    let k3v = accel(v3, w, params);
    let k3p = v3;
    let v4 = s.v + k3v * dt;
    let k4v = accel(v4, w, params);
    let k4p = v4;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    BallState {
        t: s.t + dt,
        p: s.p + (k1p + k2p * two + k3p * two + k4p) * sixth,
        v: s.v + (k1v + k2v * two + k3v * two + k4v) * sixth,
        w,
    }
}

/// Advances the state by `dt` seconds with one RK4 step.
pub fn step<T: Scalar>(
    state: &BallState<T>,
    dt: T,
    params: &BallParams<T>,
) -> Result<BallState<T>, PhysicsError> {
    if !(dt > T::zero()) {
        return Err(PhysicsError::NonPositiveStep(dt.as_f64()));
    }
    Ok(advance(state, dt, params))
}

/// Integrates for `duration` seconds with steps of `dt`; the final step is
/// shortened so the end time is hit exactly.
pub fn integrate_for<T: Scalar>(
    state: &BallState<T>,
    params: &BallParams<T>,
    duration: T,
    dt: T,
) -> Result<BallState<T>, PhysicsError> {
    if !(dt > T::zero()) {
        return Err(PhysicsError::NonPositiveStep(dt.as_f64()));
    }
    if duration < T::zero() {
        return Err(PhysicsError::NonPositiveDuration(duration.as_f64()));
    }
    let (full, rem) = split_duration(duration, dt);
    let mut s = *state;
    for _ in 0..full {
        s = advance(&s, dt, params);
    }
    if rem > T::zero() {
        s = advance(&s, rem, params);
    }
    Ok(s)
}

/// Number of whole steps and the leftover partial step covering `duration`.
fn split_duration<T: Scalar>(duration: T, dt: T) -> (usize, T) {
    let ratio = duration / dt;
    let mut full = ratio.floor().to_usize().unwrap_or(0);
    // absorb rounding so 0.3 / 1e-3 counts as 300 steps, not 299 plus a sliver
    if (ratio - T::from_usize(full + 1).unwrap()).abs() < T::lit(1e-9) {
        full += 1;
    }
    let rem = duration - T::from_usize(full).unwrap() * dt;
    if rem.abs() < dt * T::lit(1e-9) {
        (full, T::zero())
    } else {
        (full, rem)
    }
}

/// Sign-change direction an event must show to count as a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Any,
    /// Event value goes from negative to non-negative.
    Rising,
    /// Event value goes from positive to non-positive.
    Falling,
}

/// A scalar function of the state whose zero marks an event.
pub struct Event<'a, T> {
    pub value: &'a dyn Fn(&BallState<T>) -> T,
    pub direction: Direction,
}

impl<'a, T: Scalar> Event<'a, T> {
    pub fn new(value: &'a dyn Fn(&BallState<T>) -> T, direction: Direction) -> Self {
        Self { value, direction }
    }

    fn crossed(&self, before: T, after: T) -> bool {
        let zero = T::zero();
        match self.direction {
            Direction::Any => (before < zero && after >= zero) || (before > zero && after <= zero),
            Direction::Rising => before < zero && after >= zero,
            Direction::Falling => before > zero && after <= zero,
        }
    }
}

/// Result of an event search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing<T> {
    /// Index of the event that fired.
    pub event: usize,
    pub state: BallState<T>,
}

/// Refines a crossing of `event` inside the step starting at `start`.
fn bisect<T: Scalar>(
    start: &BallState<T>,
    step_len: T,
    params: &BallParams<T>,
    event: &Event<'_, T>,
) -> BallState<T> {
    let tol = T::lit(EVENT_TOLERANCE);
    let g0 = (event.value)(start);
    let mut lo = T::zero();
    let mut hi = step_len;
    let mut best = advance(start, hi, params);
    for _ in 0..MAX_BISECTIONS {
        let mid = (lo + hi) * T::lit(0.5);
        let s = advance(start, mid, params);
        let g = (event.value)(&s);
        best = s;
        if g.abs() < tol {
            break;
        }
        // keep the half whose endpoints still straddle zero
        if (g < T::zero()) == (g0 < T::zero()) && g != T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best
}

/// Integrates forward until the first of `events` fires or `t_max` seconds
/// elapse. Returns `None` on timeout.
///
/// An [`Direction::Any`] event whose value is already zero at the start
/// fires immediately; directional events need an actual sign change.
pub fn integrate_until<T: Scalar>(
    state: &BallState<T>,
    params: &BallParams<T>,
    events: &[Event<'_, T>],
    dt: T,
    t_max: T,
) -> Result<Option<Crossing<T>>, PhysicsError> {
    if !(dt > T::zero()) {
        return Err(PhysicsError::NonPositiveStep(dt.as_f64()));
    }
    if !(t_max > T::zero()) {
        return Err(PhysicsError::NonPositiveDuration(t_max.as_f64()));
    }
    for (i, e) in events.iter().enumerate() {
        if e.direction == Direction::Any && (e.value)(state) == T::zero() {
            return Ok(Some(Crossing { event: i, state: *state }));
        }
    }
    let t_end = state.t + t_max;
    let mut s = *state;
    let mut values: Vec<T> = events.iter().map(|e| (e.value)(&s)).collect();
    while s.t < t_end {
        let h = dt.min(t_end - s.t);
        if h <= T::zero() {
            break;
        }
        let next = advance(&s, h, params);
        let mut first: Option<Crossing<T>> = None;
        for (i, e) in events.iter().enumerate() {
            let after = (e.value)(&next);
            if e.crossed(values[i], after) {
                let hit = bisect(&s, h, params, e);
                if first.map_or(true, |f| hit.t < f.state.t) {
                    first = Some(Crossing { event: i, state: hit });
                }
            }
            values[i] = after;
        }
        if first.is_some() {
            return Ok(first);
        }
        s = next;
    }
    Ok(None)
}

/// Integrates until the `axis` coordinate reaches `value`.
///
/// Returns the refined crossing state and `true`, or the state at `t_max`
/// and `false` when no crossing happens in time.
pub fn integrate_to_plane<T: Scalar>(
    state: &BallState<T>,
    params: &BallParams<T>,
    axis: Axis,
    value: T,
    dt: T,
    t_max: T,
) -> Result<(BallState<T>, bool), PhysicsError> {
    let g = move |s: &BallState<T>| axis.of(&s.p) - value;
    let events = [Event::new(&g, Direction::Any)];
    match integrate_until(state, params, &events, dt, t_max)? {
        Some(c) => Ok((c.state, true)),
        None => Ok((integrate_for(state, params, t_max, dt)?, false)),
    }
}

/// Runs the dynamics backwards in time for `duration` seconds.
///
/// The segment may not dip below the table surface `z = 0`; a state that
/// already starts below it may not sink any further.
pub fn back_integrate<T: Scalar>(
    state: &BallState<T>,
    params: &BallParams<T>,
    duration: T,
    dt: T,
) -> Result<BallState<T>, PhysicsError> {
    if !(dt > T::zero()) {
        return Err(PhysicsError::NonPositiveStep(dt.as_f64()));
    }
    if duration < T::zero() {
        return Err(PhysicsError::NonPositiveDuration(duration.as_f64()));
    }
    let floor = state.p.z.min(T::zero());
    let (full, rem) = split_duration(duration, dt);
    let mut s = *state;
    let check = |s: &BallState<T>| {
        if s.p.z < floor - T::lit(1e-12) {
            Err(PhysicsError::BelowTable { t: s.t.as_f64(), z: s.p.z.as_f64() })
        } else {
            Ok(())
        }
    };
    for _ in 0..full {
        s = advance(&s, -dt, params);
        check(&s)?;
    }
    if rem > T::zero() {
        s = advance(&s, -rem, params);
        check(&s)?;
    }
    Ok(s)
}

/// Samples the trajectory every `dt` seconds for `duration` seconds,
/// including the initial state.
pub fn sample_trajectory<T: Scalar>(
    state: &BallState<T>,
    params: &BallParams<T>,
    duration: T,
    dt: T,
) -> Result<Vec<BallState<T>>, PhysicsError> {
    if !(dt > T::zero()) {
        return Err(PhysicsError::NonPositiveStep(dt.as_f64()));
    }
    let (full, _) = split_duration(duration, dt);
    let mut out = Vec::with_capacity(full + 1);
    let mut s = *state;
    out.push(s);
    for _ in 0..full {
        s = advance(&s, dt, params);
        out.push(s);
    }
    Ok(out)
}
