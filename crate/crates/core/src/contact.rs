//! Instantaneous impacts of the ball against the table and the racket.
//!
//! A single impulse is applied at the contact point: Newton restitution along
//! the surface normal, Coulomb friction in the tangent plane capped at the
//! impulse that stops the contact point from slipping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::physics::{BallParams, BallState};
use crate::scalar::Scalar;
use crate::vec3::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("drop height h1 must be positive, got {0}")]
    NonPositiveDropHeight(f64),
    #[error("rebound height h2 must be non-negative, got {0}")]
    NegativeReboundHeight(f64),
    #[error("tilt angle must lie in [0, pi/2), got {0} rad")]
    TiltOutOfRange(f64),
    #[error("contact is separating (relative normal speed {0} >= 0)")]
    Separating(f64),
    #[error("surface normal must be non-zero")]
    ZeroNormal,
    #[error("invalid surface parameters: restitution {restitution}, friction {friction}")]
    InvalidSurface { restitution: f64, friction: f64 },
}

/// Restitution and friction of one ball/surface pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams<T> {
    pub restitution: T,
    pub friction: T,
}

impl<T: Scalar> SurfaceParams<T> {
    pub fn new(restitution: T, friction: T) -> Result<Self, ContactError> {
        let ok = restitution > T::zero()
            && restitution <= T::one()
            && friction >= T::zero()
            && friction.is_finite();
        if ok {
            Ok(Self { restitution, friction })
        } else {
            Err(ContactError::InvalidSurface {
                restitution: restitution.as_f64(),
                friction: friction.as_f64(),
            })
        }
    }

    pub fn table() -> Self {
        Self { restitution: T::lit(0.97), friction: T::lit(0.05) }
    }

    pub fn racket() -> Self {
        Self { restitution: T::lit(0.9), friction: T::lit(1.0) }
    }
}

/// Restitution coefficient from a drop test: released from `h1`, the ball
/// rebounds to `h2`.
pub fn estimate_restitution<T: Scalar>(h1: T, h2: T) -> Result<T, ContactError> {
    if !(h1 > T::zero()) {
        return Err(ContactError::NonPositiveDropHeight(h1.as_f64()));
    }
    if !(h2 >= T::zero()) {
        return Err(ContactError::NegativeReboundHeight(h2.as_f64()));
    }
    Ok((h2 / h1).sqrt())
}

/// Friction coefficient from the tilt angle at which resting balls start to slide.
pub fn estimate_friction<T: Scalar>(theta: T) -> Result<T, ContactError> {
    if !(theta >= T::zero() && theta < T::FRAC_PI_2()) {
        return Err(ContactError::TiltOutOfRange(theta.as_f64()));
    }
    Ok(theta.tan())
}

/// Detailed result of an impulse computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impact<T> {
    pub state: BallState<T>,
    pub normal_impulse: T,
    pub tangential_impulse: T,
    /// True when friction was strong enough to stop the contact point slipping.
    pub sticking: bool,
}

/// Effective mass of the contact point against tangential impulses.
pub fn tangential_effective_mass<T: Scalar>(ball: &BallParams<T>) -> T {
    let r = ball.outer_radius();
    T::one() / (T::one() / ball.mass() + r * r / ball.inertia())
}

/// Velocity of the ball's contact point relative to the surface, tangential part.
pub fn contact_slip<T: Scalar>(
    state: &BallState<T>,
    normal: Vec3<T>,
    surface_velocity: Vec3<T>,
    ball: &BallParams<T>,
) -> Vec3<T> {
    let v_rel = state.v - surface_velocity;
    let arm = normal * (-ball.outer_radius());
    let u = v_rel + state.w.cross(arm);
    u - normal * u.dot(normal)
}

/// Ball/surface impact with the full impulse breakdown.
///
/// `normal` points from the surface towards the ball. The ball must be
/// approaching: `(v - surface_velocity) . normal < 0`.
pub fn impact<T: Scalar>(
    state: &BallState<T>,
    normal: Vec3<T>,
    surface_velocity: Vec3<T>,
    surface: &SurfaceParams<T>,
    ball: &BallParams<T>,
) -> Result<Impact<T>, ContactError> {
    let n = normal.normalized().ok_or(ContactError::ZeroNormal)?;
    let v_rel = state.v - surface_velocity;
    let vn = v_rel.dot(n);
    if !(vn < T::zero()) {
        return Err(ContactError::Separating(vn.as_f64()));
    }
    let m = ball.mass();
    let normal_impulse = m * (T::one() + surface.restitution) * vn.abs();
    // normal restitution: outgoing relative normal velocity is -kappa * incoming
    let mut v = surface_velocity + (v_rel - n * vn) - n * (surface.restitution * vn);

    let arm = n * (-ball.outer_radius());
    let u = {
        let raw = (v_rel - n * vn) + state.w.cross(arm);
        raw - n * raw.dot(n)
    };
    let slip = u.norm();
    let stick_impulse = tangential_effective_mass(ball) * slip;
    let friction_cap = surface.friction * normal_impulse;
    let sticking = friction_cap >= stick_impulse;
    let tangential_impulse = if sticking { stick_impulse } else { friction_cap };

    let mut w = state.w;
    if let Some(dir) = u.normalized() {
        let j = dir * (-tangential_impulse);
        v += j / m;
        w += arm.cross(j) / ball.inertia();
    }
    Ok(Impact {
        state: BallState { t: state.t, p: state.p, v, w },
        normal_impulse,
        tangential_impulse,
        sticking,
    })
}

/// Outgoing state after the ball strikes a surface moving at `surface_velocity`.
pub fn bounce<T: Scalar>(
    state: &BallState<T>,
    normal: Vec3<T>,
    surface_velocity: Vec3<T>,
    surface: &SurfaceParams<T>,
    ball: &BallParams<T>,
) -> Result<BallState<T>, ContactError> {
    impact(state, normal, surface_velocity, surface, ball).map(|i| i.state)
}

/// Racket orientation: rotations about x, y and z (rad), applied as Rz * Ry * Rx.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RacketAngles<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

/// Racket face normal: `(-1, 0, 0)` rotated by `Rz(gamma) Ry(beta) Rx(alpha)`.
pub fn racket_normal<T: Scalar>(angles: &RacketAngles<T>) -> Vec3<T> {
    // Rx leaves the x axis fixed, so alpha drops out of the normal.
    let (sb, cb) = angles.beta.sin_cos();
    let (sg, cg) = angles.gamma.sin_cos();
    let ry = Vec3::new(-cb, T::zero(), sb);
    Vec3::new(cg * ry.x - sg * ry.y, sg * ry.x + cg * ry.y, ry.z)
}

/// Pose and motion of the racket blade at the hitting instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RacketState<T> {
    pub center: Vec3<T>,
    pub angles: RacketAngles<T>,
    pub velocity: Vec3<T>,
    /// Blade modelled as a disc of this radius (m).
    pub radius: T,
}

/// Default blade radius (m).
pub const DEFAULT_RACKET_RADIUS: f64 = 0.08;

/// Strikes the ball with the racket if it lies on the blade.
///
/// Returns the outgoing state and `true`, or the unchanged state and `false`
/// when the in-plane offset exceeds the blade radius or the ball is not
/// closing on the blade.
pub fn racket_impact<T: Scalar>(
    ball_state: &BallState<T>,
    racket: &RacketState<T>,
    surface: &SurfaceParams<T>,
    params: &BallParams<T>,
) -> (BallState<T>, bool) {
    let n = racket_normal(&racket.angles);
    let offset = ball_state.p - racket.center;
    let in_plane = offset - n * offset.dot(n);
    if in_plane.norm() > racket.radius {
        return (*ball_state, false);
    }
    // the blade is two-sided: strike with whichever face the ball closes on
    let vn = (ball_state.v - racket.velocity).dot(n);
    let face = if vn > T::zero() { -n } else { n };
    match bounce(ball_state, face, racket.velocity, surface, params) {
        Ok(s) => (s, true),
        Err(_) => (*ball_state, false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ball() -> BallParams<f64> {
        BallParams::standard()
    }

    fn st(v: [f64; 3], w: [f64; 3]) -> BallState<f64> {
        BallState::new(0.0, Vec3::zero(), Vec3::from_array(v), Vec3::from_array(w))
    }

    const UP: Vec3<f64> = Vec3::new(0.0, 0.0, 1.0);

    #[test]
    fn restitution_from_drop_heights() {
        assert_relative_eq!(estimate_restitution(1.0, 0.9409).unwrap(), 0.97, epsilon = 1e-12);
        assert_eq!(estimate_restitution(0.5, 0.5).unwrap(), 1.0);
        assert_eq!(estimate_restitution(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(estimate_restitution(0.0, 0.5), Err(ContactError::NonPositiveDropHeight(0.0)));
        assert!(estimate_restitution(-1.0, 0.5).is_err());
    }

    #[test]
    fn friction_from_tilt() {
        assert_relative_eq!(estimate_friction(0.05f64.atan()).unwrap(), 0.05, epsilon = 1e-12);
        assert_eq!(estimate_friction(0.0).unwrap(), 0.0);
        assert_relative_eq!(estimate_friction(std::f64::consts::FRAC_PI_4).unwrap(), 1.0, epsilon = 1e-12);
        assert!(estimate_friction(std::f64::consts::FRAC_PI_2).is_err());
        assert!(estimate_friction(-0.1).is_err());
    }

    #[test]
    fn head_on_table_bounce() {
        let out = bounce(&st([0.0, 0.0, -3.0], [0.0; 3]), UP, Vec3::zero(), &SurfaceParams::table(), &ball()).unwrap();
        assert_relative_eq!(out.v.z, 2.91, epsilon = 1e-12);
        assert_eq!(out.v.x, 0.0);
        assert_eq!(out.w, Vec3::zero());
    }

    #[test]
    fn oblique_table_bounce_slides() {
        let i = impact(&st([2.0, 0.0, -3.0], [0.0; 3]), UP, Vec3::zero(), &SurfaceParams::table(), &ball()).unwrap();
        assert!(!i.sticking);
        assert_relative_eq!(i.state.v.x, 1.7045, epsilon = 1e-9);
        assert_relative_eq!(i.state.v.z, 2.91, epsilon = 1e-12);
        assert_relative_eq!(i.state.w.y, 22.6, epsilon = 0.05);
        assert_eq!(i.state.w.x, 0.0);
        assert_eq!(i.state.w.z, 0.0);
    }

    #[test]
    fn head_on_racket_bounce() {
        let out = bounce(
            &st([-4.0, 0.0, 0.0], [0.0; 3]),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::zero(),
            &SurfaceParams::racket(),
            &ball(),
        )
        .unwrap();
        assert_relative_eq!(out.v.x, 3.6, epsilon = 1e-12);
    }

    #[test]
    fn separating_contact_rejected() {
        let r = bounce(&st([0.0, 0.0, 1.0], [0.0; 3]), UP, Vec3::zero(), &SurfaceParams::table(), &ball());
        assert!(matches!(r, Err(ContactError::Separating(_))));
        let r = bounce(&st([1.0, 0.0, 0.0], [0.0; 3]), UP, Vec3::zero(), &SurfaceParams::table(), &ball());
        assert!(matches!(r, Err(ContactError::Separating(_))));
    }

    #[test]
    fn surface_validation() {
        assert!(SurfaceParams::new(0.0, 0.1).is_err());
        assert!(SurfaceParams::new(1.1, 0.1).is_err());
        assert!(SurfaceParams::new(0.9, -0.1).is_err());
        assert!(SurfaceParams::new(1.0, 0.0).is_ok());
    }

    #[test]
    fn racket_normal_convention() {
        let deg = std::f64::consts::PI / 180.0;
        let n = racket_normal(&RacketAngles { alpha: 0.0, beta: 0.0, gamma: 0.0 });
        assert_eq!(n, Vec3::new(-1.0, 0.0, 0.0));
        let n = racket_normal(&RacketAngles { alpha: 0.0, beta: 90.0 * deg, gamma: 0.0 });
        assert!(n.max_abs_diff(Vec3::new(0.0, 0.0, 1.0)) < 1e-15);
        let n = racket_normal(&RacketAngles { alpha: 1.234, beta: 0.0, gamma: 0.0 });
        assert_eq!(n, Vec3::new(-1.0, 0.0, 0.0));
        let n = racket_normal(&RacketAngles { alpha: 0.3, beta: 0.4, gamma: -0.7 });
        assert_relative_eq!(n.norm(), 1.0, epsilon = 1e-15);
    }

    fn racket(v: f64, center: Vec3<f64>) -> RacketState<f64> {
        RacketState {
            center,
            angles: RacketAngles::default(),
            velocity: Vec3::new(v, 0.0, 0.0),
            radius: DEFAULT_RACKET_RADIUS,
        }
    }

    #[test]
    fn moving_racket_adds_its_speed() {
        let b = BallState::new(0.0, Vec3::new(0.675, 0.0, 0.1), Vec3::new(-4.0, 0.0, 0.0), Vec3::zero());
        let (out, hit) = racket_impact(&b, &racket(1.0, b.p), &SurfaceParams::racket(), &ball());
        assert!(hit);
        assert_relative_eq!(out.v.x, 5.5, epsilon = 1e-12);
        let (out, hit) = racket_impact(&b, &racket(0.0, b.p), &SurfaceParams::racket(), &ball());
        assert!(hit);
        assert_relative_eq!(out.v.x, 3.6, epsilon = 1e-12);
    }

    #[test]
    fn off_centre_miss() {
        let b = BallState::new(0.0, Vec3::new(0.675, 0.10, 0.1), Vec3::new(-4.0, 0.0, 0.0), Vec3::zero());
        let (out, hit) = racket_impact(&b, &racket(1.0, Vec3::new(0.675, 0.0, 0.1)), &SurfaceParams::racket(), &ball());
        assert!(!hit);
        assert_eq!(out, b);
    }

    #[test]
    fn sticking_stops_contact_point() {
        // grippy surface: the contact point leaves with zero slip
        let surf = SurfaceParams::new(0.9, 1.0).unwrap();
        let s = st([1.0, 0.5, -3.0], [20.0, -40.0, 5.0]);
        let i = impact(&s, UP, Vec3::zero(), &surf, &ball()).unwrap();
        assert!(i.sticking);
        assert!(contact_slip(&i.state, UP, Vec3::zero(), &ball()).norm() < 1e-9);
    }
}
