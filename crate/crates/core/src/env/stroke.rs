use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::reward::{reward, reward_1d};
use super::{BanditEnv, EnvError, Feedback, Split};
use crate::contact::{racket_impact, RacketAngles, RacketState, SurfaceParams, DEFAULT_RACKET_RADIUS};
use crate::physics::{back_integrate, integrate_until, sample_trajectory, BallParams, BallState, Direction, Event};
use crate::vec3::Vec3;

/// x coordinate of the virtual hitting plane (m).
pub const HITTING_PLANE_X: f64 = 0.675;

/// Racket rest position in world coordinates (m).
pub const RACKET_HOME: [f64; 3] = [0.5, 0.0, 0.0];

/// Observation layout: target (2), position (3), velocity (3), spin (3).
pub const OBS_DIM: usize = 11;

/// Table pose and dimensions. The playing surface is the plane `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableGeometry {
    pub near_edge_x: f64,
    pub length: f64,
    pub width: f64,
    pub net_height: f64,
}

impl Default for TableGeometry {
    fn default() -> Self {
        Self { near_edge_x: 0.80, length: 2.74, width: 1.525, net_height: 0.173 }
    }
}

impl TableGeometry {
    pub fn net_x(&self) -> f64 {
        self.near_edge_x + 0.5 * self.length
    }

    pub fn far_edge_x(&self) -> f64 {
        self.near_edge_x + self.length
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.width
    }

    /// Whether a landing point lies on the opponent's half; edges count as on.
    pub fn on_opponent_half(&self, x: f64, y: f64) -> bool {
        const EDGE: f64 = 1e-9;
        x >= self.net_x() && x <= self.far_edge_x() + EDGE && y.abs() <= self.half_width() + EDGE
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    /// Affine map onto `[-1, 1]`, clamped; a degenerate range maps to 0.
    pub fn normalize(&self, v: f64) -> f64 {
        if self.hi > self.lo {
            (2.0 * (v - self.lo) / (self.hi - self.lo) - 1.0).clamp(-1.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn denormalize(&self, u: f64) -> f64 {
        self.lo + 0.5 * (u + 1.0) * (self.hi - self.lo)
    }
}

/// Sampling ranges of the ball state at the hitting plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateRanges {
    pub p_y: Range,
    pub p_z: Range,
    pub v_x: Range,
    pub v_y: Range,
    pub v_z: Range,
    pub w_x: Range,
    pub w_y: Range,
    pub w_z: Range,
}

impl StateRanges {
    pub fn training() -> Self {
        Self {
            p_y: Range::new(-0.60, 0.63),
            p_z: Range::new(-0.01, 0.34),
            v_x: Range::new(-6.00, -1.35),
            v_y: Range::new(-1.95, 2.16),
            v_z: Range::new(-3.47, 3.15),
            w_x: Range::new(-127.67, 110.88),
            w_y: Range::new(-299.99, 299.81),
            w_z: Range::new(-193.81, 189.65),
        }
    }

    pub fn evaluation() -> Self {
        Self {
            p_y: Range::new(-0.68, 0.68),
            p_z: Range::new(-0.01, 0.34),
            v_x: Range::new(-5.94, -2.52),
            v_y: Range::new(-1.29, 2.02),
            v_z: Range::new(-3.40, 2.60),
            w_x: Range::new(-95.08, 111.53),
            w_y: Range::new(-299.62, 299.73),
            w_z: Range::new(-189.05, 189.47),
        }
    }

    pub fn named(&self) -> [(&'static str, Range); 8] {
        [
            ("p_y", self.p_y),
            ("p_z", self.p_z),
            ("v_x", self.v_x),
            ("v_y", self.v_y),
            ("v_z", self.v_z),
            ("w_x", self.w_x),
            ("w_y", self.w_y),
            ("w_z", self.w_z),
        ]
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, r) in self.named() {
            if !(r.lo <= r.hi) || !r.lo.is_finite() || !r.hi.is_finite() {
                return Err(EnvError::InvertedRange { name, lo: r.lo, hi: r.hi });
            }
        }
        Ok(())
    }
}

/// Standard deviations of the additive observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// m
    pub position: f64,
    /// m/s
    pub velocity: f64,
    /// rad/s
    pub spin: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { position: 0.005, velocity: 0.1, spin: 5.0 }
    }
}

impl NoiseConfig {
    pub const NONE: Self = Self { position: 0.0, velocity: 0.0, spin: 0.0 };

    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, s) in [("position", self.position), ("velocity", self.velocity), ("spin", self.spin)] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(EnvError::InvalidNoise(name));
            }
        }
        Ok(())
    }
}

/// Ball state at the hitting plane together with the landing target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitState {
    pub p: Vec3<f64>,
    pub v: Vec3<f64>,
    pub w: Vec3<f64>,
    pub target: [f64; 2],
}

impl HitState {
    pub fn ball(&self) -> BallState<f64> {
        BallState::new(0.0, self.p, self.v, self.w)
    }

    pub fn to_raw(&self) -> [f64; OBS_DIM] {
        [
            self.target[0],
            self.target[1],
            self.p.x,
            self.p.y,
            self.p.z,
            self.v.x,
            self.v.y,
            self.v.z,
            self.w.x,
            self.w.y,
            self.w.z,
        ]
    }

    pub fn from_raw(r: &[f64; OBS_DIM]) -> Self {
        Self {
            target: [r[0], r[1]],
            p: Vec3::new(r[2], r[3], r[4]),
            v: Vec3::new(r[5], r[6], r[7]),
            w: Vec3::new(r[8], r[9], r[10]),
        }
    }
}

pub fn sample_hit_state<R: Rng + ?Sized>(
    rng: &mut R,
    ranges: &StateRanges,
    target: [f64; 2],
) -> Result<HitState, EnvError> {
    ranges.validate()?;
    Ok(sample_unchecked(rng, ranges, target))
}

fn sample_unchecked<R: Rng + ?Sized>(rng: &mut R, r: &StateRanges, target: [f64; 2]) -> HitState {
    HitState {
        p: Vec3::new(HITTING_PLANE_X, r.p_y.sample(rng), r.p_z.sample(rng)),
        v: Vec3::new(r.v_x.sample(rng), r.v_y.sample(rng), r.v_z.sample(rng)),
        w: Vec3::new(r.w_x.sample(rng), r.w_y.sample(rng), r.w_z.sample(rng)),
        target,
    }
}

/// Per-dimension normalization bounds for observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationScale {
    pub dims: [Range; OBS_DIM],
}

impl ObservationScale {
    pub fn new(ranges: &StateRanges, target: [f64; 2], plane_x: f64) -> Self {
        Self {
            dims: [
                Range::point(target[0]),
                Range::point(target[1]),
                Range::point(plane_x),
                ranges.p_y,
                ranges.p_z,
                ranges.v_x,
                ranges.v_y,
                ranges.v_z,
                ranges.w_x,
                ranges.w_y,
                ranges.w_z,
            ],
        }
    }

    pub fn normalize(&self, hit: &HitState) -> [f64; OBS_DIM] {
        let raw = hit.to_raw();
        std::array::from_fn(|i| self.dims[i].normalize(raw[i]))
    }

    pub fn denormalize(&self, obs: &[f64; OBS_DIM]) -> HitState {
        HitState::from_raw(&std::array::from_fn(|i| self.dims[i].denormalize(obs[i])))
    }
}

/// Noisy estimate of the hitting state; the target is passed through exactly.
pub fn perceive<R: Rng + ?Sized>(hit: &HitState, noise: &NoiseConfig, rng: &mut R) -> HitState {
    let jitter = |v: Vec3<f64>, sigma: f64, rng: &mut R| {
        if sigma > 0.0 {
            let n = Normal::new(0.0, sigma).expect("validated sigma");
            Vec3::new(v.x + n.sample(rng), v.y + n.sample(rng), v.z + n.sample(rng))
        } else {
            v
        }
    };
    let p = jitter(hit.p, noise.position, rng);
    let v = jitter(hit.v, noise.velocity, rng);
    let w = jitter(hit.w, noise.spin, rng);
    HitState { p, v, w, target: hit.target }
}

/// Noisy, normalized observation of the hitting state.
pub fn observe<R: Rng + ?Sized>(
    hit: &HitState,
    noise: &NoiseConfig,
    scale: &ObservationScale,
    rng: &mut R,
) -> [f64; OBS_DIM] {
    scale.normalize(&perceive(hit, noise, rng))
}

/// Physical limits of the stroke.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    /// m/s; the forward speed ranges over `[0, max_speed]`.
    pub max_speed: f64,
    /// rad; both orientation angles range over `[-max_angle, max_angle]`.
    pub max_angle: f64,
}

impl Default for ActionBounds {
    fn default() -> Self {
        Self { max_speed: 2.0, max_angle: 50f64.to_radians() }
    }
}

/// Racket command: forward speed and two orientation angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrokeAction {
    pub speed: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl StrokeAction {
    /// Scales a policy output in `[-1, 1]^3` to physical units.
    pub fn from_unit(a: [f64; 3], bounds: &ActionBounds) -> Self {
        let a = a.map(|v| v.clamp(-1.0, 1.0));
        Self {
            speed: 0.5 * (a[0] + 1.0) * bounds.max_speed,
            beta: a[1] * bounds.max_angle,
            gamma: a[2] * bounds.max_angle,
        }
    }

    pub fn to_unit(&self, bounds: &ActionBounds) -> [f64; 3] {
        [
            2.0 * self.speed / bounds.max_speed - 1.0,
            self.beta / bounds.max_angle,
            self.gamma / bounds.max_angle,
        ]
    }

    pub fn clamped(&self, bounds: &ActionBounds) -> Self {
        Self {
            speed: self.speed.clamp(0.0, bounds.max_speed),
            beta: self.beta.clamp(-bounds.max_angle, bounds.max_angle),
            gamma: self.gamma.clamp(-bounds.max_angle, bounds.max_angle),
        }
    }
}

/// Places the racket at the predicted hitting position with the commanded stroke.
///
/// The roll angle follows the lateral hitting position: `k_alpha * y / (width / 2)`.
pub fn racket_from_action(
    action: &StrokeAction,
    predicted_hit: Vec3<f64>,
    k_alpha: f64,
    table: &TableGeometry,
    bounds: &ActionBounds,
    radius: f64,
) -> RacketState<f64> {
    let a = action.clamped(bounds);
    RacketState {
        center: predicted_hit,
        angles: RacketAngles {
            alpha: k_alpha * predicted_hit.y / table.half_width(),
            beta: a.beta,
            gamma: a.gamma,
        },
        velocity: Vec3::new(a.speed, 0.0, 0.0),
        radius,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    Miss,
    IntoNet,
    OwnSide,
    OffTable,
    Backward,
    Timeout,
}

impl FailureReason {
    pub const ALL: [FailureReason; 6] = [
        FailureReason::Miss,
        FailureReason::IntoNet,
        FailureReason::OwnSide,
        FailureReason::OffTable,
        FailureReason::Backward,
        FailureReason::Timeout,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::Miss => "miss",
            FailureReason::IntoNet => "into_net",
            FailureReason::OwnSide => "own_side",
            FailureReason::OffTable => "off_table",
            FailureReason::Backward => "backward",
            FailureReason::Timeout => "timeout",
        }
    }
}

/// What happened to the returned ball.
///
/// `landing` is present exactly when the return succeeded; `net_clearance`
/// is also kept for failures that crossed the net plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub success: bool,
    pub landing: Option<[f64; 2]>,
    pub net_clearance: Option<f64>,
    pub failure: Option<FailureReason>,
}

impl EpisodeOutcome {
    pub fn landed(landing: [f64; 2], net_clearance: f64) -> Self {
        Self { success: true, landing: Some(landing), net_clearance: Some(net_clearance), failure: None }
    }

    pub fn failed(reason: FailureReason, net_clearance: Option<f64>) -> Self {
        Self { success: false, landing: None, net_clearance, failure: Some(reason) }
    }

    pub fn distance_to(&self, target: [f64; 2]) -> Option<f64> {
        self.landing.map(|p| (p[0] - target[0]).hypot(p[1] - target[1]))
    }
}

/// Physical constants and settings of the stroke environment.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeEnv {
    pub ball: BallParams<f64>,
    pub table_surface: SurfaceParams<f64>,
    pub racket_surface: SurfaceParams<f64>,
    pub table: TableGeometry,
    pub bounds: ActionBounds,
    pub racket_radius: f64,
    /// rad
    pub k_alpha: f64,
    pub noise: NoiseConfig,
    pub training_ranges: StateRanges,
    pub evaluation_ranges: StateRanges,
    pub target: [f64; 2],
    pub dt: f64,
    /// Longest simulated return flight (s).
    pub t_max: f64,
    pub k_reward_1d: f64,
    scale: ObservationScale,
}

impl Default for StrokeEnv {
    fn default() -> Self {
        Self::builder().build().expect("default environment is valid")
    }
}

/// Builder for [`StrokeEnv`]; every field starts at its default.
#[derive(Debug, Clone)]
pub struct StrokeEnvBuilder {
    pub ball: BallParams<f64>,
    pub table_surface: SurfaceParams<f64>,
    pub racket_surface: SurfaceParams<f64>,
    pub table: TableGeometry,
    pub bounds: ActionBounds,
    pub racket_radius: f64,
    pub k_alpha: f64,
    pub noise: NoiseConfig,
    pub training_ranges: StateRanges,
    pub evaluation_ranges: StateRanges,
    pub target: [f64; 2],
    pub dt: f64,
    pub t_max: f64,
    pub k_reward_1d: f64,
}

impl StrokeEnvBuilder {
    pub fn build(self) -> Result<StrokeEnv, EnvError> {
        self.training_ranges.validate()?;
        self.evaluation_ranges.validate()?;
        self.noise.validate()?;
        let positive = [
            ("racket_radius", self.racket_radius),
            ("dt", self.dt),
            ("t_max", self.t_max),
            ("k_reward_1d", self.k_reward_1d),
            ("max_speed", self.bounds.max_speed),
            ("max_angle", self.bounds.max_angle),
            ("table.length", self.table.length),
            ("table.width", self.table.width),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(EnvError::InvalidSetting { name, value });
            }
        }
        let scale = ObservationScale::new(&self.training_ranges, self.target, HITTING_PLANE_X);
        Ok(StrokeEnv {
            ball: self.ball,
            table_surface: self.table_surface,
            racket_surface: self.racket_surface,
            table: self.table,
            bounds: self.bounds,
            racket_radius: self.racket_radius,
            k_alpha: self.k_alpha,
            noise: self.noise,
            training_ranges: self.training_ranges,
            evaluation_ranges: self.evaluation_ranges,
            target: self.target,
            dt: self.dt,
            t_max: self.t_max,
            k_reward_1d: self.k_reward_1d,
            scale,
        })
    }
}

impl StrokeEnv {
    pub fn builder() -> StrokeEnvBuilder {
        StrokeEnvBuilder {
            ball: BallParams::standard(),
            table_surface: SurfaceParams::table(),
            racket_surface: SurfaceParams::racket(),
            table: TableGeometry::default(),
            bounds: ActionBounds::default(),
            racket_radius: DEFAULT_RACKET_RADIUS,
            k_alpha: 25f64.to_radians(),
            noise: NoiseConfig::default(),
            training_ranges: StateRanges::training(),
            evaluation_ranges: StateRanges::evaluation(),
            target: [2.55, 0.0],
            dt: crate::physics::DEFAULT_DT,
            t_max: 3.0,
            k_reward_1d: 0.5,
        }
    }

    pub fn scale(&self) -> &ObservationScale {
        &self.scale
    }

    pub fn ranges(&self, split: Split) -> &StateRanges {
        match split {
            Split::Training => &self.training_ranges,
            Split::Evaluation => &self.evaluation_ranges,
        }
    }

    pub fn racket_for(&self, action: [f64; 3], predicted: &HitState) -> RacketState<f64> {
        let a = StrokeAction::from_unit(action, &self.bounds);
        racket_from_action(&a, predicted.p, self.k_alpha, &self.table, &self.bounds, self.racket_radius)
    }

    /// Full episode for a known true and predicted hitting state.
    pub fn play(&self, context: &StrokeContext, action: [f64; 3]) -> EpisodeOutcome {
        let racket = self.racket_for(action, &context.predicted);
        rollout(&context.truth, &racket, self)
    }
}

/// True and perceived hitting state of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeContext {
    pub truth: HitState,
    pub predicted: HitState,
}

impl BanditEnv for StrokeEnv {
    type Context = StrokeContext;

    fn observation_dim(&self) -> usize {
        OBS_DIM
    }

    fn sample(&self, split: Split, rng: &mut dyn RngCore) -> (Vec<f64>, StrokeContext) {
        let truth = sample_unchecked(rng, self.ranges(split), self.target);
        let predicted = perceive(&truth, &self.noise, rng);
        let obs = self.scale.normalize(&predicted).to_vec();
        (obs, StrokeContext { truth, predicted })
    }

    fn step(&self, context: &StrokeContext, action: [f64; 3]) -> Feedback {
        let outcome = self.play(context, action);
        let target = context.truth.target;
        let r = reward(&outcome, target);
        Feedback {
            reward: r,
            reward_1d: reward_1d(&outcome, target, self.k_reward_1d),
            success: outcome.success,
            distance_reward: outcome.distance_to(target).map_or(0.0, |d| (-d).exp()),
            outcome: Some(outcome),
        }
    }
}

/// Strikes the ball at the true hitting state and follows the return flight
/// to its first landing.
pub fn rollout(true_hit: &HitState, racket: &RacketState<f64>, env: &StrokeEnv) -> EpisodeOutcome {
    let (after, hit) = racket_impact(&true_hit.ball(), racket, &env.racket_surface, &env.ball);
    if !hit {
        return EpisodeOutcome::failed(FailureReason::Miss, None);
    }
    return_flight(&after, env)
}

/// Classifies the flight of a ball that has just left the racket.
pub(crate) fn return_flight(after: &BallState<f64>, env: &StrokeEnv) -> EpisodeOutcome {
    if after.v.x <= 0.0 {
        return EpisodeOutcome::failed(FailureReason::Backward, None);
    }
    let net_x = env.table.net_x();
    let net_plane = |s: &BallState<f64>| s.p.x - net_x;
    let surface = |s: &BallState<f64>| s.p.z;
    let events = [
        Event::new(&net_plane, Direction::Rising),
        Event::new(&surface, Direction::Falling),
    ];
    let first = match integrate_until(after, &env.ball, &events, env.dt, env.t_max) {
        Ok(Some(c)) => c,
        _ => return EpisodeOutcome::failed(FailureReason::Timeout, None),
    };
    if first.event == 1 {
        return EpisodeOutcome::failed(FailureReason::OwnSide, None);
    }
    let at_net = first.state;
    let clearance = at_net.p.z;
    if clearance < env.table.net_height {
        return EpisodeOutcome::failed(FailureReason::IntoNet, Some(clearance));
    }
    let remaining = env.t_max - (at_net.t - after.t);
    let landing_event = [Event::new(&surface, Direction::Falling)];
    let landing = if remaining > 0.0 {
        integrate_until(&at_net, &env.ball, &landing_event, env.dt, remaining).ok().flatten()
    } else {
        None
    };
    let Some(landing) = landing else {
        return EpisodeOutcome::failed(FailureReason::Timeout, Some(clearance));
    };
    let (x, y) = (landing.state.p.x, landing.state.p.y);
    if env.table.on_opponent_half(x, y) {
        EpisodeOutcome::landed([x, y], clearance)
    } else if x < net_x {
        EpisodeOutcome::failed(FailureReason::OwnSide, Some(clearance))
    } else {
        EpisodeOutcome::failed(FailureReason::OffTable, Some(clearance))
    }
}

/// In-flight ball state `duration` seconds before the hit.
pub fn synthesize_serve(true_hit: &HitState, duration: f64, env: &StrokeEnv) -> Result<BallState<f64>, EnvError> {
    Ok(back_integrate(&true_hit.ball(), &env.ball, duration, env.dt)?)
}

/// Samples a whole episode every `dt`: incoming segment of `serve_duration`
/// seconds, the strike, and the return flight until it lands or times out.
///
/// Times start at zero on the first incoming sample.
pub fn episode_trajectory(
    true_hit: &HitState,
    racket: &RacketState<f64>,
    serve_duration: f64,
    env: &StrokeEnv,
) -> Result<(Vec<BallState<f64>>, EpisodeOutcome), EnvError> {
    let dt = env.dt;
    let start = synthesize_serve(true_hit, serve_duration, env)?;
    let mut incoming = sample_trajectory(&start, &env.ball, serve_duration, dt)?;
    // the last incoming sample is the hit itself; the struck state replaces it
    incoming.pop();
    let outcome = rollout(true_hit, racket, env);
    let (after, struck) = racket_impact(&true_hit.ball(), racket, &env.racket_surface, &env.ball);
    let mut rows = incoming;
    let landing_time = match (outcome.landing, struck) {
        (_, false) => 0.0,
        _ => {
            let surface = |s: &BallState<f64>| s.p.z;
            let ev = [Event::new(&surface, Direction::Falling)];
            integrate_until(&after, &env.ball, &ev, dt, env.t_max)?
                .map_or(env.t_max, |c| c.state.t - after.t)
        }
    };
    let ret = sample_trajectory(&after, &env.ball, landing_time, dt)?;
    rows.extend(ret);
    for (i, s) in rows.iter_mut().enumerate() {
        s.t = i as f64 * dt;
    }
    Ok((rows, outcome))
}
