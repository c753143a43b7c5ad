//! Run configuration, stored as TOML. Every field is optional in the file;
//! missing fields take the defaults below. Angles are in degrees here and
//! converted to radians when the environment is built.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentConfig, AgentError};
use crate::contact::{SurfaceParams, DEFAULT_RACKET_RADIUS};
use crate::env::{ActionBounds, EnvError, NoiseConfig, StateRanges, StrokeEnv, TableGeometry};
use crate::physics::{BallParams, PhysicsError, DEFAULT_DT};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write config {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Serialize(#[from] toml::ser::Error),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Contact(#[from] crate::contact::ContactError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallSection {
    /// kg
    pub mass: f64,
    /// m
    pub outer_radius: f64,
    /// m
    pub cavity_radius: f64,
    pub gravity: f64,
    pub drag_coefficient: f64,
    pub lift_coefficient: f64,
    /// kg/m^3
    pub air_density: f64,
}

impl Default for BallSection {
    fn default() -> Self {
        Self {
            mass: 2.7e-3,
            outer_radius: 0.02,
            cavity_radius: 0.0196,
            gravity: 9.81,
            drag_coefficient: 0.4,
            lift_coefficient: 0.6,
            air_density: 1.29,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    pub restitution: f64,
    pub friction: f64,
}

impl From<SurfaceParams<f64>> for SurfaceSection {
    fn from(s: SurfaceParams<f64>) -> Self {
        Self { restitution: s.restitution, friction: s.friction }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RacketSection {
    /// m
    pub radius: f64,
    /// m/s
    pub max_speed: f64,
    /// deg
    pub max_angle_deg: f64,
    /// deg; fixed roll of the racket face.
    pub k_alpha_deg: f64,
}

impl Default for RacketSection {
    fn default() -> Self {
        Self { radius: DEFAULT_RACKET_RADIUS, max_speed: 2.0, max_angle_deg: 50.0, k_alpha_deg: 25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RangesSection {
    pub training: StateRanges,
    pub evaluation: StateRanges,
}

impl Default for RangesSection {
    fn default() -> Self {
        Self { training: StateRanges::training(), evaluation: StateRanges::evaluation() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// s
    pub dt: f64,
    /// s; longest simulated return flight.
    pub t_max: f64,
    /// m; landing target on the opponent's half.
    pub target: [f64; 2],
    /// Coefficient of the scalar reward used by one-dimensional critics.
    pub k_reward_1d: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { dt: DEFAULT_DT, t_max: 3.0, target: [2.55, 0.0], k_reward_1d: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub episodes: usize,
    /// Seed of the shared evaluation suite, independent of the training seed.
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { episodes: 1000, seed: 20_240_601 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub ball: BallSection,
    pub table_surface: SurfaceSection,
    pub racket_surface: SurfaceSection,
    pub table: TableGeometry,
    pub racket: RacketSection,
    pub noise: NoiseConfig,
    pub ranges: RangesSection,
    pub simulation: SimulationSection,
    pub agent: AgentConfig,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("runs"),
            ball: BallSection::default(),
            table_surface: SurfaceParams::table().into(),
            racket_surface: SurfaceParams::racket().into(),
            table: TableGeometry::default(),
            racket: RacketSection::default(),
            noise: NoiseConfig::default(),
            ranges: RangesSection::default(),
            simulation: SimulationSection::default(),
            agent: AgentConfig::default(),
            eval: EvalSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_toml()?).map_err(|source| ConfigError::Write { path: path.into(), source })
    }

    pub fn ball_params(&self) -> Result<BallParams<f64>, PhysicsError> {
        let b = &self.ball;
        BallParams::new(
            b.mass,
            b.outer_radius,
            b.cavity_radius,
            b.gravity,
            b.drag_coefficient,
            b.lift_coefficient,
            b.air_density,
        )
    }

    pub fn to_env(&self) -> Result<StrokeEnv, ConfigError> {
        let mut b = StrokeEnv::builder();
        b.ball = self.ball_params()?;
        b.table_surface = SurfaceParams::new(self.table_surface.restitution, self.table_surface.friction)?;
        b.racket_surface = SurfaceParams::new(self.racket_surface.restitution, self.racket_surface.friction)?;
        b.table = self.table;
        b.bounds = ActionBounds { max_speed: self.racket.max_speed, max_angle: self.racket.max_angle_deg.to_radians() };
        b.racket_radius = self.racket.radius;
        b.k_alpha = self.racket.k_alpha_deg.to_radians();
        b.noise = self.noise;
        b.training_ranges = self.ranges.training;
        b.evaluation_ranges = self.ranges.evaluation;
        b.target = self.simulation.target;
        b.dt = self.simulation.dt;
        b.t_max = self.simulation.t_max;
        b.k_reward_1d = self.simulation.k_reward_1d;
        Ok(b.build()?)
    }

    /// Checks everything that can be checked without running anything.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.to_env()?;
        self.agent.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn defaults_build_the_default_env() {
        assert_eq!(RunConfig::default().to_env().unwrap(), StrokeEnv::default());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.seed = 17;
        c.agent = AgentConfig::ddpg();
        c.racket.k_alpha_deg = 30.0;
        c.ranges.evaluation.p_y.hi = 0.5;
        let back = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_override() {
        let c = RunConfig::from_toml("seed = 3\n[agent]\nq_dim = 1\n[noise]\nposition = 0.0\nvelocity = 0.0\nspin = 0.0\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.agent.q_dim, 1);
        assert_eq!(c.agent.batch_size, 512);
        assert_eq!(c.noise, NoiseConfig::NONE);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("sede = 3").is_err());
        assert!(RunConfig::from_toml("[agent]\nbatch = 3").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut c = RunConfig::default();
        c.racket_surface.restitution = 1.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.agent.q_dim = 2;
        assert!(c.validate().is_err());
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = RunConfig::load(Path::new("/nonexistent/run.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/run.toml"));
    }
}
