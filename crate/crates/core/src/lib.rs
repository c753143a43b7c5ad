//! Table-tennis stroke learning workbench.
//!
//! * [`physics`]: spinning-ball flight with drag and Magnus lift.
//! * [`contact`]: impulse-based table and racket impacts.
//! * [`env`]: the single-step stroke environment and its reward.
//! * [`nn`]: fully connected networks and Adam.
//! * [`agent`]: the vector-valued actor-critic learner and its ablations.
//! * [`eval`]: evaluation metrics and ablation reports.
//! * [`config`] / [`persist`]: run configuration and file formats.
//!
//! Physics, contact and network code is generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix the double-precision instantiation used by
//! the learner.

pub mod agent;
pub mod config;
pub mod contact;
pub mod env;
pub mod eval;
pub mod nn;
pub mod persist;
pub mod physics;
pub mod scalar;
pub mod seeding;
pub mod vec3;

pub use scalar::Scalar;

pub type Vector3 = vec3::Vec3<f64>;
pub type BallState = physics::BallState<f64>;
pub type BallParams = physics::BallParams<f64>;
pub type SurfaceParams = contact::SurfaceParams<f64>;
pub type RacketState = contact::RacketState<f64>;
pub type RacketAngles = contact::RacketAngles<f64>;
pub type Mlp = nn::Mlp<f64>;
pub type AdamState = nn::AdamState<f64>;
pub type Gradients = nn::Gradients<f64>;
