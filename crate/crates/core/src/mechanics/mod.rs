//! Spheres rolling on bowls and heightfields.
//!
//! Contact is modeled analytically: a ball in contact rolls without
//! slipping, feels five sevenths of the tangential gravity and a constant
//! rolling-resistance deceleration. Speeds are reconciled with the energy
//! budget after each step so the integrator never gains energy.

mod ball;
mod collide;
mod integrate;
pub mod perlin;
mod scenario;
mod simulate;
mod surface;

use thiserror::Error;

pub use ball::BallState;
pub use collide::resolve_collisions;
pub use integrate::{step, step_with_phase, Phase, SimParams};
pub use scenario::{
    sample_scenario, Family, Launch, Scenario, ScenarioConfig, BALL_RESTITUTION, DEFAULT_RADIUS,
    MAX_PLACEMENT_ATTEMPTS, VELOCITY_UNIT,
};
pub use simulate::{simulate_sequence, simulate_with, Rejection, SimOutcome, Trajectory};
pub use surface::{
    make_bowl, make_flat, make_heightfield, Contact, SurfaceKind, SurfaceModel, SurfaceSpec, Window,
    HEIGHTFIELD_AMPLITUDE, LATTICE_PER_SCALE, NORMAL_FD_STEP, TEXTURE_SIZE, WINDOW_SIZE,
};

pub type Vec3 = nalgebra::Vector3<f64>;

pub const GRAVITY: f64 = 9.81;
pub const SIM_RATE: f64 = 120.0;
pub const DT: f64 = 1.0 / SIM_RATE;
pub const SUBSAMPLE: usize = 3;
pub const MIN_RAW_FRAMES: usize = 250;
pub const STOP_SPEED: f64 = 1e-3;
pub const ROLLING_RESISTANCE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechError {
    #[error("{what} out of range: {value}")]
    BadParameter { what: &'static str, value: f64 },
    #[error("could not place balls after {attempts} attempts")]
    Placement { attempts: usize },
    #[error("simulation produced a non-finite state at raw frame {raw_frame}")]
    NonFinite { raw_frame: usize },
}
