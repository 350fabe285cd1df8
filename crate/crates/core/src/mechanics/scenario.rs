//! Random initial conditions for the three scene families.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::UnitQuaternion;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::surface::{make_bowl, make_heightfield, SurfaceModel, Window, TEXTURE_SIZE, WINDOW_SIZE};
use super::{BallState, MechError, Vec3};

/// Converts sampled planar velocity components to meters per second.
pub const VELOCITY_UNIT: f64 = 0.1;
pub const BALL_RESTITUTION: f64 = 0.7;
pub const DEFAULT_RADIUS: f64 = 0.225;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Hemispherical,
    Ellipsoidal,
    Heightfield,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub family: Family,
    #[serde(default = "one_ball")]
    pub n_balls: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "yes")]
    pub textured: bool,
}

fn one_ball() -> usize {
    1
}
fn default_radius() -> f64 {
    DEFAULT_RADIUS
}
fn yes() -> bool {
    true
}

impl ScenarioConfig {
    pub fn new(family: Family, n_balls: usize) -> Self {
        Self { family, n_balls, radius: DEFAULT_RADIUS, textured: true }
    }
}

/// The raw draws that produced one ball's initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Launch {
    /// Bowl elevation and azimuth about the bowl center; zero on heightfields.
    pub elevation: f64,
    pub azimuth: f64,
    /// Planar velocity components before scaling and tangential projection.
    pub planar_velocity: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub surface: SurfaceModel,
    pub balls: Vec<BallState>,
    pub elasticity: f64,
    /// Half-width of the square wall box around the visible window.
    pub wall_box: Option<f64>,
    pub rng_seed: u64,
    pub textured: bool,
    /// Point light for heightfield shading.
    pub light: [f64; 3],
    pub launches: Vec<Launch>,
}

pub fn sample_scenario<R: Rng>(config: &ScenarioConfig, rng_seed: u64, rng: &mut R) -> Result<Scenario, MechError> {
    if !(1..=3).contains(&config.n_balls) {
        return Err(MechError::BadParameter { what: "ball count", value: config.n_balls as f64 });
    }
    if !(config.radius > 0.0 && config.radius < 0.25) {
        return Err(MechError::BadParameter { what: "ball radius", value: config.radius });
    }
    let surface = match config.family {
        Family::Hemispherical => make_bowl(1.0, 0.0)?,
        Family::Ellipsoidal => make_bowl(rng.random_range(0.5..=1.0), rng.random_range(-PI..=PI))?,
        Family::Heightfield => {
            let margin = WINDOW_SIZE / 2.0 * std::f64::consts::SQRT_2;
            let window = Window {
                offset: [
                    rng.random_range(margin..=TEXTURE_SIZE - margin),
                    rng.random_range(margin..=TEXTURE_SIZE - margin),
                ],
                rotation: rng.random_range(-PI..=PI),
            };
            make_heightfield(rng.random::<u64>(), rng.random_range(0.2..=0.7), window)?
        }
    };
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let light = [sign * rng.random_range(1.0..=1.5), sign * rng.random_range(1.0..=1.5), 2.0];

    let mut balls: Vec<BallState> = Vec::with_capacity(config.n_balls);
    let mut launches = Vec::with_capacity(config.n_balls);
    for index in 0..config.n_balls {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let (position, elevation, azimuth) = match config.family {
                Family::Heightfield => {
                    let lim = WINDOW_SIZE / 2.0 - config.radius;
                    let x = rng.random_range(-lim..=lim);
                    let y = rng.random_range(-lim..=lim);
                    (sphere_trace(&surface, x, y, config.radius), 0.0, 0.0)
                }
                _ => {
                    let elevation = rng.random_range(-0.9 * PI..=-FRAC_PI_2);
                    let azimuth = rng.random_range(-PI..=PI);
                    (place_in_bowl(&surface, elevation, azimuth, config.radius), elevation, azimuth)
                }
            };
            let Some(position) = position else { continue };
            let clear = balls.iter().all(|b| (b.position - position).norm() > b.radius + config.radius);
            if clear {
                placed = Some((position, elevation, azimuth));
                break;
            }
        }
        let Some((position, elevation, azimuth)) = placed else {
            return Err(MechError::Placement { attempts: MAX_PLACEMENT_ATTEMPTS });
        };

        let planar = match (config.family, config.n_balls) {
            (Family::Heightfield, _) => [signed(rng, 2.0, 4.0), signed(rng, 2.0, 4.0)],
            (_, 1) => [signed(rng, 5.0, 10.0), signed(rng, 5.0, 10.0)],
            _ => {
                let speed = rng.random_range(10.0..=15.0);
                let heading: f64 = rng.random_range(-PI..=PI);
                [speed * heading.cos(), speed * heading.sin()]
            }
        };
        let n = surface.closest(position).normal;
        let v = Vec3::new(planar[0], planar[1], 0.0) * VELOCITY_UNIT;
        let v = v - n * v.dot(&n);
        let orientation =
            UnitQuaternion::from_euler_angles(rng.random_range(-PI..=PI), rng.random_range(-PI..=PI), rng.random_range(-PI..=PI));
        balls.push(BallState {
            position,
            velocity: v,
            angular_velocity: n.cross(&v) / config.radius,
            radius: config.radius,
            color_index: index as u8,
            orientation,
        });
        launches.push(Launch { elevation, azimuth, planar_velocity: planar });
    }

    Ok(Scenario {
        wall_box: (config.family == Family::Heightfield).then_some(WINDOW_SIZE / 2.0),
        surface,
        balls,
        elasticity: BALL_RESTITUTION,
        rng_seed,
        textured: config.textured,
        light,
        launches,
    })
}

fn signed<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let m = rng.random_range(lo..=hi);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Surface point hit from the bowl center `(0,0,1)` along the polar
/// direction `(elevation, azimuth)`, then lifted vertically until the
/// ball rests on the surface.
fn place_in_bowl(surface: &SurfaceModel, elevation: f64, azimuth: f64, radius: f64) -> Option<Vec3> {
    let d = Vec3::new(elevation.sin() * azimuth.cos(), elevation.sin() * azimuth.sin(), elevation.cos());
    let (ex, ey) = (d.x, d.y);
    let spec = surface.spec();
    let (s, c) = (-spec.z_rotation).sin_cos();
    let lx = c * ex - s * ey;
    let ly = s * ex + c * ey;
    let t = 1.0 / (lx * lx / (spec.a * spec.a) + ly * ly + d.z * d.z).sqrt();
    let hit = Vec3::new(0.0, 0.0, 1.0) + d * t;
    let gap = |z: f64| surface.closest(Vec3::new(hit.x, hit.y, z)).distance - radius;
    let (mut lo, mut hi) = (hit.z, 1.0);
    if gap(hi) < 0.0 {
        return None;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let contact = surface.closest(Vec3::new(hit.x, hit.y, hi));
    Some(contact.point + contact.normal * radius)
}

/// Drops a ball from above the window onto the heightfield.
fn sphere_trace(surface: &SurfaceModel, x: f64, y: f64, radius: f64) -> Option<Vec3> {
    let mut p = Vec3::new(x, y, 2.0);
    for _ in 0..500 {
        let gap = surface.closest(p).distance - radius;
        if gap < 1e-10 {
            break;
        }
        p.z -= gap;
    }
    let contact = surface.closest(p);
    let c = contact.point + contact.normal * radius;
    let lim = WINDOW_SIZE / 2.0 - radius;
    (c.x.abs() <= lim && c.y.abs() <= lim && c.iter().all(|v| v.is_finite())).then_some(c)
}
