//! One 120 Hz step of a single ball: rolling contact or ballistic flight.

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use super::surface::SurfaceModel;
use super::{BallState, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub gravity: f64,
    pub dt: f64,
    pub rolling_resistance: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { gravity: super::GRAVITY, dt: super::DT, rolling_resistance: super::ROLLING_RESISTANCE }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Contact,
    Flight,
}

pub fn step(state: &BallState, surface: &SurfaceModel, params: &SimParams) -> BallState {
    step_with_phase(state, surface, params).0
}

pub fn step_with_phase(state: &BallState, surface: &SurfaceModel, params: &SimParams) -> (BallState, Phase) {
    let dt = params.dt;
    let g = Vec3::new(0.0, 0.0, -params.gravity);
    let rho = state.radius;

    let v_ball = state.velocity + g * dt;
    let c_ball = state.position + v_ball * dt;
    let probe = surface.closest(c_ball);
    if probe.distance >= rho && surface.in_footprint(c_ball.x, c_ball.y) {
        let mut next = state.clone();
        next.position = c_ball;
        next.velocity = v_ball;
        next.orientation = advance(state.orientation, state.angular_velocity, dt);
        return (next, Phase::Flight);
    }
    (contact_step(state, surface, params), Phase::Contact)
}

fn advance(q: UnitQuaternion<f64>, omega: Vec3, dt: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_scaled_axis(omega * dt) * q
}

fn contact_step(state: &BallState, surface: &SurfaceModel, params: &SimParams) -> BallState {
    let dt = params.dt;
    let grav = params.gravity;
    let rho = state.radius;
    let c = state.position;
    let n = surface.closest(c).normal;

    // Normal velocity is absorbed; slip between surface and ball is
    // removed by the impulsive friction of a solid sphere.
    let v_t = state.velocity - n * state.velocity.dot(&n);
    let v_roll = (v_t * 5.0 + state.angular_velocity.cross(&n) * (2.0 * rho)) / 7.0;

    let g = Vec3::new(0.0, 0.0, -grav);
    let g_t = g - n * g.dot(&n);
    let mut v1 = v_roll + g_t * (5.0 / 7.0 * dt);
    let speed = v1.norm();
    let drag = params.rolling_resistance * grav * dt;
    let mut rest = state.clone();
    rest.velocity = Vec3::zeros();
    rest.angular_velocity = Vec3::zeros();
    if speed <= drag {
        return rest;
    }
    v1 *= (speed - drag) / speed;

    let contact = surface.closest(c + v1 * dt);
    let n1 = contact.normal;
    let c1 = contact.point + n1 * rho;
    let travelled = (c1 - c).norm();
    let v_sq = v_roll.norm_squared() + 10.0 / 7.0 * grav * (c.z - c1.z)
        - 2.0 * params.rolling_resistance * grav * travelled;
    let dir = v1 - n1 * v1.dot(&n1);
    let dir_norm = dir.norm();
    if v_sq <= 0.0 || dir_norm == 0.0 {
        return rest;
    }
    let v_new = dir * (v_sq.sqrt() / dir_norm);
    let omega = n1.cross(&v_new) / rho;
    BallState {
        position: c1,
        velocity: v_new,
        angular_velocity: omega,
        radius: rho,
        color_index: state.color_index,
        orientation: advance(state.orientation, omega, dt),
    }
}
