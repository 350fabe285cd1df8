use serde::{Deserialize, Serialize};

use super::integrate::{step, SimParams};
use super::scenario::Scenario;
use super::{resolve_collisions, BallState, MechError, MIN_RAW_FRAMES, STOP_SPEED, SUBSAMPLE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Ball states at 40 fps; frame `k` is raw step `3k`.
    pub frames: Vec<Vec<BallState>>,
    pub raw_frame_count: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rejection {
    LeftSurface { raw_frame: usize, ball: usize },
    TooShort { raw_frames: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimOutcome {
    Accepted(Trajectory),
    Rejected(Rejection),
}

impl SimOutcome {
    pub fn accepted(self) -> Option<Trajectory> {
        match self {
            SimOutcome::Accepted(t) => Some(t),
            SimOutcome::Rejected(_) => None,
        }
    }
}

/// Simulates at 120 Hz for at most `max_frames` subsampled frames.
pub fn simulate_sequence(scenario: &Scenario, max_frames: usize) -> Result<SimOutcome, MechError> {
    simulate_with(scenario, max_frames, &SimParams::default())
}

pub fn simulate_with(scenario: &Scenario, max_frames: usize, params: &SimParams) -> Result<SimOutcome, MechError> {
    let surface = &scenario.surface;
    let raw_limit = max_frames * SUBSAMPLE;
    let mut balls = scenario.balls.clone();
    let mut frames = Vec::with_capacity(max_frames);
    let mut raw = 0;
    while raw < raw_limit {
        if raw % SUBSAMPLE == 0 {
            frames.push(balls.clone());
        }
        raw += 1;
        if balls.iter().all(|b| b.speed() < STOP_SPEED) {
            break;
        }
        for b in balls.iter_mut() {
            *b = step(b, surface, params);
        }
        resolve_collisions(&mut balls, scenario.elasticity, scenario.wall_box);
        for (i, b) in balls.iter().enumerate() {
            if !b.is_finite() {
                return Err(MechError::NonFinite { raw_frame: raw });
            }
            let inside = surface.in_footprint(b.position.x, b.position.y);
            if !inside || (surface.is_bowl() && b.position.z > 1.0) {
                return Ok(SimOutcome::Rejected(Rejection::LeftSurface { raw_frame: raw, ball: i }));
            }
        }
    }
    if raw < MIN_RAW_FRAMES {
        return Ok(SimOutcome::Rejected(Rejection::TooShort { raw_frames: raw }));
    }
    Ok(SimOutcome::Accepted(Trajectory { frames, raw_frame_count: raw }))
}
