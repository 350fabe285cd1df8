//! Orthographic renderer for the simulated scenes.
//!
//! Every pixel casts a vertical ray downwards; the highest hit among the
//! balls and the terrain is shaded. World `x` maps to image columns and
//! world `y` to image rows.

mod image;

use serde::{Deserialize, Serialize};

pub use image::{Image, ImageError};

use crate::mechanics::{BallState, Scenario, SurfaceKind, SurfaceModel, Vec3};

pub const DEFAULT_IMAGE_SIZE: usize = 64;
pub const CAMERA_HEIGHT: f64 = 2.0;
pub const AMBIENT: f64 = 0.2;

const BACKGROUND: [f64; 3] = [0.05, 0.05, 0.07];
const CHECKER_LIGHT: [f64; 3] = [0.92, 0.9, 0.85];
const CHECKER_DARK: [f64; 3] = [0.3, 0.32, 0.38];
const CHECKER_CELLS_PER_METER: f64 = 4.0;
const TERRAIN_ALBEDO: [f64; 3] = [0.75, 0.7, 0.6];
const OCTANT_PALETTE: [[f64; 3]; 8] = [
    [0.9, 0.2, 0.2],
    [0.2, 0.8, 0.3],
    [0.25, 0.35, 0.95],
    [0.95, 0.85, 0.2],
    [0.85, 0.3, 0.85],
    [0.2, 0.85, 0.85],
    [0.95, 0.55, 0.15],
    [0.6, 0.6, 0.6],
];
const BALL_COLORS: [[f64; 3]; 3] = [[0.9, 0.1, 0.1], [0.1, 0.85, 0.1], [0.15, 0.25, 0.95]];
const PLAIN_WHITE: [f64; 3] = [1.0, 1.0, 1.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub height: f64,
    pub image_size: usize,
    /// Half-width of the square world footprint centered on the origin.
    pub half_window: f64,
}

impl Camera {
    pub fn new(image_size: usize, half_window: f64) -> Self {
        Self { height: CAMERA_HEIGHT, image_size, half_window }
    }

    pub fn for_surface(surface: &SurfaceModel, image_size: usize) -> Self {
        Self::new(image_size, surface.half_extent())
    }

    pub fn pixels_per_meter(&self) -> f64 {
        self.image_size as f64 / (2.0 * self.half_window)
    }

    /// World `(x, y)` under the center of pixel `(col, row)`.
    pub fn pixel_center(&self, col: usize, row: usize) -> (f64, f64) {
        let s = 1.0 / self.pixels_per_meter();
        (-self.half_window + (col as f64 + 0.5) * s, -self.half_window + (row as f64 + 0.5) * s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LightKind {
    AmbientOnly,
    AmbientPlusPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightSpec {
    pub position: [f64; 3],
    pub kind: LightKind,
}

impl LightSpec {
    pub fn for_scenario(scenario: &Scenario) -> Self {
        let kind = match scenario.surface.kind() {
            SurfaceKind::Heightfield => LightKind::AmbientPlusPoint,
            _ => LightKind::AmbientOnly,
        };
        Self { position: scenario.light, kind }
    }
}

/// Pixel coordinates of a world point; `z` is ignored.
pub fn screen_project(position: Vec3, camera: &Camera) -> [f64; 2] {
    let k = camera.pixels_per_meter();
    [(position.x + camera.half_window) * k, (position.y + camera.half_window) * k]
}

pub fn render_frame(
    surface: &SurfaceModel,
    balls: &[BallState],
    light: &LightSpec,
    camera: &Camera,
    ball_textured: bool,
) -> Image {
    let n = camera.image_size;
    let mut img = Image::new(n, n);
    for row in 0..n {
        for col in 0..n {
            let (x, y) = camera.pixel_center(col, row);
            let rgb = shade_pixel(surface, balls, light, ball_textured, x, y);
            img.set(col, row, rgb);
        }
    }
    img
}

/// Renders frame `balls` of a scenario with its own camera and light.
pub fn render_scenario_frame(scenario: &Scenario, balls: &[BallState], image_size: usize) -> Image {
    render_frame(
        &scenario.surface,
        balls,
        &LightSpec::for_scenario(scenario),
        &Camera::for_surface(&scenario.surface, image_size),
        scenario.textured,
    )
}

fn shade_pixel(surface: &SurfaceModel, balls: &[BallState], light: &LightSpec, textured: bool, x: f64, y: f64) -> [f64; 3] {
    let mut best: Option<(f64, usize)> = None;
    for (i, b) in balls.iter().enumerate() {
        let d2 = (x - b.position.x).powi(2) + (y - b.position.y).powi(2);
        let r2 = b.radius * b.radius;
        if d2 <= r2 {
            let z = b.position.z + (r2 - d2).sqrt();
            if best.is_none_or(|(bz, _)| z > bz) {
                best = Some((z, i));
            }
        }
    }
    let terrain = if surface.in_footprint(x, y) { surface.height(x, y) } else { None };
    match (best, terrain) {
        (Some((z, i)), t) if t.is_none_or(|tz| z >= tz) => shade_ball(&balls[i], balls.len(), textured, x, y, z),
        (_, Some(tz)) => shade_terrain(surface, light, x, y, tz),
        _ => BACKGROUND,
    }
}

fn shade_ball(ball: &BallState, count: usize, textured: bool, x: f64, y: f64, z: f64) -> [f64; 3] {
    let normal = (Vec3::new(x, y, z) - ball.position) / ball.radius;
    let base = if textured {
        let body = ball.orientation.inverse_transform_vector(&normal);
        let idx = (body.x > 0.0) as usize | ((body.y > 0.0) as usize) << 1 | ((body.z > 0.0) as usize) << 2;
        OCTANT_PALETTE[idx]
    } else if count == 1 {
        PLAIN_WHITE
    } else {
        BALL_COLORS[ball.color_index as usize % BALL_COLORS.len()]
    };
    // headlight from the camera direction
    let k = AMBIENT + (1.0 - AMBIENT) * normal.z.clamp(0.0, 1.0);
    base.map(|c| c * k)
}

fn shade_terrain(surface: &SurfaceModel, light: &LightSpec, x: f64, y: f64, z: f64) -> [f64; 3] {
    match surface.kind() {
        SurfaceKind::Heightfield | SurfaceKind::Flat if light.kind == LightKind::AmbientPlusPoint => {
            let n = surface.normal_at(x, y).unwrap_or_else(Vec3::z);
            let to_light = (Vec3::from(light.position) - Vec3::new(x, y, z)).normalize();
            let k = (AMBIENT + n.dot(&to_light).max(0.0)).min(1.0);
            TERRAIN_ALBEDO.map(|c| c * k)
        }
        _ => {
            let spec = surface.spec();
            let (s, c) = (-spec.z_rotation).sin_cos();
            let lx = c * x - s * y;
            let ly = s * x + c * y;
            let cell = |v: f64| (v * CHECKER_CELLS_PER_METER).floor() as i64;
            let parity = (cell(lx) + cell(ly) + cell(z)).rem_euclid(2);
            if parity == 0 {
                CHECKER_LIGHT
            } else {
                CHECKER_DARK
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_endpoints() {
        let cam = Camera::new(64, 1.0);
        assert_eq!(screen_project(Vec3::zeros(), &cam), [32.0, 32.0]);
        assert_eq!(screen_project(Vec3::new(-1.0, -1.0, 0.3), &cam), [0.0, 0.0]);
        assert_eq!(cam.pixel_center(0, 0), (-1.0 + 1.0 / 64.0, -1.0 + 1.0 / 64.0));
    }
}
