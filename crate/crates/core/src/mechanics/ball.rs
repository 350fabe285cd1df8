use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use super::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub angular_velocity: Vec3,
    pub radius: f64,
    pub color_index: u8,
    pub orientation: UnitQuaternion<f64>,
}

impl BallState {
    pub fn at_rest(position: Vec3, radius: f64) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            radius,
            color_index: 0,
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    /// Roll, pitch, yaw of the orientation.
    pub fn euler_orientation(&self) -> [f64; 3] {
        let (r, p, y) = self.orientation.euler_angles();
        [r, p, y]
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).chain(self.angular_velocity.iter()).all(|v| v.is_finite())
    }

    /// Mechanical energy per unit mass of a solid sphere: translational,
    /// rotational and potential terms.
    pub fn energy(&self, gravity: f64) -> f64 {
        0.5 * self.velocity.norm_squared()
            + 0.2 * self.radius * self.radius * self.angular_velocity.norm_squared()
            + gravity * self.position.z
    }
}
