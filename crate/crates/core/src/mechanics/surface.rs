//! Terrain models: half-ellipsoid bowls, Perlin heightfields and a flat
//! plane used by tests.

use serde::{Deserialize, Serialize};

use super::perlin::ImprovedPerlin;
use super::{MechError, Vec3};

/// Vertical amplitude of heightfield displacement, in meters.
pub const HEIGHTFIELD_AMPLITUDE: f64 = 0.25;
/// Side length of the noise texture the window is cut from.
pub const TEXTURE_SIZE: f64 = 8.0;
/// Side length of the visible heightfield patch.
pub const WINDOW_SIZE: f64 = 2.5;
/// Noise lattice spacing (texture units) per unit of `noise_scale`.
pub const LATTICE_PER_SCALE: f64 = 2.5;
/// Finite-difference step for heightfield normals.
pub const NORMAL_FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    HemisphericalBowl,
    EllipsoidalBowl,
    Heightfield,
    Flat,
}

/// Placement of the visible patch inside the noise texture: the world
/// origin maps to `offset`, world axes are rotated by `rotation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub offset: [f64; 2],
    pub rotation: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { offset: [TEXTURE_SIZE / 2.0; 2], rotation: 0.0 }
    }
}

/// Serialized form of a surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default)]
    pub z_rotation: f64,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default)]
    pub window: Window,
    /// Plane height for [`SurfaceKind::Flat`].
    #[serde(default)]
    pub height: f64,
}

fn one() -> f64 {
    1.0
}

/// Closest-point query result. `normal` is the unit normal pointing to
/// the open side (where balls live); `distance` is signed along it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub point: Vec3,
    pub normal: Vec3,
    pub distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SurfaceSpec", into = "SurfaceSpec")]
pub struct SurfaceModel {
    spec: SurfaceSpec,
    noise: Option<ImprovedPerlin>,
}

impl PartialEq for SurfaceModel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl From<SurfaceModel> for SurfaceSpec {
    fn from(s: SurfaceModel) -> Self {
        s.spec
    }
}

impl TryFrom<SurfaceSpec> for SurfaceModel {
    type Error = MechError;
    fn try_from(spec: SurfaceSpec) -> Result<Self, MechError> {
        match spec.kind {
            SurfaceKind::HemisphericalBowl | SurfaceKind::EllipsoidalBowl => {
                make_bowl(spec.a, spec.z_rotation)
            }
            SurfaceKind::Heightfield => {
                make_heightfield(spec.noise_seed, spec.noise_scale, spec.window)
            }
            SurfaceKind::Flat => Ok(make_flat(spec.height)),
        }
    }
}

/// Bowl `x^2/a^2 + y^2 + (z-1)^2 = 1, z <= 1`, rotated about z.
pub fn make_bowl(a: f64, z_rotation: f64) -> Result<SurfaceModel, MechError> {
    if !(0.5..=1.0).contains(&a) {
        return Err(MechError::BadParameter { what: "bowl axis ratio a", value: a });
    }
    if !z_rotation.is_finite() {
        return Err(MechError::BadParameter { what: "bowl z_rotation", value: z_rotation });
    }
    let kind = if a == 1.0 { SurfaceKind::HemisphericalBowl } else { SurfaceKind::EllipsoidalBowl };
    Ok(SurfaceModel {
        spec: SurfaceSpec {
            kind,
            a,
            z_rotation,
            noise_seed: 0,
            noise_scale: 0.0,
            window: Window::default(),
            height: 0.0,
        },
        noise: None,
    })
}

pub fn make_heightfield(seed: u64, noise_scale: f64, window: Window) -> Result<SurfaceModel, MechError> {
    if !(0.2..=0.7).contains(&noise_scale) {
        return Err(MechError::BadParameter { what: "noise_scale", value: noise_scale });
    }
    Ok(SurfaceModel {
        spec: SurfaceSpec {
            kind: SurfaceKind::Heightfield,
            a: 1.0,
            z_rotation: 0.0,
            noise_seed: seed,
            noise_scale,
            window,
            height: 0.0,
        },
        noise: Some(ImprovedPerlin::new(seed)),
    })
}

pub fn make_flat(height: f64) -> SurfaceModel {
    SurfaceModel {
        spec: SurfaceSpec {
            kind: SurfaceKind::Flat,
            a: 1.0,
            z_rotation: 0.0,
            noise_seed: 0,
            noise_scale: 0.0,
            window: Window::default(),
            height,
        },
        noise: None,
    }
}

fn rot_z(v: Vec3, angle: f64) -> Vec3 {
    if angle == 0.0 {
        return v;
    }
    let (s, c) = angle.sin_cos();
    Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z)
}

impl SurfaceModel {
    pub fn spec(&self) -> &SurfaceSpec {
        &self.spec
    }

    pub fn kind(&self) -> SurfaceKind {
        self.spec.kind
    }

    pub fn is_bowl(&self) -> bool {
        matches!(self.spec.kind, SurfaceKind::HemisphericalBowl | SurfaceKind::EllipsoidalBowl)
    }

    /// Half-width of the square world window seen by the camera.
    pub fn half_extent(&self) -> f64 {
        match self.spec.kind {
            SurfaceKind::Heightfield => WINDOW_SIZE / 2.0,
            _ => 1.0,
        }
    }

    /// Maps world `(x, y)` to noise-texture coordinates.
    pub fn world_to_texture(&self, x: f64, y: f64) -> (f64, f64) {
        let w = &self.spec.window;
        let r = rot_z(Vec3::new(x, y, 0.0), w.rotation);
        (w.offset[0] + r.x, w.offset[1] + r.y)
    }

    /// Inverse of [`Self::world_to_texture`].
    pub fn texture_to_world(&self, u: f64, v: f64) -> (f64, f64) {
        let w = &self.spec.window;
        let r = rot_z(Vec3::new(u - w.offset[0], v - w.offset[1], 0.0), -w.rotation);
        (r.x, r.y)
    }

    /// Heightfield displacement at texture coordinates.
    pub fn texture_height(&self, u: f64, v: f64) -> f64 {
        match &self.noise {
            Some(n) => {
                let spacing = LATTICE_PER_SCALE * self.spec.noise_scale;
                HEIGHTFIELD_AMPLITUDE * n.noise2(u / spacing, v / spacing)
            }
            None => 0.0,
        }
    }

    /// Whether `(x, y)` lies over the surface footprint.
    pub fn in_footprint(&self, x: f64, y: f64) -> bool {
        match self.spec.kind {
            SurfaceKind::HemisphericalBowl | SurfaceKind::EllipsoidalBowl => {
                let l = rot_z(Vec3::new(x, y, 0.0), -self.spec.z_rotation);
                l.x * l.x / (self.spec.a * self.spec.a) + l.y * l.y <= 1.0
            }
            SurfaceKind::Heightfield => {
                let h = self.half_extent();
                x.abs() <= h && y.abs() <= h
            }
            SurfaceKind::Flat => true,
        }
    }

    /// Surface height under `(x, y)`, `None` outside the footprint.
    pub fn height(&self, x: f64, y: f64) -> Option<f64> {
        match self.spec.kind {
            SurfaceKind::HemisphericalBowl | SurfaceKind::EllipsoidalBowl => {
                let l = rot_z(Vec3::new(x, y, 0.0), -self.spec.z_rotation);
                let q = 1.0 - l.x * l.x / (self.spec.a * self.spec.a) - l.y * l.y;
                (q >= 0.0).then(|| 1.0 - q.sqrt())
            }
            SurfaceKind::Heightfield => {
                let (u, v) = self.world_to_texture(x, y);
                Some(self.texture_height(u, v))
            }
            SurfaceKind::Flat => Some(self.spec.height),
        }
    }

    fn hf_gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let h = NORMAL_FD_STEP;
        let f = |x: f64, y: f64| {
            let (u, v) = self.world_to_texture(x, y);
            self.texture_height(u, v)
        };
        ((f(x + h, y) - f(x - h, y)) / (2.0 * h), (f(x, y + h) - f(x, y - h)) / (2.0 * h))
    }

    /// Unit normal (open side) of the surface point above `(x, y)`.
    pub fn normal_at(&self, x: f64, y: f64) -> Option<Vec3> {
        match self.spec.kind {
            SurfaceKind::HemisphericalBowl | SurfaceKind::EllipsoidalBowl => {
                let z = self.height(x, y)?;
                let l = rot_z(Vec3::new(x, y, z), -self.spec.z_rotation);
                Some(rot_z(self.bowl_normal_local(l), self.spec.z_rotation))
            }
            SurfaceKind::Heightfield => {
                let (gx, gy) = self.hf_gradient(x, y);
                Some(Vec3::new(-gx, -gy, 1.0).normalize())
            }
            SurfaceKind::Flat => Some(Vec3::z()),
        }
    }

    fn bowl_normal_local(&self, l: Vec3) -> Vec3 {
        let a2 = self.spec.a * self.spec.a;
        let g = Vec3::new(l.x / a2, l.y, l.z - 1.0);
        let n = g.norm();
        if n == 0.0 {
            Vec3::z()
        } else {
            -g / n
        }
    }

    /// Whether `p` lies on the surface within `tol`.
    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        match self.spec.kind {
            SurfaceKind::HemisphericalBowl | SurfaceKind::EllipsoidalBowl => {
                let l = rot_z(p, -self.spec.z_rotation);
                let f = l.x * l.x / (self.spec.a * self.spec.a) + l.y * l.y + (l.z - 1.0).powi(2) - 1.0;
                l.z <= 1.0 + tol && f.abs() <= tol
            }
            _ => match self.height(p.x, p.y) {
                Some(h) => self.in_footprint(p.x, p.y) && (p.z - h).abs() <= tol,
                None => false,
            },
        }
    }

    /// Closest surface point to `p` and the signed distance to it.
    pub fn closest(&self, p: Vec3) -> Contact {
        match self.spec.kind {
            SurfaceKind::HemisphericalBowl | SurfaceKind::EllipsoidalBowl => self.closest_bowl(p),
            SurfaceKind::Heightfield => self.closest_heightfield(p),
            SurfaceKind::Flat => Contact {
                point: Vec3::new(p.x, p.y, self.spec.height),
                normal: Vec3::z(),
                distance: p.z - self.spec.height,
            },
        }
    }

    fn closest_bowl(&self, p: Vec3) -> Contact {
        let a = self.spec.a;
        let l = rot_z(p, -self.spec.z_rotation);
        let rvec = (l.y, l.z - 1.0);
        let r0 = rvec.0.hypot(rvec.1);
        let local = if a == 1.0 {
            let d = l - Vec3::z();
            let n = d.norm();
            if n == 0.0 {
                Vec3::zeros()
            } else {
                Vec3::z() + d / n
            }
        } else {
            let (x0, x1) = closest_on_ellipse(1.0, a, r0, l.x.abs());
            let dir = if r0 > 0.0 { (rvec.0 / r0, rvec.1 / r0) } else { (0.0, -1.0) };
            Vec3::new(x1.copysign(l.x), dir.0 * x0, 1.0 + dir.1 * x0)
        };
        let normal_l = self.bowl_normal_local(local);
        let f = l.x * l.x / (a * a) + l.y * l.y + (l.z - 1.0).powi(2) - 1.0;
        let dist = (l - local).norm();
        Contact {
            point: rot_z(local, self.spec.z_rotation),
            normal: rot_z(normal_l, self.spec.z_rotation),
            distance: if f <= 0.0 { dist } else { -dist },
        }
    }

    fn closest_heightfield(&self, p: Vec3) -> Contact {
        let (mut x, mut y) = (p.x, p.y);
        let surf = |x: f64, y: f64| {
            let (u, v) = self.world_to_texture(x, y);
            self.texture_height(u, v)
        };
        for _ in 0..60 {
            let h = surf(x, y);
            let (hx, hy) = self.hf_gradient(x, y);
            let r = Vec3::new(x - p.x, y - p.y, h - p.z);
            // Gauss-Newton normal equations for the 3x2 Jacobian [e1+hx e3, e2+hy e3].
            let (j11, j12, j22) = (1.0 + hx * hx, hx * hy, 1.0 + hy * hy);
            let (g1, g2) = (r.x + hx * r.z, r.y + hy * r.z);
            let det = j11 * j22 - j12 * j12;
            let mut dx = -(j22 * g1 - j12 * g2) / det;
            let mut dy = -(j11 * g2 - j12 * g1) / det;
            let len = dx.hypot(dy);
            if len > 0.1 {
                dx *= 0.1 / len;
                dy *= 0.1 / len;
            }
            x += dx;
            y += dy;
            if len < 1e-14 {
                break;
            }
        }
        let point = Vec3::new(x, y, surf(x, y));
        let (gx, gy) = self.hf_gradient(x, y);
        let normal = Vec3::new(-gx, -gy, 1.0).normalize();
        let d = p - point;
        let dist = d.norm();
        Contact { point, normal, distance: if d.dot(&normal) >= 0.0 { dist } else { -dist } }
    }
}

/// Closest point on the ellipse `(x0/e0)^2 + (x1/e1)^2 = 1` to `(y0, y1)`
/// for `e0 >= e1` and a first-quadrant query point, by bisection on the
/// Lagrange parameter.
fn closest_on_ellipse(e0: f64, e1: f64, y0: f64, y1: f64) -> (f64, f64) {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1) * (e0 / e1);
                let s = ellipse_root(r0, z0, z1, g);
                (r0 * y0 / (s + r0), y1 / (s + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, e1)
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xde0 = numer / denom;
            (e0 * xde0, e1 * (1.0 - xde0 * xde0).sqrt())
        } else {
            (e0, 0.0)
        }
    }
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_projection_is_orthogonal() {
        for &(y0, y1) in &[(0.3, 0.2), (0.9, 0.05), (1.5, 0.7), (0.1, 0.45)] {
            let (x0, x1) = closest_on_ellipse(1.0, 0.5, y0, y1);
            assert!(((x0).powi(2) + (x1 / 0.5).powi(2) - 1.0).abs() < 1e-12);
            // residual parallel to the gradient (x0, x1/e1^2)
            let cross = (y0 - x0) * (x1 / 0.25) - (y1 - x1) * x0;
            assert!(cross.abs() < 1e-10, "{cross}");
        }
    }

    #[test]
    fn bowl_rejects_bad_axis() {
        assert!(make_bowl(0.4, 0.0).is_err());
        assert!(make_bowl(1.1, 0.0).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let s = make_heightfield(9, 0.4, Window { offset: [3.0, 4.0], rotation: 0.3 }).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: SurfaceModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back.height(0.1, 0.2), s.height(0.1, 0.2));
    }
}
