//! Equal-mass ball-ball impulses and elastic box walls.

use super::BallState;

/// Extra gap left when separating overlapping pairs.
const SEPARATION_MARGIN: f64 = 1e-12;

pub fn resolve_collisions(balls: &mut [BallState], restitution: f64, wall_box: Option<f64>) {
    let n = balls.len();
    for i in 0..n {
        for j in i + 1..n {
            impulse(balls, i, j, restitution);
        }
    }
    // Separation can create new overlaps with a third ball.
    for _ in 0..16 {
        let mut moved = false;
        for i in 0..n {
            for j in i + 1..n {
                moved |= separate(balls, i, j);
            }
        }
        if !moved {
            break;
        }
    }
    if let Some(w) = wall_box {
        for b in balls.iter_mut() {
            for axis in 0..2 {
                let lim = w - b.radius;
                if b.position[axis] > lim {
                    b.position[axis] = lim;
                    if b.velocity[axis] > 0.0 {
                        b.velocity[axis] = -b.velocity[axis];
                    }
                } else if b.position[axis] < -lim {
                    b.position[axis] = -lim;
                    if b.velocity[axis] < 0.0 {
                        b.velocity[axis] = -b.velocity[axis];
                    }
                }
            }
        }
    }
}

fn contact_normal(balls: &[BallState], i: usize, j: usize) -> Option<(nalgebra::Vector3<f64>, f64)> {
    let d = balls[j].position - balls[i].position;
    let dist = d.norm();
    let reach = balls[i].radius + balls[j].radius;
    if dist >= reach {
        return None;
    }
    let normal = if dist > 0.0 { d / dist } else { nalgebra::Vector3::x() };
    Some((normal, reach - dist))
}

fn impulse(balls: &mut [BallState], i: usize, j: usize, restitution: f64) {
    let Some((normal, _)) = contact_normal(balls, i, j) else { return };
    let approach = (balls[j].velocity - balls[i].velocity).dot(&normal);
    if approach >= 0.0 {
        return;
    }
    let delta = 0.5 * (1.0 + restitution) * approach;
    balls[i].velocity += normal * delta;
    balls[j].velocity -= normal * delta;
}

fn separate(balls: &mut [BallState], i: usize, j: usize) -> bool {
    let Some((normal, overlap)) = contact_normal(balls, i, j) else { return false };
    let shift = normal * (0.5 * overlap + SEPARATION_MARGIN);
    balls[i].position -= shift;
    balls[j].position += shift;
    true
}
