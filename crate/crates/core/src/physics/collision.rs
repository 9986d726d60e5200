//! Disc contacts: robot-robot, robot-ball and disc-wall.
//!
//! Walls are one-sided segments with an inward normal, so the goal posts (the
//! segment end points at the goal mouth) act as convex corners while the
//! pockets stay open toward the field.

use super::{FieldSpec, PhysicsParams, Vec2, WorldState};

const POSITION_ITERATIONS: usize = 8;
const CONTACT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSegment {
    pub a: Vec2,
    pub b: Vec2,
    /// Unit normal pointing into the playable region.
    pub normal: Vec2,
}

impl WallSegment {
    fn new(a: Vec2, b: Vec2, normal: Vec2) -> Self {
        Self { a, b, normal }
    }

    /// Contact normal and penetration depth for a disc, if it overlaps.
    pub fn penetration(&self, center: Vec2, radius: f64) -> Option<(Vec2, f64)> {
        let ab = self.b - self.a;
        let t = (center - self.a).dot(ab) / ab.norm_sq();
        if t > 0.0 && t < 1.0 {
            let signed = (center - self.a).dot(self.normal);
            let pen = radius - signed;
            return (pen > CONTACT_EPS).then_some((self.normal, pen));
        }
        let corner = if t <= 0.0 { self.a } else { self.b };
        let d = center - corner;
        let dist = d.norm();
        let pen = radius - dist;
        if pen > CONTACT_EPS && dist > 0.0 {
            Some((d.scale(1.0 / dist), pen))
        } else {
            None
        }
    }
}

/// The arena boundary: side walls, end walls broken by the goal mouths, and pockets.
pub fn wall_segments(field: &FieldSpec) -> Vec<WallSegment> {
    let l = field.play_half_length;
    let w = field.half_width;
    let g = field.goal_half_width;
    let back = field.half_extent_x();
    let mut walls = vec![
        WallSegment::new(Vec2::new(-l, w), Vec2::new(l, w), Vec2::new(0.0, -1.0)),
        WallSegment::new(Vec2::new(-l, -w), Vec2::new(l, -w), Vec2::new(0.0, 1.0)),
    ];
    for side in [1.0, -1.0] {
        let inward = Vec2::new(-side, 0.0);
        walls.push(WallSegment::new(Vec2::new(side * l, g), Vec2::new(side * l, w), inward));
        walls.push(WallSegment::new(Vec2::new(side * l, -w), Vec2::new(side * l, -g), inward));
        walls.push(WallSegment::new(Vec2::new(side * l, g), Vec2::new(side * back, g), Vec2::new(0.0, -1.0)));
        walls.push(WallSegment::new(Vec2::new(side * l, -g), Vec2::new(side * back, -g), Vec2::new(0.0, 1.0)));
        walls.push(WallSegment::new(Vec2::new(side * back, -g), Vec2::new(side * back, g), inward));
    }
    walls
}

/// Separate overlapping bodies and apply contact impulses.
///
/// Robot velocity changes act on the wheels (common mode along the heading);
/// the lateral part is absorbed by the no-slip wheel contact. Robot-ball
/// impulses use the true masses and the robot-ball restitution, robot-robot
/// contacts are inelastic, ball-wall contacts use the wall restitution and
/// robots stall against walls.
pub fn resolve_collisions(world: &mut WorldState, params: &PhysicsParams) {
    let walls = wall_segments(&params.field);
    let robot = params.robot;
    let r_robot = robot.body_radius;
    let r_ball = world.ball.radius;

    for _ in 0..POSITION_ITERATIONS {
        let mut touched = false;

        let n = world.robot_count();
        for i in 0..n {
            for j in (i + 1)..n {
                touched |= robot_robot(world, i, j, params);
            }
        }

        for i in 0..n {
            touched |= robot_ball(world, i, params);
        }

        for r in world.robots_mut() {
            for wall in &walls {
                if let Some((normal, pen)) = wall.penetration(r.position(), r_robot) {
                    touched = true;
                    r.set_position(r.position() + normal.scale(pen));
                    let vn = r.twist.linear().dot(normal);
                    if vn < 0.0 {
                        let delta = normal.scale(-vn).dot(r.pose.heading());
                        r.add_forward_speed(delta, robot.v_max, robot.axle_length);
                    }
                }
            }
        }

        let ball = &mut world.ball;
        for wall in &walls {
            if let Some((normal, pen)) = wall.penetration(ball.position, r_ball) {
                touched = true;
                ball.position += normal.scale(pen);
                let vn = ball.velocity.dot(normal);
                if vn < 0.0 {
                    ball.velocity -= normal.scale((1.0 + params.wall_restitution) * vn);
                }
            }
        }

        if !touched {
            return;
        }
    }

    // A ball pinned against a wall cannot yield; push the robot instead.
    let ball_pos = world.ball.position;
    for r in world.robots_mut() {
        let d = ball_pos - r.position();
        let dist = d.norm();
        let pen = r_robot + r_ball - dist;
        if pen > CONTACT_EPS {
            let normal = if dist > 0.0 { d.scale(1.0 / dist) } else { Vec2::new(1.0, 0.0) };
            r.set_position(r.position() - normal.scale(pen));
        }
        for wall in &walls {
            if let Some((normal, pen)) = wall.penetration(r.position(), r_robot) {
                r.set_position(r.position() + normal.scale(pen));
            }
        }
    }
}

fn robot_mut(world: &mut WorldState, index: usize) -> &mut super::RobotState {
    let nb = world.blue.len();
    if index < nb {
        &mut world.blue[index]
    } else {
        &mut world.yellow[index - nb]
    }
}

fn robot_pair(world: &mut WorldState, i: usize, j: usize) -> (&mut super::RobotState, &mut super::RobotState) {
    debug_assert!(i < j);
    let nb = world.blue.len();
    if j < nb {
        let (lo, hi) = world.blue.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else if i >= nb {
        let (lo, hi) = world.yellow.split_at_mut(j - nb);
        (&mut lo[i - nb], &mut hi[0])
    } else {
        (&mut world.blue[i], &mut world.yellow[j - nb])
    }
}

fn robot_robot(world: &mut WorldState, i: usize, j: usize, params: &PhysicsParams) -> bool {
    let robot = params.robot;
    let (a, b) = robot_pair(world, i, j);
    let d = b.position() - a.position();
    let dist = d.norm();
    let pen = 2.0 * robot.body_radius - dist;
    if pen <= CONTACT_EPS {
        return false;
    }
    let normal = if dist > 0.0 { d.scale(1.0 / dist) } else { Vec2::new(1.0, 0.0) };
    a.set_position(a.position() - normal.scale(pen / 2.0));
    b.set_position(b.position() + normal.scale(pen / 2.0));
    let v_rel = (b.twist.linear() - a.twist.linear()).dot(normal);
    if v_rel < 0.0 {
        // Equal masses, no bounce: each body takes half the closing speed.
        let dv_a = normal.scale(v_rel / 2.0);
        let dv_b = normal.scale(-v_rel / 2.0);
        let fa = dv_a.dot(a.pose.heading());
        let fb = dv_b.dot(b.pose.heading());
        a.add_forward_speed(fa, robot.v_max, robot.axle_length);
        b.add_forward_speed(fb, robot.v_max, robot.axle_length);
    }
    true
}

fn robot_ball(world: &mut WorldState, i: usize, params: &PhysicsParams) -> bool {
    let robot = params.robot;
    let ball_pos = world.ball.position;
    let ball_vel = world.ball.velocity;
    let r_ball = world.ball.radius;
    let r = robot_mut(world, i);
    let d = ball_pos - r.position();
    let dist = d.norm();
    let pen = robot.body_radius + r_ball - dist;
    if pen <= CONTACT_EPS {
        return false;
    }
    let normal = if dist > 0.0 { d.scale(1.0 / dist) } else { Vec2::new(1.0, 0.0) };
    let v_rel = (ball_vel - r.twist.linear()).dot(normal);
    let mut new_ball_vel = ball_vel;
    if v_rel < 0.0 {
        let inv_mass_sum = 1.0 / robot.mass + 1.0 / params.ball.mass;
        let j = -(1.0 + params.robot_ball_restitution) * v_rel / inv_mass_sum;
        new_ball_vel += normal.scale(j / params.ball.mass);
        let dv_robot = normal.scale(-j / robot.mass);
        r.add_forward_speed(dv_robot.dot(r.pose.heading()), robot.v_max, robot.axle_length);
    }
    world.ball.position = ball_pos + normal.scale(pen);
    world.ball.velocity = new_ball_vel;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{Pose2D, RobotState, Team};

    fn world_with(robots: &[(f64, f64, f64)]) -> (WorldState, PhysicsParams) {
        let params = PhysicsParams::default();
        let mut w = WorldState::new(&params);
        for (k, &(x, y, th)) in robots.iter().enumerate() {
            w.blue.push(RobotState::new(k as u8, Team::Blue, Pose2D::new(x, y, th)));
        }
        w.ball.position = Vec2::new(0.0, -40.0);
        (w, params)
    }

    #[test]
    fn tangent_robots_unchanged() {
        let (mut w, params) = world_with(&[(0.0, 0.0, 0.0), (10.6, 0.0, 0.0)]);
        let before = w.clone();
        resolve_collisions(&mut w, &params);
        assert_eq!(w, before);
    }

    #[test]
    fn overlapping_robots_separate() {
        let (mut w, params) = world_with(&[(0.0, 0.0, 0.0), (8.0, 0.0, 0.0)]);
        resolve_collisions(&mut w, &params);
        let d = w.blue[0].position().distance(w.blue[1].position());
        assert!((d - 10.6).abs() < 1e-9);
        assert!((w.blue[0].pose.x + 1.3).abs() < 1e-9);
    }

    #[test]
    fn head_on_ball_impulse_matches_1d_formula() {
        let (mut w, params) = world_with(&[(0.0, 0.0, 0.0)]);
        let u = 80.0;
        w.ball.position = Vec2::new(params.robot.body_radius + params.ball.radius - 0.01, 0.0);
        w.ball.velocity = Vec2::new(-u, 0.0);
        resolve_collisions(&mut w, &params);
        // 1D impulse between a ball at -u and a robot at rest.
        let (mb, mr, e) = (params.ball.mass, params.robot.mass, params.robot_ball_restitution);
        let vb = (mb * -u + mr * e * u) / (mb + mr);
        let vr = (mb * -u - mb * e * u) / (mb + mr);
        assert!((w.ball.velocity.x - vb).abs() < 1e-9, "{} vs {}", w.ball.velocity.x, vb);
        assert!((w.blue[0].twist.vx - vr).abs() < 1e-9);
        let p_before = mb * -u;
        let p_after = mb * w.ball.velocity.x + mr * w.blue[0].twist.vx;
        assert!((p_before - p_after).abs() < 1e-9);
        assert!(w.ball.position.x >= params.robot.body_radius + params.ball.radius - 1e-12);
    }

    #[test]
    fn ball_enters_pocket_only_through_mouth() {
        let params = PhysicsParams::default();
        let mut w = WorldState::new(&params);
        w.ball.position = Vec2::new(70.0, 0.0);
        w.ball.velocity = Vec2::new(100.0, 0.0);
        for _ in 0..6 {
            w.step(&[], 1.0 / 30.0, &params).unwrap();
        }
        assert!(w.ball.position.x > params.field.play_half_length);

        let mut w = WorldState::new(&params);
        w.ball.position = Vec2::new(70.0, 30.0);
        w.ball.velocity = Vec2::new(100.0, 0.0);
        for _ in 0..6 {
            w.step(&[], 1.0 / 30.0, &params).unwrap();
        }
        assert!(w.ball.position.x <= params.field.play_half_length - params.ball.radius + 1e-9);
        assert!(w.ball.velocity.x < 0.0);
    }

    #[test]
    fn wall_reflection_uses_restitution() {
        let params = PhysicsParams::default();
        let mut w = WorldState::new(&params);
        w.ball.position = Vec2::new(0.0, params.field.half_width - params.ball.radius + 0.1);
        w.ball.velocity = Vec2::new(10.0, 40.0);
        resolve_collisions(&mut w, &params);
        assert!((w.ball.velocity.y + 30.0).abs() < 1e-12);
        assert_eq!(w.ball.velocity.x, 10.0);
    }
}
