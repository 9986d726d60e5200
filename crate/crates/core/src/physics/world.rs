use serde::{Deserialize, Serialize};

use super::collision::resolve_collisions;
use super::kinematics::{diff_drive_update, forward_kinematics, motor_step};
use super::{PhysicsError, PhysicsParams, Pose2D, Twist2D, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Blue,
    Yellow,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Blue => Team::Yellow,
            Team::Yellow => Team::Blue,
        }
    }

    /// +1 for the team attacking +x (blue), -1 otherwise.
    pub fn attack_sign(self) -> f64 {
        match self {
            Team::Blue => 1.0,
            Team::Yellow => -1.0,
        }
    }

    pub fn wire_id(self) -> u8 {
        match self {
            Team::Blue => 0,
            Team::Yellow => 1,
        }
    }

    pub fn from_wire_id(id: u8) -> Option<Team> {
        match id {
            0 => Some(Team::Blue),
            1 => Some(Team::Yellow),
            _ => None,
        }
    }
}

impl std::fmt::Display for Team {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Team::Blue => "blue",
            Team::Yellow => "yellow",
        })
    }
}

/// Per-wheel command in `[-100, 100]`; 100 is full forward wheel speed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelCommand {
    pub left: f64,
    pub right: f64,
}

impl WheelCommand {
    pub const ZERO: WheelCommand = WheelCommand { left: 0.0, right: 0.0 };

    /// Clamps both channels into `[-100, 100]`; non-finite values become 0.
    pub fn new(left: f64, right: f64) -> Self {
        let clean = |v: f64| if v.is_finite() { v.clamp(-100.0, 100.0) } else { 0.0 };
        Self { left: clean(left), right: clean(right) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: u8,
    pub team: Team,
    pub pose: Pose2D,
    pub twist: Twist2D,
    /// Actual wheel surface speeds (cm/s).
    pub wheel_left: f64,
    pub wheel_right: f64,
}

impl RobotState {
    pub fn new(id: u8, team: Team, pose: Pose2D) -> Self {
        Self { id, team, pose, twist: Twist2D::default(), wheel_left: 0.0, wheel_right: 0.0 }
    }

    pub fn position(&self) -> Vec2 {
        self.pose.position()
    }

    pub fn set_position(&mut self, p: Vec2) {
        self.pose.x = p.x;
        self.pose.y = p.y;
    }

    /// Signed speed along the heading.
    pub fn forward_speed(&self) -> f64 {
        (self.wheel_left + self.wheel_right) / 2.0
    }

    /// Re-derive the world-frame twist from wheel speeds and heading.
    pub fn refresh_twist(&mut self, axle_length: f64) {
        let (v, omega) = forward_kinematics(self.wheel_left, self.wheel_right, axle_length);
        let h = self.pose.heading();
        self.twist = Twist2D { vx: v * h.x, vy: v * h.y, omega };
    }

    /// Apply a change of forward speed to both wheels, then saturate.
    pub(crate) fn add_forward_speed(&mut self, delta: f64, v_max: f64, axle_length: f64) {
        self.wheel_left = (self.wheel_left + delta).clamp(-v_max, v_max);
        self.wheel_right = (self.wheel_right + delta).clamp(-v_max, v_max);
        self.refresh_twist(axle_length);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Score {
    pub blue: i32,
    pub yellow: i32,
}

impl Score {
    pub fn credit(&mut self, team: Team) {
        match team {
            Team::Blue => self.blue += 1,
            Team::Yellow => self.yellow += 1,
        }
    }
}

/// Full simulation truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub blue: Vec<RobotState>,
    pub yellow: Vec<RobotState>,
    pub ball: BallState,
    /// Simulated seconds; always `frame * control_dt`.
    pub elapsed: f64,
    pub frame: u64,
    pub score: Score,
}

impl WorldState {
    /// Empty world with the ball at rest in the centre.
    pub fn new(params: &PhysicsParams) -> Self {
        Self {
            blue: Vec::new(),
            yellow: Vec::new(),
            ball: BallState { position: Vec2::ZERO, velocity: Vec2::ZERO, radius: params.ball.radius },
            elapsed: 0.0,
            frame: 0,
            score: Score::default(),
        }
    }

    pub fn robot_count(&self) -> usize {
        self.blue.len() + self.yellow.len()
    }

    /// Robots in canonical order: blue ascending id, then yellow ascending id.
    pub fn robots(&self) -> impl Iterator<Item = &RobotState> {
        self.blue.iter().chain(self.yellow.iter())
    }

    pub fn robots_mut(&mut self) -> impl Iterator<Item = &mut RobotState> {
        self.blue.iter_mut().chain(self.yellow.iter_mut())
    }

    pub fn team(&self, team: Team) -> &[RobotState] {
        match team {
            Team::Blue => &self.blue,
            Team::Yellow => &self.yellow,
        }
    }

    pub fn team_mut(&mut self, team: Team) -> &mut Vec<RobotState> {
        match team {
            Team::Blue => &mut self.blue,
            Team::Yellow => &mut self.yellow,
        }
    }

    pub fn robot(&self, team: Team, id: u8) -> Option<&RobotState> {
        self.team(team).iter().find(|r| r.id == id)
    }

    /// Canonical index of a robot in command lists, if present.
    pub fn robot_index(&self, team: Team, id: u8) -> Option<usize> {
        let pos = self.team(team).iter().position(|r| r.id == id)?;
        Some(match team {
            Team::Blue => pos,
            Team::Yellow => self.blue.len() + pos,
        })
    }

    /// Sort both teams by id so canonical ordering holds.
    pub fn sort_robots(&mut self) {
        self.blue.sort_by_key(|r| r.id);
        self.yellow.sort_by_key(|r| r.id);
    }

    /// Translational plus rotational kinetic energy (g cm^2 / s^2).
    pub fn kinetic_energy(&self, params: &PhysicsParams) -> f64 {
        let robots: f64 = self
            .robots()
            .map(|r| {
                0.5 * params.robot.mass * r.twist.linear().norm_sq()
                    + 0.5 * params.robot.inertia() * r.twist.omega * r.twist.omega
            })
            .sum();
        robots + 0.5 * params.ball.mass * self.ball.velocity.norm_sq()
    }

    /// Advance one control period of length `dt` in place.
    pub fn step(&mut self, commands: &[WheelCommand], dt: f64, params: &PhysicsParams) -> Result<(), PhysicsError> {
        if commands.len() != self.robot_count() {
            return Err(PhysicsError::CommandCount { expected: self.robot_count(), got: commands.len() });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(PhysicsError::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let substeps = params.substeps.max(1);
        let h = dt / substeps as f64;
        let robot = &params.robot;
        for _ in 0..substeps {
            for (r, cmd) in self.robots_mut().zip(commands) {
                r.wheel_left = motor_step(r.wheel_left, cmd.left, robot, h);
                r.wheel_right = motor_step(r.wheel_right, cmd.right, robot, h);
                r.pose = diff_drive_update(r.pose, r.wheel_left, r.wheel_right, robot.axle_length, h);
                r.refresh_twist(robot.axle_length);
            }
            integrate_ball(&mut self.ball, params.ball.rolling_deceleration, h);
            resolve_collisions(self, params);
        }
        self.frame += 1;
        self.elapsed = self.frame as f64 * dt;
        Ok(())
    }
}

/// Uniform rolling deceleration; position uses the exact average velocity.
fn integrate_ball(ball: &mut super::BallState, decel: f64, h: f64) {
    let speed = ball.velocity.norm();
    if speed == 0.0 {
        return;
    }
    let new_speed = (speed - decel * h).max(0.0);
    let new_velocity = ball.velocity.scale(new_speed / speed);
    if new_speed > 0.0 {
        ball.position += (ball.velocity + new_velocity).scale(0.5 * h);
    } else {
        // Stops inside this substep.
        let t_stop = speed / decel;
        ball.position += ball.velocity.scale(0.5 * t_stop);
    }
    ball.velocity = new_velocity;
}

/// Value-semantics wrapper around [`WorldState::step`].
pub fn step_world(
    world: &WorldState,
    commands: &[WheelCommand],
    dt: f64,
    params: &PhysicsParams,
) -> Result<WorldState, PhysicsError> {
    let mut next = world.clone();
    next.step(commands, dt, params)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 1.0 / 30.0;

    fn one_robot_world(pose: Pose2D) -> (WorldState, PhysicsParams) {
        let params = PhysicsParams::default();
        let mut w = WorldState::new(&params);
        w.blue.push(RobotState::new(0, Team::Blue, pose));
        (w, params)
    }

    #[test]
    fn wheel_command_clamps() {
        let c = WheelCommand::new(250.0, -101.0);
        assert_eq!((c.left, c.right), (100.0, -100.0));
        let c = WheelCommand::new(f64::NAN, f64::INFINITY);
        assert_eq!((c.left, c.right), (0.0, 0.0));
    }

    #[test]
    fn static_equilibrium() {
        let (w, params) = one_robot_world(Pose2D::new(-20.0, 0.0, 0.0));
        let next = step_world(&w, &[WheelCommand::ZERO], DT, &params).unwrap();
        assert_eq!(next.blue, w.blue);
        assert_eq!(next.ball, w.ball);
        assert_eq!(next.frame, 1);
        assert_eq!(next.elapsed, DT);
    }

    #[test]
    fn rejects_wrong_command_count() {
        let (w, params) = one_robot_world(Pose2D::default());
        let err = step_world(&w, &[], DT, &params).unwrap_err();
        assert_eq!(err, PhysicsError::CommandCount { expected: 1, got: 0 });
    }

    #[test]
    fn robot_stops_at_wall_without_penetration() {
        let (mut w, params) = one_robot_world(Pose2D::new(40.0, 40.0, 0.0));
        let cmd = [WheelCommand::new(100.0, 100.0)];
        for _ in 0..60 {
            w.step(&cmd, DT, &params).unwrap();
        }
        let r = &w.blue[0];
        let limit = params.field.play_half_length - params.robot.body_radius;
        assert!(r.pose.x <= limit + 1e-9, "x = {}", r.pose.x);
        assert!((r.pose.x - limit).abs() < 1e-6);
        assert!(r.twist.vx.abs() < 1e-9, "into-wall speed {}", r.twist.vx);
    }

    #[test]
    fn ball_stops_under_uniform_deceleration() {
        let params = PhysicsParams::default();
        let mut w = WorldState::new(&params);
        w.ball.position = Vec2::new(-40.0, 0.0);
        w.ball.velocity = Vec2::new(50.0, 0.0);
        let h = DT / params.substeps as f64;
        // 2 s is exactly 60 control steps.
        for _ in 0..59 {
            w.step(&[], DT, &params).unwrap();
        }
        assert!(w.ball.velocity.norm() > 0.0);
        assert!(w.ball.velocity.norm() <= 25.0 * (DT + h));
        w.step(&[], DT, &params).unwrap();
        assert!(w.ball.velocity.norm() <= 25.0 * h + 1e-9);
        w.step(&[], DT, &params).unwrap();
        assert_eq!(w.ball.velocity.norm(), 0.0);
        // Stopping distance v^2 / (2 a) = 50 cm.
        assert!((w.ball.position.x - 10.0).abs() < 1e-6);
    }
}
