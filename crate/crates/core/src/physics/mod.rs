//! Deterministic fixed-timestep 2D world for small differential-drive soccer robots.
//!
//! Units are centimetres, seconds, grams and radians throughout. Trigonometry and
//! exponentials go through `libm` so successor states are bit-identical across
//! platforms for identical inputs.

mod collision;
mod kinematics;
mod world;

pub use collision::{resolve_collisions, wall_segments, WallSegment};
pub use kinematics::{diff_drive_update, forward_kinematics, inverse_kinematics, motor_step};
pub use world::{step_world, BallState, RobotState, Score, Team, WheelCommand, WorldState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhysicsError {
    #[error("expected {expected} wheel commands (one per robot), got {got}")]
    CommandCount { expected: usize, got: usize },
    #[error("invalid physics parameter: {0}")]
    InvalidParameter(String),
}

/// Minimal 2D vector used by the world and the controllers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    /// Unit vector with heading `angle`.
    pub fn from_angle(angle: f64) -> Vec2 {
        Vec2::new(libm::cos(angle), libm::sin(angle))
    }

    pub fn angle(self) -> f64 {
        libm::atan2(self.y, self.x)
    }

    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl std::ops::AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl std::ops::SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    if !angle.is_finite() {
        return angle;
    }
    let mut a = libm::remainder(angle, TAU);
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Planar pose: position in cm, heading in rad.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_angle(theta) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }
}

/// World-frame linear velocity (cm/s) and angular velocity (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist2D {
    pub vx: f64,
    pub vy: f64,
    pub omega: f64,
}

impl Twist2D {
    pub fn linear(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }
}

/// Arena geometry. The playing rectangle spans `[-play_half_length, play_half_length]`
/// by `[-half_width, half_width]`; a goal pocket `pocket_depth` deep and
/// `2 * goal_half_width` wide opens behind each end wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldSpec {
    pub play_half_length: f64,
    pub pocket_depth: f64,
    pub half_width: f64,
    pub goal_half_width: f64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self { play_half_length: 75.0, pocket_depth: 10.0, half_width: 65.0, goal_half_width: 20.0 }
    }
}

impl FieldSpec {
    /// Half of the total x extent, goal pockets included.
    pub fn half_extent_x(&self) -> f64 {
        self.play_half_length + self.pocket_depth
    }

    /// Distance between the two goal centres; also the potential normaliser.
    pub fn normalization_length(&self) -> f64 {
        2.0 * self.half_extent_x()
    }

    /// Centre of the goal defended by `team`.
    pub fn own_goal_center(&self, team: Team) -> Vec2 {
        match team {
            Team::Blue => Vec2::new(-self.half_extent_x(), 0.0),
            Team::Yellow => Vec2::new(self.half_extent_x(), 0.0),
        }
    }

    /// Centre of the goal attacked by `team`.
    pub fn adversary_goal_center(&self, team: Team) -> Vec2 {
        self.own_goal_center(team.opponent())
    }

    pub fn diagonal(&self) -> f64 {
        libm::hypot(2.0 * self.half_extent_x(), 2.0 * self.half_width)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        let all_positive = [self.play_half_length, self.pocket_depth, self.half_width, self.goal_half_width]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(PhysicsError::InvalidParameter("field dimensions must be positive".into()));
        }
        if self.goal_half_width >= self.half_width {
            return Err(PhysicsError::InvalidParameter("goal_half_width must be below half_width".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotSpec {
    /// Collision disc radius (cm).
    pub body_radius: f64,
    /// Distance between the wheels (cm).
    pub axle_length: f64,
    pub wheel_radius: f64,
    /// Mass in grams.
    pub mass: f64,
    /// Wheel surface speed at command 100 (cm/s).
    pub v_max: f64,
    /// First-order actuator time constant (s).
    pub motor_time_constant: f64,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            body_radius: 5.3,
            axle_length: 7.5,
            wheel_radius: 2.6,
            mass: 150.0,
            v_max: 150.0,
            motor_time_constant: 0.05,
        }
    }
}

impl RobotSpec {
    /// Largest reachable angular speed (both wheels saturated in opposite directions).
    pub fn omega_max(&self) -> f64 {
        2.0 * self.v_max / self.axle_length
    }

    /// Moment of inertia used for kinetic-energy bookkeeping.
    pub fn inertia(&self) -> f64 {
        self.mass * (self.axle_length / 2.0).powi(2)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        let values = [
            self.body_radius,
            self.axle_length,
            self.wheel_radius,
            self.mass,
            self.v_max,
            self.motor_time_constant,
        ];
        if !values.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(PhysicsError::InvalidParameter("robot spec values must be positive".into()));
        }
        if self.body_radius < self.axle_length / 2.0 {
            return Err(PhysicsError::InvalidParameter("body_radius must cover half the axle".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BallSpec {
    pub radius: f64,
    pub mass: f64,
    /// Rolling-friction deceleration (cm/s^2).
    pub rolling_deceleration: f64,
}

impl Default for BallSpec {
    fn default() -> Self {
        Self { radius: 2.135, mass: 46.0, rolling_deceleration: 25.0 }
    }
}

/// Everything the integrator needs besides the state itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsParams {
    pub field: FieldSpec,
    pub robot: RobotSpec,
    pub ball: BallSpec,
    pub wall_restitution: f64,
    pub robot_ball_restitution: f64,
    /// Physics substeps per control period.
    pub substeps: u32,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            field: FieldSpec::default(),
            robot: RobotSpec::default(),
            ball: BallSpec::default(),
            wall_restitution: 0.75,
            robot_ball_restitution: 0.5,
            substeps: 10,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        self.field.validate()?;
        self.robot.validate()?;
        if !(self.ball.radius > 0.0 && self.ball.mass > 0.0 && self.ball.rolling_deceleration >= 0.0) {
            return Err(PhysicsError::InvalidParameter("ball spec out of range".into()));
        }
        for e in [self.wall_restitution, self.robot_ball_restitution] {
            if !(0.0..=1.0).contains(&e) {
                return Err(PhysicsError::InvalidParameter("restitution must lie in [0, 1]".into()));
            }
        }
        if self.substeps == 0 {
            return Err(PhysicsError::InvalidParameter("substeps must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn normalize_angle_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(0.5 + 4.0 * PI) - 0.5).abs() < 1e-12);
        assert!((normalize_angle(-0.5 - 6.0 * PI) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn field_invariants() {
        let f = FieldSpec::default();
        assert_eq!(2.0 * (f.play_half_length + f.pocket_depth), 170.0);
        let d = f.own_goal_center(Team::Blue).distance(f.adversary_goal_center(Team::Blue));
        assert_eq!(d, f.normalization_length());
        assert!(f.goal_half_width < f.half_width);
        f.validate().unwrap();
    }

    #[test]
    fn robot_spec_validation() {
        RobotSpec::default().validate().unwrap();
        let bad = RobotSpec { body_radius: 3.0, ..RobotSpec::default() };
        assert!(bad.validate().is_err());
        let bad = RobotSpec { mass: 0.0, ..RobotSpec::default() };
        assert!(bad.validate().is_err());
    }
}
