//! Scripted agents: still, random, chase and goto-ball-goal.
//!
//! Each policy maps the world and one robot to an [`AgentAction`]. Policies
//! are stateful only through their own random stream, reseeded per episode.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::{goto_controller, AgentAction, ControllerGains, HighLevelAction};
use crate::physics::{normalize_angle, PhysicsParams, Pose2D, RobotState, Vec2, WheelCommand, WorldState};
use crate::rng::{seeded, SimRng};

/// Read-only knobs shared by all scripted policies.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub params: &'a PhysicsParams,
    pub gains: &'a ControllerGains,
    pub dt: f64,
}

pub trait Policy: Send {
    fn act(&mut self, world: &WorldState, robot: &RobotState, ctx: &PolicyContext) -> AgentAction;

    /// Called at every episode start.
    fn reset(&mut self, _seed: u64) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Still,
    Random,
    Chase,
    GotoBallGoal,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [Self::Still, Self::Random, Self::Chase, Self::GotoBallGoal];

    pub fn name(self) -> &'static str {
        match self {
            Self::Still => "still",
            Self::Random => "random",
            Self::Chase => "chase",
            Self::GotoBallGoal => "goto-ball-goal",
        }
    }

    pub fn build(self) -> Box<dyn Policy> {
        match self {
            Self::Still => Box::new(StillPolicy),
            Self::Random => Box::new(RandomPolicy::new(0)),
            Self::Chase => Box::new(ChasePolicy),
            Self::GotoBallGoal => Box::new(GotoBallGoalPolicy::default()),
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown agent `{0}` (expected still, random, chase or goto-ball-goal)")]
pub struct UnknownAgent(pub String);

impl FromStr for AgentKind {
    type Err = UnknownAgent;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownAgent(s.to_string()))
    }
}

/// Always commands zero wheel speed.
#[derive(Debug, Clone, Copy, Default)]
pub struct StillPolicy;

impl Policy for StillPolicy {
    fn act(&mut self, _: &WorldState, _: &RobotState, _: &PolicyContext) -> AgentAction {
        AgentAction::Wheels(WheelCommand::ZERO)
    }
}

/// Uniform random wheel commands, redrawn every `hold` control steps.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: SimRng,
    hold: u32,
    left: u32,
    current: WheelCommand,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: seeded(seed), hold: 5, left: 0, current: WheelCommand::ZERO }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _: &WorldState, _: &RobotState, _: &PolicyContext) -> AgentAction {
        if self.left == 0 {
            self.current = WheelCommand::new(self.rng.random_range(-100.0..=100.0), self.rng.random_range(-100.0..=100.0));
            self.left = self.hold;
        }
        self.left -= 1;
        AgentAction::Wheels(self.current)
    }

    fn reset(&mut self, seed: u64) {
        *self = Self::new(seed);
    }
}

fn attack_goal(params: &PhysicsParams, robot: &RobotState) -> Vec2 {
    params.field.adversary_goal_center(robot.team)
}

/// Runs straight at the ball, aiming slightly through it toward the goal it attacks.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChasePolicy;

impl Policy for ChasePolicy {
    fn act(&mut self, world: &WorldState, robot: &RobotState, ctx: &PolicyContext) -> AgentAction {
        let ball = world.ball.position;
        let to_goal = attack_goal(ctx.params, robot) - ball;
        let u = to_goal.scale(1.0 / to_goal.norm().max(1e-9));
        let target = ball + u.scale(10.0);
        AgentAction::Continuous(goto_controller(robot.pose, target, ctx.gains, &ctx.params.robot))
    }
}

/// Frees a ball wedged in a corner: bump it into the corner, then back off
/// for a few steps so it rebounds into play.
#[derive(Debug, Clone, Copy)]
pub struct CornerEscape {
    /// Control steps spent reversing after a corner bump.
    pub steps: u32,
    left: u32,
}

impl Default for CornerEscape {
    fn default() -> Self {
        Self { steps: 12, left: 0 }
    }
}

impl CornerEscape {
    /// `Some` while the escape manoeuvre is in charge.
    pub fn act(&mut self, world: &WorldState, robot: &RobotState, ctx: &PolicyContext) -> Option<AgentAction> {
        let params = ctx.params;
        let away = robot.position() - world.ball.position;
        if self.left > 0 {
            self.left -= 1;
            let dir = if robot.pose.heading().dot(away) >= 0.0 { 1.0 } else { -1.0 };
            return Some(AgentAction::Continuous(HighLevelAction::new(dir * 0.6 * params.robot.v_max, 0.0)));
        }
        if ball_cornered(world, params, 4.0) {
            if away.norm() < params.robot.body_radius + world.ball.radius + 1.0 {
                self.left = self.steps;
            }
            return Some(AgentAction::Continuous(steer(robot.pose, world.ball.position, ctx)));
        }
        None
    }
}

/// Drives onto the ball-goal line behind the ball, then pushes through.
///
/// Behind the ball the robot pursues a point on that line a fixed lookahead
/// ahead of itself, so it arrives aligned with the push direction. In front
/// of the ball it first detours to a flank point so that it does not knock
/// the ball toward its own goal.
///
/// A ball wedged in a corner is handled by [`CornerEscape`].
#[derive(Debug, Clone, Copy)]
pub struct GotoBallGoalPolicy {
    /// Distance of the staging point behind the ball centre (cm).
    pub standoff: f64,
    /// Pure-pursuit lookahead along the ball-goal line (cm).
    pub lookahead: f64,
    /// How far beyond the ball the push target lies (cm).
    pub push_through: f64,
    pub escape: CornerEscape,
}

impl Default for GotoBallGoalPolicy {
    fn default() -> Self {
        Self { standoff: 12.0, lookahead: 20.0, push_through: 25.0, escape: CornerEscape::default() }
    }
}

/// True when the ball sits within `slack` of both an end wall and a side wall.
fn ball_cornered(world: &WorldState, params: &PhysicsParams, slack: f64) -> bool {
    let f = &params.field;
    let b = world.ball.position;
    let r = world.ball.radius;
    b.x.abs() > f.play_half_length - r - slack && b.y.abs() > f.half_width - r - slack && b.y.abs() > f.goal_half_width
}

impl GotoBallGoalPolicy {
    /// Point the robot should currently drive toward.
    pub fn target(&self, world: &WorldState, robot: &RobotState, params: &PhysicsParams) -> Vec2 {
        let field = &params.field;
        let ball = world.ball.position;
        let goal = attack_goal(params, robot);
        let radius = params.robot.body_radius;
        let half_mouth = 0.7 * field.goal_half_width;
        let aim = Vec2::new(goal.x, ball.y.clamp(-half_mouth, half_mouth));
        let to_goal = aim - ball;
        let u0 = to_goal.scale(1.0 / to_goal.norm().max(1e-9));
        // Staging point pulled inside the field; the push direction follows it.
        let reach = self.standoff + 25.0;
        let staging = clamp_into_field(ball - u0.scale(reach), params, radius);
        let approach = ball - staging;
        let u = if approach.norm() > 1e-6 { approach.scale(1.0 / approach.norm()) } else { u0 };
        let rel = robot.position() - ball;
        let behind = -rel.dot(u);
        let lateral = rel.dot(u.perp());
        let margin = radius + world.ball.radius;
        let capture = 0.75 * margin;

        // 0 on the push line, 1 well off it.
        let offline = ((lateral.abs() - 0.5 * capture) / capture).clamp(0.0, 1.0);
        let floor = offline * (self.standoff + 1.5 * lateral.abs()).min(reach) - (1.0 - offline) * self.push_through;
        let target = if behind < -0.5 * margin {
            let side = if lateral >= 0.0 { 1.0 } else { -1.0 };
            ball + u.perp().scale(side * (margin + 6.0)) - u.scale(0.5 * self.standoff)
        } else {
            ball - u.scale((behind - self.lookahead).max(floor))
        };
        clamp_into_field(target, params, radius)
    }
}

fn clamp_into_field(p: Vec2, params: &PhysicsParams, radius: f64) -> Vec2 {
    let f = &params.field;
    let lim_y = f.half_width - radius;
    let lim_x = if p.y.abs() < f.goal_half_width - radius { f.half_extent_x() - radius } else { f.play_half_length - radius };
    Vec2::new(p.x.clamp(-lim_x, lim_x), p.y.clamp(-lim_y, lim_y))
}

/// Go-to-point with the forward speed further scaled by heading alignment,
/// so the robot turns toward the target before accelerating.
fn steer(pose: Pose2D, target: Vec2, ctx: &PolicyContext) -> HighLevelAction {
    let mut a = goto_controller(pose, target, ctx.gains, &ctx.params.robot);
    let err = normalize_angle((target - pose.position()).angle() - pose.theta);
    let err_eff = if err.abs() > FRAC_PI_2 { normalize_angle(err + PI) } else { err };
    a.v *= libm::cos(err_eff).max(0.0);
    a
}

impl Policy for GotoBallGoalPolicy {
    fn act(&mut self, world: &WorldState, robot: &RobotState, ctx: &PolicyContext) -> AgentAction {
        if let Some(a) = self.escape.act(world, robot, ctx) {
            return a;
        }
        let target = self.target(world, robot, ctx.params);
        AgentAction::Continuous(steer(robot.pose, target, ctx))
    }

    fn reset(&mut self, _seed: u64) {
        self.escape.left = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{Pose2D, Team};

    #[test]
    fn agent_names_roundtrip() {
        for k in AgentKind::ALL {
            assert_eq!(k.name().parse::<AgentKind>().unwrap(), k);
        }
        assert!("dqn".parse::<AgentKind>().is_err());
    }

    #[test]
    fn random_policy_reseeds() {
        let params = PhysicsParams::default();
        let gains = ControllerGains::default();
        let ctx = PolicyContext { params: &params, gains: &gains, dt: 1.0 / 30.0 };
        let world = WorldState::new(&params);
        let robot = RobotState::new(0, Team::Blue, Pose2D::default());
        let mut p = RandomPolicy::new(3);
        let a: Vec<_> = (0..20).map(|_| p.act(&world, &robot, &ctx)).collect();
        p.reset(3);
        let b: Vec<_> = (0..20).map(|_| p.act(&world, &robot, &ctx)).collect();
        assert_eq!(a, b);
        assert_eq!(a[0], a[4]);
    }

    #[test]
    fn staging_point_is_behind_ball() {
        let params = PhysicsParams::default();
        let mut world = WorldState::new(&params);
        world.ball.position = Vec2::new(0.0, 0.0);
        let robot = RobotState::new(0, Team::Blue, Pose2D::new(-40.0, 0.0, 0.0));
        let t = GotoBallGoalPolicy::default().target(&world, &robot, &params);
        assert!(t.x < 0.0 && t.y.abs() < 1e-9);
        let ahead = RobotState::new(0, Team::Blue, Pose2D::new(30.0, 0.0, 0.0));
        let t = GotoBallGoalPolicy::default().target(&world, &ahead, &params);
        assert!(t.y.abs() > 5.0, "flank point expected, got {t:?}");
    }
}
