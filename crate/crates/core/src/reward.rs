//! Shaped per-step reward: goal, move-to-ball, ball-potential gradient and energy.
//!
//! The move and potential terms are discrete time derivatives of a potential
//! (agent-ball distance and the ball potential respectively), so their sum over
//! a trajectory times `dt` telescopes to the end-minus-start potential difference.

use serde::{Deserialize, Serialize};

use crate::physics::{FieldSpec, Team, Vec2, WheelCommand};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardWeights {
    pub goal: f64,
    pub move_to_ball: f64,
    pub potential: f64,
    pub energy: f64,
}

impl RewardWeights {
    /// Weights for agents emitting continuous (v, omega) actions.
    pub const CONTINUOUS: RewardWeights = RewardWeights { goal: 1.0, move_to_ball: 0.02, potential: 0.08, energy: 1e-5 };
    /// Weights for discrete virtual-target agents: no energy term.
    pub const DISCRETE: RewardWeights = RewardWeights { goal: 1.0, move_to_ball: 0.02, potential: 0.08, energy: 0.0 };

    pub fn is_finite(&self) -> bool {
        [self.goal, self.move_to_ball, self.potential, self.energy].iter().all(|w| w.is_finite())
    }
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self::CONTINUOUS
    }
}

/// Raw shaped components before weighting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardComponents {
    pub goal: f64,
    pub move_to_ball: f64,
    pub potential: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_goal: f64,
    pub r_move: f64,
    pub r_potential_grad: f64,
    pub r_energy: f64,
    pub total: f64,
}

/// Rate at which the agent closes distance to the ball (positive when approaching).
pub fn reward_move(agent: Vec2, ball: Vec2, prev_agent: Vec2, prev_ball: Vec2, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    let d_prev = prev_agent.distance(prev_ball);
    let d_now = agent.distance(ball);
    (d_prev - d_now) / dt
}

/// Ball potential for `team` in `[-1, 0]`: -1 at the own goal centre, 0 at the adversary's.
pub fn ball_potential_for(ball: Vec2, field: &FieldSpec, team: Team) -> f64 {
    let d_own = ball.distance(field.own_goal_center(team));
    let d_adv = ball.distance(field.adversary_goal_center(team));
    ((d_own - d_adv) / field.normalization_length() - 1.0) / 2.0
}

/// Ball potential from the blue (left-defending) side.
pub fn ball_potential(ball: Vec2, field: &FieldSpec) -> f64 {
    ball_potential_for(ball, field, Team::Blue)
}

pub fn reward_potential_grad(bp_now: f64, bp_prev: f64, dt: f64) -> f64 {
    debug_assert!(dt > 0.0);
    (bp_now - bp_prev) / dt
}

/// Energy penalty on commanded wheel speeds; never positive.
pub fn reward_energy(cmd: WheelCommand) -> f64 {
    -(cmd.left.abs() + cmd.right.abs())
}

/// Goal reward for `team` given the team that scored (if any).
pub fn reward_goal(scorer: Option<Team>, team: Team) -> f64 {
    match scorer {
        Some(t) if t == team => 1.0,
        Some(_) => -1.0,
        None => 0.0,
    }
}

pub fn combine(c: RewardComponents, w: RewardWeights) -> RewardBreakdown {
    RewardBreakdown {
        r_goal: c.goal,
        r_move: c.move_to_ball,
        r_potential_grad: c.potential,
        r_energy: c.energy,
        total: w.goal * c.goal + w.move_to_ball * c.move_to_ball + w.potential * c.potential + w.energy * c.energy,
    }
}
