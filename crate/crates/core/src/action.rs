//! Agent-facing action abstractions.
//!
//! Continuous agents emit body speeds `(v, omega)` that are turned into wheel
//! commands with the differential-drive inverse kinematics. Discrete agents
//! steer a virtual target (polar offset from the robot) and a fixed
//! go-to-point controller drives the robot toward it.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::physics::{inverse_kinematics, normalize_angle, FieldSpec, Pose2D, RobotSpec, Vec2, WheelCommand};

/// Rotation applied by the two turning actions.
pub const TARGET_ROTATION_STEP: f64 = PI / 12.0;
/// Radial step applied by the extend/retract actions (cm).
pub const TARGET_RADIAL_STEP: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerGains {
    /// Heading gain (1/s).
    pub k_theta: f64,
    /// Distance gain (1/s).
    pub k_v: f64,
    /// Distance beyond which the speed command saturates (cm).
    pub d_sat: f64,
    /// Largest virtual-target radius (cm).
    pub r_max: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self { k_theta: 5.0, k_v: 3.0, d_sat: 30.0, r_max: FieldSpec::default().diagonal() }
    }
}

/// Desired body speeds: `v` in cm/s, `omega` in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HighLevelAction {
    pub v: f64,
    pub omega: f64,
}

impl HighLevelAction {
    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }

    /// Clamp into the `(v_max, omega_max)` envelope of `robot`; non-finite parts become 0.
    pub fn clamped(self, robot: &RobotSpec) -> Self {
        let clean = |x: f64, lim: f64| if x.is_finite() { x.clamp(-lim, lim) } else { 0.0 };
        Self { v: clean(self.v, robot.v_max), omega: clean(self.omega, robot.omega_max()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiscreteAction {
    /// a1: leave the target where it is.
    Keep,
    /// a2: rotate the target clockwise by 15 degrees.
    RotateCw,
    /// a3: rotate the target counter-clockwise by 15 degrees.
    RotateCcw,
    /// a4: push the target 12 cm further away.
    Extend,
    /// a5: pull the target 12 cm closer.
    Retract,
}

impl DiscreteAction {
    pub const ALL: [DiscreteAction; 5] =
        [Self::Keep, Self::RotateCw, Self::RotateCcw, Self::Extend, Self::Retract];

    /// One-based index as used on the wire (1..=5).
    pub fn index(self) -> u8 {
        match self {
            Self::Keep => 1,
            Self::RotateCw => 2,
            Self::RotateCcw => 3,
            Self::Extend => 4,
            Self::Retract => 5,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get((i as usize).checked_sub(1)?).copied()
    }
}

/// Target point in polar form about the robot; bearing in the field frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VirtualTarget {
    pub r: f64,
    pub phi: f64,
}

impl VirtualTarget {
    pub fn new(r: f64, phi: f64) -> Self {
        Self { r, phi: normalize_angle(phi) }
    }

    /// Field coordinates of the target when anchored at `origin`.
    pub fn resolve(&self, origin: Vec2) -> Vec2 {
        origin + Vec2::from_angle(self.phi).scale(self.r)
    }
}

pub fn apply_discrete(target: VirtualTarget, action: DiscreteAction, r_max: f64) -> VirtualTarget {
    let VirtualTarget { r, phi } = target;
    match action {
        DiscreteAction::Keep => target,
        DiscreteAction::RotateCw => VirtualTarget::new(r, phi - TARGET_ROTATION_STEP),
        DiscreteAction::RotateCcw => VirtualTarget::new(r, phi + TARGET_ROTATION_STEP),
        DiscreteAction::Extend => VirtualTarget { r: (r + TARGET_RADIAL_STEP).clamp(0.0, r_max), phi },
        DiscreteAction::Retract => VirtualTarget { r: (r - TARGET_RADIAL_STEP).clamp(0.0, r_max), phi },
    }
}

/// Convert wheel surface speeds (cm/s) to commands, scaling both channels down
/// proportionally when either exceeds the command range so the turn direction
/// and the wheel-speed ratio survive saturation.
pub fn wheel_speeds_to_command(v_left: f64, v_right: f64, v_max: f64) -> WheelCommand {
    let k = 100.0 / v_max;
    let (mut l, mut r) = (v_left * k, v_right * k);
    if !(l.is_finite() && r.is_finite()) {
        return WheelCommand::ZERO;
    }
    let peak = l.abs().max(r.abs());
    if peak > 100.0 {
        let s = 100.0 / peak;
        l *= s;
        r *= s;
    }
    WheelCommand::new(l, r)
}

pub fn continuous_to_wheels(action: HighLevelAction, robot: &RobotSpec) -> WheelCommand {
    let (vl, vr) = inverse_kinematics(action.v, action.omega, robot.axle_length);
    wheel_speeds_to_command(vl, vr, robot.v_max)
}

/// Bidirectional proportional go-to-point law.
///
/// When the target lies behind the robot the controller drives in reverse
/// toward it instead of turning around.
pub fn goto_controller(pose: Pose2D, target: Vec2, gains: &ControllerGains, robot: &RobotSpec) -> HighLevelAction {
    let delta = target - pose.position();
    let dist = delta.norm();
    if dist < 1e-9 {
        return HighLevelAction::default();
    }
    let err = normalize_angle(delta.angle() - pose.theta);
    let (direction, err_eff) = if err.abs() > FRAC_PI_2 { (-1.0, normalize_angle(err + PI)) } else { (1.0, err) };
    let omega = gains.k_theta * err_eff;
    let v = direction * gains.k_v * dist.min(gains.d_sat) * libm::cos(err_eff);
    HighLevelAction::new(v, omega).clamped(robot)
}

/// One discrete-agent control step: update the target, resolve it from the
/// robot's current position, track it, and emit wheel commands.
pub fn discrete_step_pipeline(
    pose: Pose2D,
    target: VirtualTarget,
    action: DiscreteAction,
    gains: &ControllerGains,
    robot: &RobotSpec,
) -> (VirtualTarget, WheelCommand) {
    let next = apply_discrete(target, action, gains.r_max);
    let point = next.resolve(pose.position());
    let desired = goto_controller(pose, point, gains, robot);
    (next, continuous_to_wheels(desired, robot))
}

/// Any of the three action modes an agent may use in a control step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AgentAction {
    Wheels(WheelCommand),
    Continuous(HighLevelAction),
    Discrete(DiscreteAction),
}

impl AgentAction {
    pub fn is_finite(&self) -> bool {
        match self {
            AgentAction::Wheels(c) => c.left.is_finite() && c.right.is_finite(),
            AgentAction::Continuous(a) => a.v.is_finite() && a.omega.is_finite(),
            AgentAction::Discrete(_) => true,
        }
    }

    /// Lower to a wheel command; discrete actions update the agent's `target`.
    pub fn to_command(
        &self,
        pose: Pose2D,
        target: &mut VirtualTarget,
        gains: &ControllerGains,
        robot: &RobotSpec,
    ) -> WheelCommand {
        match *self {
            AgentAction::Wheels(c) => WheelCommand::new(c.left, c.right),
            AgentAction::Continuous(a) => continuous_to_wheels(a.clamped(robot), robot),
            AgentAction::Discrete(d) => {
                let (next, cmd) = discrete_step_pipeline(pose, *target, d, gains, robot);
                *target = next;
                cmd
            }
        }
    }
}
