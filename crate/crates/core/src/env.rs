//! Gym-style episodic environment over the physics world.
//!
//! The caller controls the blue team; yellow robots follow a pluggable
//! scripted policy. Each [`SoccerEnv::step`] advances one control period,
//! detects goals, computes the shaped reward for every blue robot and, after a
//! goal, either ends the episode or restarts from the kickoff formation while
//! the clock keeps running.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action::{AgentAction, ControllerGains, VirtualTarget};
use crate::physics::{
    FieldSpec, PhysicsError, PhysicsParams, Pose2D, RobotState, Score, Team, Twist2D, Vec2, WheelCommand, WorldState,
};
use crate::policy::{Policy, PolicyContext, StillPolicy};
use crate::reward::{
    ball_potential_for, combine, reward_energy, reward_goal, reward_move, reward_potential_grad, RewardBreakdown,
    RewardComponents, RewardWeights,
};
use crate::rng::{derive_seed, seeded, SimRng};

/// Rejection-sampling budget per body in uniform resets.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EnvError {
    #[error("episode is finished; call reset first")]
    EpisodeFinished,
    #[error("expected {expected} actions, got {got}")]
    ActionCount { expected: usize, got: usize },
    #[error("action for robot {0} is not finite")]
    NonFiniteAction(usize),
    #[error("could not place {0} without overlap after {MAX_PLACEMENT_ATTEMPTS} attempts")]
    Placement(String),
    #[error("invalid episode config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetMode {
    #[default]
    Kickoff,
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    /// Episode horizon in simulated seconds.
    pub max_duration: f64,
    pub control_dt: f64,
    /// Robots per team (1 to 3).
    pub n_per_team: usize,
    /// Spawn the yellow team; when false the field holds blue robots only.
    pub with_opponents: bool,
    pub end_on_goal: bool,
    pub reset_mode: ResetMode,
    pub seed: u64,
    /// Normalize observation entries; raw units otherwise.
    pub normalize: bool,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_duration: 300.0,
            control_dt: 1.0 / 30.0,
            n_per_team: 1,
            with_opponents: true,
            end_on_goal: false,
            reset_mode: ResetMode::Kickoff,
            seed: 0,
            normalize: true,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.max_duration > 0.0 && self.max_duration.is_finite()) {
            return Err(EnvError::InvalidConfig("max_duration must be positive".into()));
        }
        if !(self.control_dt > 0.0 && self.control_dt.is_finite()) {
            return Err(EnvError::InvalidConfig("control_dt must be positive".into()));
        }
        if !(1..=3).contains(&self.n_per_team) {
            return Err(EnvError::InvalidConfig(format!("n_per_team must be 1, 2 or 3, got {}", self.n_per_team)));
        }
        Ok(())
    }

    /// Number of control steps in a full episode.
    pub fn max_frames(&self) -> u64 {
        (self.max_duration / self.control_dt - 1e-9).ceil() as u64
    }

    /// Episode clock in `[0, 1]`; exactly 1 once the horizon is reached.
    pub fn timestamp(&self, world: &WorldState) -> f64 {
        if world.frame >= self.max_frames() {
            1.0
        } else {
            (world.elapsed / self.max_duration).clamp(0.0, 1.0)
        }
    }
}

/// Everything needed to build an environment.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub episode: EpisodeConfig,
    pub physics: PhysicsParams,
    pub rewards: RewardWeights,
    pub controller: ControllerGains,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        self.episode.validate()?;
        self.physics.validate()?;
        if !self.rewards.is_finite() {
            return Err(EnvError::InvalidConfig("reward weights must be finite".into()));
        }
        Ok(())
    }
}

/// Team credited when the ball centre is past a goal line inside the mouth.
pub fn check_goal(world: &WorldState, field: &FieldSpec) -> Option<Team> {
    let b = world.ball.position;
    if b.y.abs() >= field.goal_half_width || b.x.abs() <= field.play_half_length {
        return None;
    }
    // Blue attacks +x.
    Some(if b.x > 0.0 { Team::Blue } else { Team::Yellow })
}

const KICKOFF_BLUE: [(f64, f64); 3] = [(-20.0, 0.0), (-40.0, 25.0), (-65.0, 0.0)];

fn kickoff_pose(team: Team, id: usize) -> Pose2D {
    let (x, y) = KICKOFF_BLUE[id];
    match team {
        Team::Blue => Pose2D::new(x, y, 0.0),
        Team::Yellow => Pose2D::new(-x, -y, PI),
    }
}

fn team_sizes(episode: &EpisodeConfig) -> (usize, usize) {
    (episode.n_per_team, if episode.with_opponents { episode.n_per_team } else { 0 })
}

/// Ball at the centre, robots in the fixed mirrored formation, all at rest.
pub fn kickoff_world(episode: &EpisodeConfig, params: &PhysicsParams) -> WorldState {
    let mut world = WorldState::new(params);
    place_kickoff(&mut world, episode);
    world
}

fn place_kickoff(world: &mut WorldState, episode: &EpisodeConfig) {
    let (nb, ny) = team_sizes(episode);
    world.ball.position = Vec2::ZERO;
    world.ball.velocity = Vec2::ZERO;
    world.blue = (0..nb).map(|i| RobotState::new(i as u8, Team::Blue, kickoff_pose(Team::Blue, i))).collect();
    world.yellow = (0..ny).map(|i| RobotState::new(i as u8, Team::Yellow, kickoff_pose(Team::Yellow, i))).collect();
}

/// Ball uniform in the playing rectangle, robots uniform with random heading,
/// rejecting any overlap.
pub fn random_world(episode: &EpisodeConfig, params: &PhysicsParams, rng: &mut SimRng) -> Result<WorldState, EnvError> {
    let field = &params.field;
    let mut world = WorldState::new(params);
    let uniform_in = |rng: &mut SimRng, radius: f64| {
        let lx = field.play_half_length - radius;
        let ly = field.half_width - radius;
        Vec2::new(rng.random_range(-lx..lx), rng.random_range(-ly..ly))
    };
    world.ball.position = uniform_in(rng, params.ball.radius);
    let rr = params.robot.body_radius;
    let (nb, ny) = team_sizes(episode);
    let mut placed: Vec<(Vec2, f64)> = vec![(world.ball.position, params.ball.radius)];
    for (team, count) in [(Team::Blue, nb), (Team::Yellow, ny)] {
        for id in 0..count {
            let mut attempt = 0;
            let p = loop {
                if attempt == MAX_PLACEMENT_ATTEMPTS {
                    return Err(EnvError::Placement(format!("{team} robot {id}")));
                }
                attempt += 1;
                let p = uniform_in(rng, rr);
                if placed.iter().all(|&(q, r)| p.distance(q) > rr + r) {
                    break p;
                }
            };
            let theta = rng.random_range(-PI..PI);
            placed.push((p, rr));
            world.team_mut(team).push(RobotState::new(id as u8, team, Pose2D::new(p.x, p.y, theta)));
        }
    }
    Ok(world)
}

/// World plus the rules layer (goal detection, scoring, kickoff restart).
///
/// Shared by the environment and the network server.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    pub world: WorldState,
    pub params: PhysicsParams,
    pub episode: EpisodeConfig,
}

impl Game {
    pub fn new(world: WorldState, params: PhysicsParams, episode: EpisodeConfig) -> Self {
        Self { world, params, episode }
    }

    /// Step the physics one control period, then detect and credit a goal.
    ///
    /// Bodies stay where the physics left them; see [`Game::settle`].
    pub fn step_physics(&mut self, commands: &[WheelCommand]) -> Result<Option<Team>, PhysicsError> {
        self.world.step(commands, self.episode.control_dt, &self.params)?;
        let goal = check_goal(&self.world, &self.params.field);
        if let Some(team) = goal {
            self.world.score.credit(team);
        }
        Ok(goal)
    }

    /// After a goal in a continuing episode, put bodies back at kickoff.
    /// Returns whether a restart happened.
    pub fn settle(&mut self, goal: Option<Team>) -> bool {
        if goal.is_some() && !self.episode.end_on_goal {
            self.restart_kickoff();
            true
        } else {
            false
        }
    }

    /// Kickoff formation, keeping clock, frame counter and score.
    pub fn restart_kickoff(&mut self) {
        place_kickoff(&mut self.world, &self.episode);
    }

    /// Step and settle in one call.
    pub fn advance(&mut self, commands: &[WheelCommand]) -> Result<Option<Team>, PhysicsError> {
        let goal = self.step_physics(commands)?;
        self.settle(goal);
        Ok(goal)
    }

    pub fn timed_out(&self) -> bool {
        self.world.frame >= self.episode.max_frames()
    }

    pub fn is_done(&self, last_goal: Option<Team>) -> bool {
        self.timed_out() || (last_goal.is_some() && self.episode.end_on_goal)
    }
}

/// Flat observation vector: ball `[x, y, vx, vy]`, then per robot (blue then
/// yellow, ascending id) `[x, y, sin, cos, vx, vy, omega]`, then the timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

pub const BALL_FIELDS: usize = 4;
pub const ROBOT_FIELDS: usize = 7;

pub fn observation_len(robot_count: usize) -> usize {
    BALL_FIELDS + ROBOT_FIELDS * robot_count + 1
}

/// Per-quantity divisors applied when normalizing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationScales {
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    pub omega: f64,
}

impl ObservationScales {
    pub fn new(params: &PhysicsParams, normalize: bool) -> Self {
        if normalize {
            Self {
                x: params.field.half_extent_x(),
                y: params.field.half_width,
                speed: params.robot.v_max,
                omega: params.robot.omega_max(),
            }
        } else {
            Self { x: 1.0, y: 1.0, speed: 1.0, omega: 1.0 }
        }
    }
}

pub fn build_observation(world: &WorldState, episode: &EpisodeConfig, params: &PhysicsParams) -> Observation {
    let s = ObservationScales::new(params, episode.normalize);
    let mut v = Vec::with_capacity(observation_len(world.robot_count()));
    let b = &world.ball;
    v.extend([b.position.x / s.x, b.position.y / s.y, b.velocity.x / s.speed, b.velocity.y / s.speed]);
    for r in world.robots() {
        v.extend([
            r.pose.x / s.x,
            r.pose.y / s.y,
            libm::sin(r.pose.theta),
            libm::cos(r.pose.theta),
            r.twist.vx / s.speed,
            r.twist.vy / s.speed,
            r.twist.omega / s.omega,
        ]);
    }
    v.push(episode.timestamp(world));
    Observation(v)
}

/// Raw-unit view recovered from an observation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedObservation {
    pub ball_position: Vec2,
    pub ball_velocity: Vec2,
    pub robots: Vec<(Pose2D, Twist2D)>,
    pub timestamp: f64,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn timestamp(&self) -> f64 {
        *self.0.last().unwrap_or(&0.0)
    }

    /// Undo the normalization; `None` if the length does not fit the layout.
    pub fn denormalize(&self, episode: &EpisodeConfig, params: &PhysicsParams) -> Option<DecodedObservation> {
        let v = &self.0;
        if v.len() < BALL_FIELDS + 1 || !(v.len() - BALL_FIELDS - 1).is_multiple_of(ROBOT_FIELDS) {
            return None;
        }
        let s = ObservationScales::new(params, episode.normalize);
        let robots = v[BALL_FIELDS..v.len() - 1]
            .chunks_exact(ROBOT_FIELDS)
            .map(|c| {
                (
                    Pose2D::new(c[0] * s.x, c[1] * s.y, libm::atan2(c[2], c[3])),
                    Twist2D { vx: c[4] * s.speed, vy: c[5] * s.speed, omega: c[6] * s.omega },
                )
            })
            .collect();
        Some(DecodedObservation {
            ball_position: Vec2::new(v[0] * s.x, v[1] * s.y),
            ball_velocity: Vec2::new(v[2] * s.speed, v[3] * s.speed),
            robots,
            timestamp: v[v.len() - 1],
        })
    }
}

/// Side information of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub goal: Option<Team>,
    pub score: Score,
    /// Whether bodies were returned to kickoff after a goal.
    pub restarted: bool,
    /// World at the end of the physics step, before any kickoff restart.
    pub world: WorldState,
    /// Ball potential (blue side) before and after the physics step.
    pub potential_before: f64,
    pub potential_after: f64,
    /// Wheel commands applied to every robot, canonical order.
    pub commands: Vec<WheelCommand>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    /// One breakdown per blue robot, ascending id.
    pub rewards: Vec<RewardBreakdown>,
    pub done: bool,
    pub info: StepInfo,
}

pub struct SoccerEnv {
    config: EnvConfig,
    game: Game,
    rng: SimRng,
    opponent: Box<dyn Policy>,
    targets: Vec<VirtualTarget>,
    episode_index: u64,
    done: bool,
}

impl SoccerEnv {
    /// Build and reset an environment from `config.episode.seed`.
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let world = WorldState::new(&config.physics);
        let mut env = Self {
            config,
            game: Game::new(world, config.physics, config.episode),
            rng: seeded(config.episode.seed),
            opponent: Box::new(StillPolicy),
            targets: Vec::new(),
            episode_index: 0,
            done: true,
        };
        env.reset()?;
        Ok(env)
    }

    /// Replace the scripted policy driving yellow robots.
    pub fn set_opponent_policy(&mut self, policy: Box<dyn Policy>) {
        self.opponent = policy;
        self.opponent.reset(derive_seed(self.config.episode.seed, self.episode_index));
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn world(&self) -> &WorldState {
        &self.game.world
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn observation(&self) -> Observation {
        build_observation(&self.game.world, &self.config.episode, &self.config.physics)
    }

    /// Start the next episode, continuing the environment's random stream.
    pub fn reset(&mut self) -> Result<Observation, EnvError> {
        let world = match self.config.episode.reset_mode {
            ResetMode::Kickoff => kickoff_world(&self.config.episode, &self.config.physics),
            ResetMode::UniformRandom => random_world(&self.config.episode, &self.config.physics, &mut self.rng)?,
        };
        self.targets = world.robots().map(|r| VirtualTarget::new(0.0, r.pose.theta)).collect();
        self.game.world = world;
        self.opponent.reset(derive_seed(self.config.episode.seed, self.episode_index));
        self.episode_index += 1;
        self.done = false;
        Ok(self.observation())
    }

    /// Reseed, then reset: equal seeds give identical episodes.
    pub fn reset_seeded(&mut self, seed: u64) -> Result<Observation, EnvError> {
        self.config.episode.seed = seed;
        self.game.episode.seed = seed;
        self.rng = seeded(seed);
        self.episode_index = 0;
        self.reset()
    }

    /// Number of actions `step` expects: one per blue robot.
    pub fn controlled_count(&self) -> usize {
        self.game.world.blue.len()
    }

    /// Advance one control period with one action per blue robot.
    pub fn step(&mut self, actions: &[AgentAction]) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeFinished);
        }
        let n_blue = self.controlled_count();
        if actions.len() != n_blue {
            return Err(EnvError::ActionCount { expected: n_blue, got: actions.len() });
        }
        if let Some(i) = actions.iter().position(|a| !a.is_finite()) {
            return Err(EnvError::NonFiniteAction(i));
        }
        let commands = self.commands_for(actions);
        let prev = self.game.world.clone();
        let goal = self.game.step_physics(&commands)?;
        let rewards = self.rewards(&prev, &self.game.world, &commands, goal);
        let field = &self.config.physics.field;
        let potential_before = ball_potential_for(prev.ball.position, field, Team::Blue);
        let potential_after = ball_potential_for(self.game.world.ball.position, field, Team::Blue);
        let snapshot = self.game.world.clone();
        let restarted = self.game.settle(goal);
        if restarted {
            for (t, r) in self.targets.iter_mut().zip(self.game.world.robots()) {
                *t = VirtualTarget::new(0.0, r.pose.theta);
            }
        }
        self.done = self.game.is_done(goal);
        Ok(StepResult {
            observation: self.observation(),
            rewards,
            done: self.done,
            info: StepInfo {
                goal,
                score: self.game.world.score,
                restarted,
                world: snapshot,
                potential_before,
                potential_after,
                commands,
            },
        })
    }

    fn commands_for(&mut self, actions: &[AgentAction]) -> Vec<WheelCommand> {
        let cfg = &self.config;
        let world = &self.game.world;
        let ctx = PolicyContext { params: &cfg.physics, gains: &cfg.controller, dt: cfg.episode.control_dt };
        let mut out = Vec::with_capacity(world.robot_count());
        for (i, robot) in world.robots().enumerate() {
            let action = match actions.get(i) {
                Some(a) if robot.team == Team::Blue => *a,
                _ => self.opponent.act(world, robot, &ctx),
            };
            out.push(action.to_command(robot.pose, &mut self.targets[i], &cfg.controller, &cfg.physics.robot));
        }
        out
    }

    fn rewards(
        &self,
        prev: &WorldState,
        now: &WorldState,
        commands: &[WheelCommand],
        goal: Option<Team>,
    ) -> Vec<RewardBreakdown> {
        let dt = self.config.episode.control_dt;
        let field = &self.config.physics.field;
        let bp_prev = ball_potential_for(prev.ball.position, field, Team::Blue);
        let bp_now = ball_potential_for(now.ball.position, field, Team::Blue);
        let potential = reward_potential_grad(bp_now, bp_prev, dt);
        let g = reward_goal(goal, Team::Blue);
        prev.blue
            .iter()
            .zip(&now.blue)
            .zip(commands)
            .map(|((before, after), cmd)| {
                let c = RewardComponents {
                    goal: g,
                    move_to_ball: reward_move(after.position(), now.ball.position, before.position(), prev.ball.position, dt),
                    potential,
                    energy: reward_energy(*cmd),
                };
                combine(c, self.config.rewards)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_with(episode: EpisodeConfig) -> SoccerEnv {
        SoccerEnv::new(EnvConfig { episode, ..Default::default() }).unwrap()
    }

    #[test]
    fn kickoff_observation_layout() {
        let env = env_with(EpisodeConfig::default());
        let obs = env.observation();
        assert_eq!(obs.len(), observation_len(2));
        assert_eq!(&obs.0[..4], &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(obs.timestamp(), 0.0);
    }

    #[test]
    fn goal_geometry() {
        let params = PhysicsParams::default();
        let mut w = WorldState::new(&params);
        assert_eq!(check_goal(&w, &params.field), None);
        w.ball.position = Vec2::new(76.0, 0.0);
        assert_eq!(check_goal(&w, &params.field), Some(Team::Blue));
        w.ball.position = Vec2::new(-76.0, 5.0);
        assert_eq!(check_goal(&w, &params.field), Some(Team::Yellow));
        w.ball.position = Vec2::new(76.0, 30.0);
        assert_eq!(check_goal(&w, &params.field), None);
    }

    #[test]
    fn zero_step_from_kickoff() {
        let mut env = env_with(EpisodeConfig::default());
        let r = env.step(&[AgentAction::Wheels(WheelCommand::ZERO)]).unwrap();
        assert!(!r.done);
        assert_eq!(r.rewards.len(), 1);
        assert_eq!(r.rewards[0].r_goal, 0.0);
        assert!(r.rewards[0].r_move.abs() < 1e-12);
        assert_eq!(r.rewards[0].total, 0.0);
    }

    #[test]
    fn wrong_action_count_and_finished_episode() {
        let mut env = env_with(EpisodeConfig { max_duration: 0.1, ..Default::default() });
        assert_eq!(env.step(&[]).unwrap_err(), EnvError::ActionCount { expected: 1, got: 0 });
        let a = [AgentAction::Wheels(WheelCommand::ZERO)];
        let nan = [AgentAction::Continuous(crate::action::HighLevelAction::new(f64::NAN, 0.0))];
        assert_eq!(env.step(&nan).unwrap_err(), EnvError::NonFiniteAction(0));
        for _ in 0..3 {
            env.step(&a).unwrap();
        }
        assert!(env.is_done());
        assert_eq!(env.step(&a).unwrap_err(), EnvError::EpisodeFinished);
    }

    #[test]
    fn timeout_after_full_horizon() {
        let mut env = env_with(EpisodeConfig::default());
        let a = [AgentAction::Wheels(WheelCommand::ZERO)];
        let mut last = None;
        for i in 0..9000 {
            let r = env.step(&a).unwrap();
            assert_eq!(r.done, i == 8999);
            last = Some(r);
        }
        assert_eq!(last.unwrap().observation.timestamp(), 1.0);
    }

    #[test]
    fn midpoint_timestamp() {
        let params = PhysicsParams::default();
        let episode = EpisodeConfig::default();
        let mut w = kickoff_world(&episode, &params);
        w.frame = 4500;
        w.elapsed = 150.0;
        assert_eq!(build_observation(&w, &episode, &params).timestamp(), 0.5);
    }

    #[test]
    fn uniform_reset_is_seeded() {
        let ep = EpisodeConfig { reset_mode: ResetMode::UniformRandom, seed: 42, n_per_team: 3, ..Default::default() };
        let a = env_with(ep).observation();
        let b = env_with(ep).observation();
        assert_eq!(a, b);
        let mut env = env_with(ep);
        let first = env.observation();
        let second = env.reset().unwrap();
        assert_ne!(first, second);
        assert_eq!(env.reset_seeded(42).unwrap(), first);
    }

    #[test]
    fn denormalize_roundtrip() {
        let params = PhysicsParams::default();
        let episode = EpisodeConfig { n_per_team: 2, ..Default::default() };
        let mut rng = seeded(9);
        let mut w = random_world(&episode, &params, &mut rng).unwrap();
        w.ball.velocity = Vec2::new(33.0, -12.5);
        for (i, r) in w.robots_mut().enumerate() {
            r.wheel_left = 10.0 * i as f64 - 20.0;
            r.wheel_right = 37.0 - 5.0 * i as f64;
            r.refresh_twist(params.robot.axle_length);
        }
        w.frame = 300;
        w.elapsed = 10.0;
        let d = build_observation(&w, &episode, &params).denormalize(&episode, &params).unwrap();
        assert!((d.ball_position - w.ball.position).norm() < 1e-9);
        assert!((d.ball_velocity - w.ball.velocity).norm() < 1e-9);
        for ((pose, twist), r) in d.robots.iter().zip(w.robots()) {
            assert!((pose.x - r.pose.x).abs() < 1e-9 && (pose.y - r.pose.y).abs() < 1e-9);
            assert!(crate::physics::normalize_angle(pose.theta - r.pose.theta).abs() < 1e-9);
            assert!((twist.vx - r.twist.vx).abs() < 1e-9 && (twist.vy - r.twist.vy).abs() < 1e-9);
            assert!((twist.omega - r.twist.omega).abs() < 1e-9);
        }
        assert!((d.timestamp - 10.0 / 300.0).abs() < 1e-12);
    }

    #[test]
    fn placement_failure_is_reported() {
        let mut params = PhysicsParams::default();
        params.field.play_half_length = 6.0;
        params.field.half_width = 6.0;
        params.field.goal_half_width = 3.0;
        let episode = EpisodeConfig { n_per_team: 3, ..Default::default() };
        let err = random_world(&episode, &params, &mut seeded(1)).unwrap_err();
        assert!(matches!(err, EnvError::Placement(_)));
    }
}
