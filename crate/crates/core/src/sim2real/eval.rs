//! Adaptor use at run time and closed-loop steps-to-goal evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plant::{collect_runs, samples_from_log, CollectConfig, PseudoRealPlant};
use super::train::{train, TrainConfig, TrainedModel};
use super::{AdaptorInput, MlpParams, Sim2RealError};
use crate::action::{wheel_speeds_to_command, AgentAction, ControllerGains, HighLevelAction, VirtualTarget};
use crate::env::{random_world, EnvError, EpisodeConfig, Game, ResetMode};
use crate::physics::{forward_kinematics, PhysicsParams, RobotSpec, Team, WheelCommand};
use crate::policy::{AgentKind, PolicyContext};
use crate::rng::{derive_seed, seeded};
use crate::stats::{summarize, welch_t_test, WelchTest};

/// Wheel command that should realise `desired` on the plant the adaptor was trained on.
///
/// Outputs exceeding the command range are scaled down together, which keeps
/// the sign of the turn.
pub fn adapt(params: &MlpParams, desired: HighLevelAction, observed_prev: (f64, f64), robot: &RobotSpec) -> WheelCommand {
    match params.forward(&[desired.v, desired.omega, observed_prev.0, observed_prev.1]) {
        Ok(y) => wheel_speeds_to_command(y[0], y[1], robot.v_max),
        Err(_) => WheelCommand::ZERO,
    }
}

/// Collect excitation data on `plant` and train an adaptor on it.
pub fn fit_adaptor(
    plant: &PseudoRealPlant,
    robot: &RobotSpec,
    collect: &CollectConfig,
    runs: usize,
    input: AdaptorInput,
    config: &TrainConfig,
) -> Result<TrainedModel, Sim2RealError> {
    let rows = collect_runs(plant, robot, collect, runs)?;
    train(&samples_from_log(&rows, robot, input), config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub episodes: usize,
    pub seed: u64,
    /// Episode cap (s); an episode without a goal counts as the cap in steps.
    pub max_duration: f64,
    pub control_dt: f64,
    pub agent: AgentKind,
    pub input: AdaptorInput,
    pub gains: ControllerGains,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 30,
            seed: 0,
            max_duration: 300.0,
            control_dt: 1.0 / 30.0,
            agent: AgentKind::GotoBallGoal,
            input: AdaptorInput::ObservedSpeeds,
            gains: ControllerGains::default(),
        }
    }
}

impl EvalConfig {
    fn episode(&self, index: usize) -> EpisodeConfig {
        EpisodeConfig {
            max_duration: self.max_duration,
            control_dt: self.control_dt,
            n_per_team: 1,
            with_opponents: false,
            end_on_goal: true,
            reset_mode: ResetMode::UniformRandom,
            seed: derive_seed(self.seed, index as u64),
            normalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// Steps to goal per episode; failures count as the episode cap.
    pub steps: Vec<u64>,
    pub scored: usize,
    pub mean: f64,
    pub sd: f64,
}

impl EvalMetrics {
    fn from_steps(steps: Vec<u64>, scored: usize) -> Self {
        let s = summarize(&steps.iter().map(|&v| v as f64).collect::<Vec<_>>());
        Self { steps, scored, mean: s.mean, sd: s.sd }
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.steps.iter().map(|&v| v as f64).collect()
    }
}

fn run_episode(
    index: usize,
    cfg: &EvalConfig,
    physics: &PhysicsParams,
    plant: &PseudoRealPlant,
    adaptor: Option<&MlpParams>,
) -> Result<(u64, bool), Sim2RealError> {
    let episode = cfg.episode(index);
    let world = random_world(&episode, physics, &mut seeded(episode.seed))?;
    let mut game = Game::new(world, *physics, episode);
    let mut policy = cfg.agent.build();
    policy.reset(episode.seed);
    let mut channel = plant.start(derive_seed(episode.seed, 1));
    let robot_spec = &physics.robot;
    let ctx = PolicyContext { params: physics, gains: &cfg.gains, dt: episode.control_dt };
    let mut target = VirtualTarget::new(0.0, 0.0);
    let mut prev_obs = (0.0, 0.0);
    let mut prev_cmd = WheelCommand::ZERO;
    let cap = episode.max_frames();
    loop {
        let robot = &game.world.blue[0];
        let action = policy.act(&game.world, robot, &ctx);
        let nominal = action.to_command(robot.pose, &mut target, &cfg.gains, robot_spec);
        let cmd = match adaptor {
            None => nominal,
            Some(p) => {
                let desired = match action {
                    AgentAction::Continuous(a) => a.clamped(robot_spec),
                    _ => {
                        let (v, w) = forward_kinematics(nominal.left * robot_spec.v_max / 100.0, nominal.right * robot_spec.v_max / 100.0, robot_spec.axle_length);
                        HighLevelAction::new(v, w)
                    }
                };
                let prev = match cfg.input {
                    AdaptorInput::ObservedSpeeds => prev_obs,
                    AdaptorInput::PreviousCommands => {
                        forward_kinematics(prev_cmd.left * robot_spec.v_max / 100.0, prev_cmd.right * robot_spec.v_max / 100.0, robot_spec.axle_length)
                    }
                };
                adapt(p, desired, prev, robot_spec)
            }
        };
        prev_cmd = cmd;
        let goal = game.step_physics(&[channel.apply(cmd)]).map_err(EnvError::from)?;
        let r = &game.world.blue[0];
        prev_obs = (r.forward_speed(), r.twist.omega);
        let steps = game.world.frame;
        match goal {
            Some(Team::Blue) => return Ok((steps, true)),
            Some(Team::Yellow) => return Ok((cap, false)),
            None if game.timed_out() => return Ok((cap, false)),
            None => {}
        }
    }
}

/// Steps-to-goal of the scripted attacker on `plant`, optionally through an adaptor.
///
/// Episode `i` uses the same start state and noise stream in every condition.
pub fn eval_closed_loop(
    cfg: &EvalConfig,
    physics: &PhysicsParams,
    plant: &PseudoRealPlant,
    adaptor: Option<&MlpParams>,
) -> Result<EvalMetrics, Sim2RealError> {
    plant.validate()?;
    let outcomes: Result<Vec<(u64, bool)>, Sim2RealError> =
        (0..cfg.episodes).into_par_iter().map(|i| run_episode(i, cfg, physics, plant, adaptor)).collect();
    let outcomes = outcomes?;
    let scored = outcomes.iter().filter(|o| o.1).count();
    Ok(EvalMetrics::from_steps(outcomes.into_iter().map(|o| o.0).collect(), scored))
}

/// The three-way comparison behind the transfer claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationReport {
    pub plant: PseudoRealPlant,
    /// Unperturbed plant, no adaptor.
    pub baseline: EvalMetrics,
    /// Perturbed plant, no adaptor.
    pub unadapted: EvalMetrics,
    /// Perturbed plant through the adaptor.
    pub adapted: EvalMetrics,
    /// `adapted.mean / unadapted.mean`.
    pub ratio: f64,
    pub adapted_vs_unadapted: Option<WelchTest>,
    /// Equivalence check against the unperturbed baseline; a high p-value
    /// means no detectable difference.
    pub adapted_vs_baseline: Option<WelchTest>,
}

pub fn compare_adaptation(
    cfg: &EvalConfig,
    physics: &PhysicsParams,
    plant: &PseudoRealPlant,
    adaptor: &MlpParams,
) -> Result<AdaptationReport, Sim2RealError> {
    let baseline = eval_closed_loop(cfg, physics, &PseudoRealPlant::IDENTITY, None)?;
    let unadapted = eval_closed_loop(cfg, physics, plant, None)?;
    let adapted = eval_closed_loop(cfg, physics, plant, Some(adaptor))?;
    Ok(AdaptationReport {
        plant: *plant,
        ratio: adapted.mean / unadapted.mean,
        adapted_vs_unadapted: welch_t_test(&adapted.as_f64(), &unadapted.as_f64()),
        adapted_vs_baseline: welch_t_test(&adapted.as_f64(), &baseline.as_f64()),
        baseline,
        unadapted,
        adapted,
    })
}
