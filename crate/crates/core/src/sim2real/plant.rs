//! Perturbed actuator ("pseudo-real" plant) and trajectory collection.

use std::collections::VecDeque;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AdaptorInput, Sim2RealError, TrajectorySample};
use crate::physics::{forward_kinematics, motor_step, RobotSpec, WheelCommand};
use crate::rng::{derive_seed, seeded, SimRng};

/// Command-path perturbation standing in for a physical robot.
///
/// A command passes through a FIFO of `latency` control steps, a symmetric
/// dead zone that zeroes small commands, a per-wheel gain and additive
/// Gaussian noise, then is clamped to the command range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PseudoRealPlant {
    pub gain_left: f64,
    pub gain_right: f64,
    /// Commands with magnitude at or below this are dropped (command units).
    pub dead_zone: f64,
    /// Control steps between issuing a command and its taking effect.
    pub latency: usize,
    /// Standard deviation of additive command noise (command units).
    pub noise: f64,
}

impl Default for PseudoRealPlant {
    fn default() -> Self {
        Self { gain_left: 0.8, gain_right: 1.2, dead_zone: 5.0, latency: 1, noise: 1.0 }
    }
}

impl PseudoRealPlant {
    /// Pass-through plant: the simulator itself.
    pub const IDENTITY: PseudoRealPlant =
        PseudoRealPlant { gain_left: 1.0, gain_right: 1.0, dead_zone: 0.0, latency: 0, noise: 0.0 };

    pub fn validate(&self) -> Result<(), Sim2RealError> {
        let ok = self.gain_left > 0.0
            && self.gain_right > 0.0
            && self.gain_left.is_finite()
            && self.gain_right.is_finite()
            && self.dead_zone >= 0.0
            && self.dead_zone.is_finite()
            && self.noise >= 0.0
            && self.noise.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Sim2RealError::InvalidConfig("plant gains must be positive and dead zone/noise non-negative".into()))
        }
    }

    pub fn start(&self, seed: u64) -> PlantChannel {
        PlantChannel { plant: *self, queue: VecDeque::from(vec![WheelCommand::ZERO; self.latency]), rng: seeded(seed) }
    }

    /// Static part of the transform (no latency, no noise).
    pub fn shape(&self, cmd: WheelCommand) -> WheelCommand {
        let dz = |c: f64| if c.abs() <= self.dead_zone { 0.0 } else { c };
        WheelCommand::new(self.gain_left * dz(cmd.left), self.gain_right * dz(cmd.right))
    }
}

/// Running state of a plant: pending commands and the noise stream.
#[derive(Debug, Clone)]
pub struct PlantChannel {
    plant: PseudoRealPlant,
    queue: VecDeque<WheelCommand>,
    rng: SimRng,
}

impl PlantChannel {
    pub fn plant(&self) -> &PseudoRealPlant {
        &self.plant
    }

    /// Issue `cmd`; returns the command the wheels actually receive this step.
    pub fn apply(&mut self, cmd: WheelCommand) -> WheelCommand {
        self.queue.push_back(cmd);
        let due = self.queue.pop_front().unwrap_or_default();
        let shaped = self.plant.shape(due);
        if self.plant.noise == 0.0 {
            return shaped;
        }
        let normal = Normal::new(0.0, self.plant.noise).expect("validated noise");
        WheelCommand::new(shaped.left + normal.sample(&mut self.rng), shaped.right + normal.sample(&mut self.rng))
    }
}

/// Wheel speeds of a robot driven open-loop, integrated like the world does.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Actuator {
    pub left: f64,
    pub right: f64,
}

impl Actuator {
    pub fn step(&mut self, cmd: WheelCommand, robot: &RobotSpec, dt: f64, substeps: u32) {
        let n = substeps.max(1);
        let h = dt / n as f64;
        for _ in 0..n {
            self.left = motor_step(self.left, cmd.left, robot, h);
            self.right = motor_step(self.right, cmd.right, robot, h);
        }
    }

    pub fn body_speeds(&self, robot: &RobotSpec) -> (f64, f64) {
        forward_kinematics(self.left, self.right, robot.axle_length)
    }
}

/// One control step of a collection run; see [`LOG_HEADER`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    /// Time the command was issued (s).
    pub t: f64,
    /// Body speeds measured `response_delay` steps after issuing the command.
    pub v_d: f64,
    pub w_d: f64,
    /// Body speeds measured just before issuing the command.
    pub v_obs: f64,
    pub w_obs: f64,
    /// Issued command (command units).
    pub vl_cmd: f64,
    pub vr_cmd: f64,
}

pub const LOG_HEADER: &str = "t,v_d,w_d,v_obs,w_obs,vl_cmd,vr_cmd";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    /// Seconds of excitation.
    pub duration: f64,
    pub dt: f64,
    pub substeps: u32,
    /// Control steps each random command is held.
    pub hold_steps: u32,
    /// Commands are uniform in `[-amplitude, amplitude]`.
    pub amplitude: f64,
    /// Steps between issuing a command and the measurement logged as its outcome.
    pub response_delay: usize,
    pub seed: u64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        Self { duration: 30.0, dt: 1.0 / 30.0, substeps: 8, hold_steps: 5, amplitude: 100.0, response_delay: 1, seed: 0 }
    }
}

impl CollectConfig {
    pub fn steps(&self) -> usize {
        (self.duration / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<(), Sim2RealError> {
        let ok = self.duration >= 0.0
            && self.duration.is_finite()
            && self.dt > 0.0
            && self.dt.is_finite()
            && self.hold_steps > 0
            && (0.0..=100.0).contains(&self.amplitude);
        if ok {
            Ok(())
        } else {
            Err(Sim2RealError::InvalidConfig("collect config out of range".into()))
        }
    }
}

/// Drive `plant` with held uniform random commands and log every step.
pub fn collect_log(plant: &PseudoRealPlant, robot: &RobotSpec, cfg: &CollectConfig) -> Result<Vec<LogRow>, Sim2RealError> {
    plant.validate()?;
    cfg.validate()?;
    let n = cfg.steps();
    let total = n + cfg.response_delay;
    let mut rng = seeded(cfg.seed);
    let mut channel = plant.start(derive_seed(cfg.seed, 1));
    let mut act = Actuator::default();
    let mut cmds = Vec::with_capacity(total);
    let mut measured = Vec::with_capacity(total + 1);
    measured.push(act.body_speeds(robot));
    let mut current = WheelCommand::ZERO;
    for k in 0..total {
        if k % cfg.hold_steps as usize == 0 {
            let a = cfg.amplitude;
            current = if a > 0.0 { WheelCommand::new(rng.random_range(-a..=a), rng.random_range(-a..=a)) } else { WheelCommand::ZERO };
        }
        cmds.push(current);
        act.step(channel.apply(current), robot, cfg.dt, cfg.substeps);
        measured.push(act.body_speeds(robot));
    }
    Ok((0..n)
        .map(|k| {
            let (v_obs, w_obs) = measured[k];
            let (v_d, w_d) = measured[k + 1 + cfg.response_delay];
            LogRow { t: k as f64 * cfg.dt, v_d, w_d, v_obs, w_obs, vl_cmd: cmds[k].left, vr_cmd: cmds[k].right }
        })
        .collect())
}

/// Independent runs with per-run seeds, collected in parallel.
pub fn collect_runs(plant: &PseudoRealPlant, robot: &RobotSpec, cfg: &CollectConfig, runs: usize) -> Result<Vec<LogRow>, Sim2RealError> {
    let logs: Result<Vec<Vec<LogRow>>, _> = (0..runs as u64)
        .into_par_iter()
        .map(|i| collect_log(plant, robot, &CollectConfig { seed: derive_seed(cfg.seed, i), ..*cfg }))
        .collect();
    Ok(logs?.into_iter().flatten().collect())
}

/// Training pairs from a log.
pub fn samples_from_log(rows: &[LogRow], robot: &RobotSpec, input: AdaptorInput) -> Vec<TrajectorySample> {
    let to_speed = |c: f64| c * robot.v_max / 100.0;
    rows.iter()
        .enumerate()
        .map(|(k, r)| {
            let prev = match input {
                AdaptorInput::ObservedSpeeds => (r.v_obs, r.w_obs),
                AdaptorInput::PreviousCommands => match k.checked_sub(1).map(|j| rows[j]) {
                    Some(p) if p.t < r.t => forward_kinematics(to_speed(p.vl_cmd), to_speed(p.vr_cmd), robot.axle_length),
                    _ => (0.0, 0.0),
                },
            };
            TrajectorySample { input: [r.v_d, r.w_d, prev.0, prev.1], target: [to_speed(r.vl_cmd), to_speed(r.vr_cmd)] }
        })
        .collect()
}

/// Collect and convert to samples in one go.
pub fn collect_trajectories(
    plant: &PseudoRealPlant,
    robot: &RobotSpec,
    cfg: &CollectConfig,
    input: AdaptorInput,
) -> Result<Vec<TrajectorySample>, Sim2RealError> {
    Ok(samples_from_log(&collect_log(plant, robot, cfg)?, robot, input))
}

pub fn write_log(rows: &[LogRow], w: impl Write) -> Result<(), Sim2RealError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    if rows.is_empty() {
        out.write_record(LOG_HEADER.split(','))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_log(r: impl Read) -> Result<Vec<LogRow>, Sim2RealError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != LOG_HEADER {
        return Err(Sim2RealError::InvalidConfig(format!("unexpected log header `{}`", header.join(","))));
    }
    let rows = rdr.deserialize().collect::<Result<Vec<LogRow>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plant_transform() {
        let plant = PseudoRealPlant { noise: 0.0, ..Default::default() };
        let mut ch = plant.start(0);
        assert_eq!(ch.apply(WheelCommand::new(50.0, 50.0)), WheelCommand::ZERO);
        assert_eq!(ch.apply(WheelCommand::new(4.0, -5.0)), WheelCommand::new(40.0, 60.0));
        assert_eq!(ch.apply(WheelCommand::ZERO), WheelCommand::ZERO);
        assert_eq!(plant.shape(WheelCommand::new(100.0, 100.0)), WheelCommand::new(80.0, 100.0));
        assert!(PseudoRealPlant { gain_left: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn identity_plant_passes_through() {
        let mut ch = PseudoRealPlant::IDENTITY.start(0);
        for c in [WheelCommand::new(3.0, -2.0), WheelCommand::new(-100.0, 77.0)] {
            assert_eq!(ch.apply(c), c);
        }
    }

    #[test]
    fn sample_count() {
        let cfg = CollectConfig::default();
        let s = collect_trajectories(&PseudoRealPlant::default(), &RobotSpec::default(), &cfg, AdaptorInput::ObservedSpeeds).unwrap();
        assert_eq!(s.len(), 900);
        assert!(s.iter().all(|s| s.is_finite() && s.target.iter().all(|t| t.abs() <= 150.0)));
    }

    #[test]
    fn zero_excitation_stays_near_zero() {
        let cfg = CollectConfig { amplitude: 0.0, ..Default::default() };
        let robot = RobotSpec::default();
        let s = collect_trajectories(&PseudoRealPlant::default(), &robot, &cfg, AdaptorInput::ObservedSpeeds).unwrap();
        assert!(s.iter().all(|s| s.target == [0.0, 0.0]));
        assert!(s.iter().all(|s| s.input[0].abs() < 10.0 && s.input[1].abs() < 3.0));
    }

    #[test]
    fn identity_plant_kinematic_audit() {
        let robot = RobotSpec::default();
        let cfg = CollectConfig { response_delay: 0, seed: 4, ..Default::default() };
        let rows = collect_log(&PseudoRealPlant::IDENTITY, &robot, &cfg).unwrap();
        let alpha = 1.0 - (-cfg.dt / robot.motor_time_constant).exp();
        for r in &rows {
            let (v_cmd, w_cmd) = forward_kinematics(r.vl_cmd * 1.5, r.vr_cmd * 1.5, robot.axle_length);
            assert!((r.v_d - (r.v_obs + alpha * (v_cmd - r.v_obs))).abs() < 1e-9);
            assert!((r.w_d - (r.w_obs + alpha * (w_cmd - r.w_obs))).abs() < 1e-9);
        }
    }

    #[test]
    fn log_csv_roundtrip() {
        let rows = collect_log(&PseudoRealPlant::default(), &RobotSpec::default(), &CollectConfig { duration: 1.0, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_log(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,v_d,w_d,v_obs,w_obs,vl_cmd,vr_cmd\n"));
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), rows.len() + 1);
        assert_eq!(read_log(buf.as_slice()).unwrap(), rows);
        assert!(read_log("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn previous_command_inputs() {
        let robot = RobotSpec::default();
        let rows = collect_log(&PseudoRealPlant::default(), &robot, &CollectConfig { duration: 1.0, ..Default::default() }).unwrap();
        let s = samples_from_log(&rows, &robot, AdaptorInput::PreviousCommands);
        assert_eq!(s[0].input[2..], [0.0, 0.0]);
        let (v, w) = forward_kinematics(rows[6].vl_cmd * 1.5, rows[6].vr_cmd * 1.5, robot.axle_length);
        assert!((s[7].input[2] - v).abs() < 1e-12 && (s[7].input[3] - w).abs() < 1e-12);
    }

    #[test]
    fn parallel_runs_are_deterministic() {
        let cfg = CollectConfig { duration: 2.0, seed: 3, ..Default::default() };
        let a = collect_runs(&PseudoRealPlant::default(), &RobotSpec::default(), &cfg, 4).unwrap();
        let b = collect_runs(&PseudoRealPlant::default(), &RobotSpec::default(), &cfg, 4).unwrap();
        assert_eq!(a.len(), 240);
        assert_eq!(a, b);
    }
}
