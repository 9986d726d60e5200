//! Seeded scripted-policy rollouts with per-step CSV logs.
//!
//! Episodes run in parallel, each from its own derived seed, and are merged
//! by episode index so the output never depends on scheduling.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, EnvError, SoccerEnv};
use crate::metrics::{EpisodeTrace, MetricsReport, RewardSums, DEFAULT_WINDOW};
use crate::physics::{forward_kinematics, Score, Team, WorldState};
use crate::policy::{AgentKind, Policy, PolicyContext};
use crate::rng::derive_seed;

#[derive(Debug, thiserror::Error)]
pub enum RolloutError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("log has no `{0}` column")]
    MissingColumn(String),
    #[error("log is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    pub agent: AgentKind,
    pub opponent: AgentKind,
    pub episodes: usize,
    pub window: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self { agent: AgentKind::GotoBallGoal, opponent: AgentKind::Still, episodes: 10, window: DEFAULT_WINDOW }
    }
}

/// Columns shared by every log, before the per-robot pose columns.
pub const FIXED_COLUMNS: [&str; 20] = [
    "step", "t", "v_d", "w_d", "v_obs", "w_obs", "vl_cmd", "vr_cmd", "r_goal", "r_move", "r_potential", "r_energy",
    "r_total", "score_blue", "score_yellow", "restarted", "ball_x", "ball_y", "ball_vx", "ball_vy",
];

/// Per-robot columns, prefixed with `b<id>_` or `y<id>_`.
pub const ROBOT_FIELDS: [&str; 6] = ["x", "y", "theta", "vx", "vy", "omega"];

/// A per-step log held in memory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl EpisodeLog {
    pub fn for_world(world: &WorldState) -> Self {
        let mut columns: Vec<String> = FIXED_COLUMNS.iter().map(|c| c.to_string()).collect();
        for r in world.robots() {
            let prefix = robot_prefix(r.team, r.id);
            columns.extend(ROBOT_FIELDS.iter().map(|f| format!("{prefix}_{f}")));
        }
        Self { columns, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Result<usize, RolloutError> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| RolloutError::MissingColumn(name.to_string()))
    }

    /// Robots present in the log as `(prefix, first column index)`.
    pub fn robots(&self) -> Vec<(String, usize)> {
        self.columns
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.strip_suffix("_x").filter(|p| p != &"ball").map(|p| (p.to_string(), i)))
            .collect()
    }

    pub fn write(&self, w: impl Write) -> Result<(), RolloutError> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| v.to_string()))?;
        }
        out.flush().map_err(|e| RolloutError::Io { path: "<log>".into(), source: e })?;
        Ok(())
    }

    pub fn read(r: impl Read) -> Result<Self, RolloutError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if columns.iter().all(|c| c.is_empty()) {
            return Err(RolloutError::Empty);
        }
        let mut log = Self { columns, rows: Vec::new() };
        for required in ["step", "r_goal", "score_blue", "score_yellow", "ball_x", "ball_y"] {
            log.column(required)?;
        }
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let row = record
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| RolloutError::Malformed { line, message: e.to_string() })?;
            log.rows.push(row);
        }
        Ok(log)
    }

    pub fn load(path: &Path) -> Result<Self, RolloutError> {
        let f = File::open(path).map_err(|e| RolloutError::Io { path: path.display().to_string(), source: e })?;
        Self::read(std::io::BufReader::new(f))
    }

    pub fn final_score(&self) -> Result<Score, RolloutError> {
        let (b, y) = (self.column("score_blue")?, self.column("score_yellow")?);
        Ok(self.rows.last().map_or(Score::default(), |r| Score { blue: r[b] as i32, yellow: r[y] as i32 }))
    }

    /// Rebuild the metrics input from the logged columns.
    pub fn trace(&self) -> Result<EpisodeTrace, RolloutError> {
        let idx = [
            self.column("r_goal")?,
            self.column("r_move")?,
            self.column("r_potential")?,
            self.column("r_energy")?,
            self.column("r_total")?,
        ];
        let mut sums = RewardSums::default();
        let mut goal_rewards = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            goal_rewards.push(row[idx[0]]);
            sums.goal += row[idx[0]];
            sums.move_to_ball += row[idx[1]];
            sums.potential += row[idx[2]];
            sums.energy += row[idx[3]];
            sums.total += row[idx[4]];
        }
        Ok(EpisodeTrace { goal_rewards, reward_sums: sums, final_score: self.final_score()? })
    }
}

pub fn robot_prefix(team: Team, id: u8) -> String {
    match team {
        Team::Blue => format!("b{id}"),
        Team::Yellow => format!("y{id}"),
    }
}

pub fn episode_file_name(index: usize) -> String {
    format!("episode_{index:03}.csv")
}

/// Run one episode of `cfg.agent` on the blue side.
pub fn run_episode(env_cfg: &EnvConfig, cfg: &RolloutConfig, index: usize) -> Result<(EpisodeLog, EpisodeTrace), RolloutError> {
    let mut env_cfg = *env_cfg;
    env_cfg.episode.seed = derive_seed(env_cfg.episode.seed, index as u64);
    let mut env = SoccerEnv::new(env_cfg)?;
    env.set_opponent_policy(cfg.opponent.build());
    let mut agents: Vec<Box<dyn Policy>> = (0..env.controlled_count()).map(|_| cfg.agent.build()).collect();
    for (i, a) in agents.iter_mut().enumerate() {
        a.reset(derive_seed(env_cfg.episode.seed, 1000 + i as u64));
    }
    let physics = env_cfg.physics;
    let robot = physics.robot;
    let ctx = PolicyContext { params: &physics, gains: &env_cfg.controller, dt: env_cfg.episode.control_dt };
    let mut log = EpisodeLog::for_world(env.world());
    let mut sums = RewardSums::default();
    let mut goal_rewards = Vec::new();
    while !env.is_done() {
        let world = env.world();
        let actions: Vec<_> = world.blue.iter().zip(agents.iter_mut()).map(|(r, a)| a.act(world, r, &ctx)).collect();
        let res = env.step(&actions)?;
        let r0 = res.rewards[0];
        sums.add(&r0);
        goal_rewards.push(r0.r_goal);
        let cmd = res.info.commands[0];
        let (v_d, w_d) =
            forward_kinematics(cmd.left * robot.v_max / 100.0, cmd.right * robot.v_max / 100.0, robot.axle_length);
        let w = &res.info.world;
        let b0 = &w.blue[0];
        let mut row = vec![
            w.frame as f64,
            w.elapsed,
            v_d,
            w_d,
            b0.forward_speed(),
            b0.twist.omega,
            cmd.left,
            cmd.right,
            r0.r_goal,
            r0.r_move,
            r0.r_potential_grad,
            r0.r_energy,
            r0.total,
            res.info.score.blue as f64,
            res.info.score.yellow as f64,
            if res.info.restarted { 1.0 } else { 0.0 },
            w.ball.position.x,
            w.ball.position.y,
            w.ball.velocity.x,
            w.ball.velocity.y,
        ];
        for r in w.robots() {
            row.extend([r.pose.x, r.pose.y, r.pose.theta, r.twist.vx, r.twist.vy, r.twist.omega]);
        }
        log.rows.push(row);
    }
    let trace = EpisodeTrace { goal_rewards, reward_sums: sums, final_score: env.world().score };
    Ok((log, trace))
}

/// Run all episodes, writing `episode_NNN.csv` files into `out_dir` when given.
pub fn rollout(env_cfg: &EnvConfig, cfg: &RolloutConfig, out_dir: Option<&Path>) -> Result<(MetricsReport, Vec<PathBuf>), RolloutError> {
    let results: Vec<(EpisodeTrace, Option<PathBuf>)> = (0..cfg.episodes)
        .into_par_iter()
        .map(|i| {
            let (log, trace) = run_episode(env_cfg, cfg, i)?;
            let path = match out_dir {
                Some(dir) => {
                    let path = dir.join(episode_file_name(i));
                    let io = |e| RolloutError::Io { path: path.display().to_string(), source: e };
                    let mut w = BufWriter::new(File::create(&path).map_err(io)?);
                    log.write(&mut w)?;
                    w.flush().map_err(io)?;
                    Some(path)
                }
                None => None,
            };
            Ok((trace, path))
        })
        .collect::<Result<_, RolloutError>>()?;
    let (traces, paths): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((MetricsReport::from_traces(&traces, cfg.window), paths.into_iter().flatten().collect()))
}
