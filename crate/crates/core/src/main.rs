//! `vsss` command-line entry point.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use vsss_rl::config::KitConfig;
use vsss_rl::env::{kickoff_world, Game};
use vsss_rl::manifest::{RunManifest, MANIFEST_FILE};
use vsss_rl::metrics::MetricsReport;
use vsss_rl::netproto::{spawn, ServerCore};
use vsss_rl::policy::AgentKind;
use vsss_rl::replay::replay;
use vsss_rl::rollout::{rollout, EpisodeLog};
use vsss_rl::sim2real::{
    collect_runs, compare_adaptation, read_log, rmse, samples_from_log, synthetic_identity_log, train, write_log,
    AdaptationReport, EvalMetrics, MlpParams, PseudoRealPlant,
};

#[derive(Parser, Debug)]
#[command(name = "vsss", version, about = "Robot-soccer simulation kit: rollouts, sim-to-real adaptor, UDP server")]
struct Cli {
    /// TOML config file, or a run manifest to repeat a run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stream (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory (default: runs/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config override, e.g. `--set rewards.move_to_ball=0.05`. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run seeded episodes with a scripted policy and log every step.
    Rollout(RolloutArgs),
    /// Excite the pseudo-real plant and write a trajectory log.
    Collect(CollectArgs),
    /// Train the inverse-dynamics adaptor on a trajectory log.
    TrainAdaptor(TrainArgs),
    /// Compare steps-to-goal with and without the adaptor.
    EvalAdaptor(EvalArgs),
    /// Run the UDP simulation server.
    Serve(ServeArgs),
    /// Render a rollout log to SVG frames.
    Replay(ReplayArgs),
    /// Recompute metrics from rollout logs.
    Metrics(MetricsArgs),
}

#[derive(Args, Debug)]
struct RolloutArgs {
    /// still, random, chase or goto-ball-goal
    #[arg(long)]
    agent: Option<AgentKind>,
    /// Policy for the yellow team.
    #[arg(long)]
    opponent: Option<AgentKind>,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args, Debug)]
struct CollectArgs {
    /// Independent excitation runs.
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Seconds per run.
    #[arg(long)]
    duration: Option<f64>,
    /// Collect on the unperturbed plant.
    #[arg(long)]
    identity_plant: bool,
    /// Write this many exact identity-plant samples instead of simulating.
    #[arg(long, value_name = "N")]
    synthetic: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Trajectory log written by `collect`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Model file written by `train-adaptor`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
    /// Evaluate on the unperturbed plant instead of the configured one.
    #[arg(long)]
    identity_plant: bool,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long)]
    command_port: Option<u16>,
    /// Fixed state destination port; 0 sends only to clients.
    #[arg(long)]
    state_port: Option<u16>,
    /// Control steps per second in free-run mode; 0 runs unthrottled.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    lock_step: bool,
    /// Stop after this many frames.
    #[arg(long)]
    frames: Option<u64>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    log: PathBuf,
    /// Render every k-th step.
    #[arg(long, default_value_t = 1)]
    every: usize,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Rollout logs, or run directories holding episode_*.csv files.
    #[arg(long, required = true, num_args = 1..)]
    log: Vec<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Rollout(_) => "rollout",
            Self::Collect(_) => "collect",
            Self::TrainAdaptor(_) => "train-adaptor",
            Self::EvalAdaptor(_) => "eval-adaptor",
            Self::Serve(_) => "serve",
            Self::Replay(_) => "replay",
            Self::Metrics(_) => "metrics",
        }
    }
}

fn load_config(cli: &Cli) -> Result<KitConfig> {
    let cfg = match &cli.config {
        Some(p) if p.extension().is_some_and(|e| e == "json") => {
            let m = RunManifest::load(p).with_context(|| format!("reading manifest {}", p.display()))?;
            KitConfig::layered_str(&m.config.to_toml_string(), &p.display().to_string(), &cli.overrides)?
        }
        other => KitConfig::layered(other.as_deref(), &cli.overrides)?,
    };
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn create(dir: PathBuf, manifest: RunManifest) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir, manifest })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.manifest.outputs.push(name.to_string());
        self.dir.join(name)
    }

    fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.outputs.sort();
        self.manifest.write(&self.dir).with_context(|| format!("writing {}", self.dir.join(MANIFEST_FILE).display()))
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = load_config(&cli)?;
    let name = cli.command.name();
    let dir = cli.out.clone().unwrap_or_else(|| Path::new("runs").join(name));
    let args: Vec<String> = std::env::args().skip(1).collect();

    // Subcommand flags override config values.
    match &cli.command {
        Command::Rollout(a) => {
            cfg.rollout.agent = a.agent.unwrap_or(cfg.rollout.agent);
            cfg.rollout.opponent = a.opponent.unwrap_or(cfg.rollout.opponent);
            cfg.rollout.episodes = a.episodes.unwrap_or(cfg.rollout.episodes);
        }
        Command::Collect(a) => cfg.collect.duration = a.duration.unwrap_or(cfg.collect.duration),
        Command::TrainAdaptor(a) => cfg.training.epochs = a.epochs.unwrap_or(cfg.training.epochs),
        Command::EvalAdaptor(a) => cfg.eval.episodes = a.episodes.unwrap_or(cfg.eval.episodes),
        Command::Serve(a) => {
            cfg.server.command_port = a.command_port.unwrap_or(cfg.server.command_port);
            cfg.server.state_port = a.state_port.unwrap_or(cfg.server.state_port);
            cfg.server.rate_hz = a.rate.unwrap_or(cfg.server.rate_hz);
            cfg.server.lock_step |= a.lock_step;
            cfg.server.max_frames = a.frames.or(cfg.server.max_frames);
        }
        Command::Metrics(a) => cfg.rollout.window = a.window.unwrap_or(cfg.rollout.window),
        Command::Replay(_) => {}
    }
    cfg.validate()?;
    let mut run = Run::create(dir, RunManifest::new(name, args, cfg.clone()))?;

    match &cli.command {
        Command::Rollout(_) => cmd_rollout(&cfg, &mut run)?,
        Command::Collect(a) => cmd_collect(&cfg, a, &mut run)?,
        Command::TrainAdaptor(a) => cmd_train(&cfg, a, &mut run)?,
        Command::EvalAdaptor(a) => cmd_eval(&cfg, a, &mut run)?,
        Command::Serve(_) => cmd_serve(&cfg, &mut run)?,
        Command::Replay(a) => cmd_replay(&cfg, a, &mut run)?,
        Command::Metrics(a) => cmd_metrics(&cfg, a, &mut run)?,
    }
    run.finish()
}

fn cmd_rollout(cfg: &KitConfig, run: &mut Run) -> Result<()> {
    let (report, paths) = rollout(&cfg.env_config(), &cfg.rollout, Some(&run.dir))?;
    for p in &paths {
        let name = p.file_name().expect("episode file").to_string_lossy().into_owned();
        run.manifest.outputs.push(name);
    }
    run.write_json("report.json", &report)?;
    println!("agent: {}\n{}", cfg.rollout.agent, report.describe());
    Ok(())
}

fn cmd_collect(cfg: &KitConfig, a: &CollectArgs, run: &mut Run) -> Result<()> {
    let robot = &cfg.physics.robot;
    let rows = match a.synthetic {
        Some(n) => synthetic_identity_log(n, robot, cfg.collect.seed, cfg.collect.dt),
        None => {
            let plant = if a.identity_plant { PseudoRealPlant::IDENTITY } else { cfg.plant };
            collect_runs(&plant, robot, &cfg.collect, a.runs)?
        }
    };
    let path = run.path("trajectories.csv");
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    write_log(&rows, &mut w)?;
    w.flush()?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn cmd_train(cfg: &KitConfig, a: &TrainArgs, run: &mut Run) -> Result<()> {
    let data = &a.data;
    let file = File::open(data).with_context(|| format!("opening {}", data.display()))?;
    if file.metadata()?.len() == 0 {
        bail!("{} is empty", data.display());
    }
    let rows = read_log(BufReader::new(file)).with_context(|| format!("reading {}", data.display()))?;
    if rows.is_empty() {
        bail!("{} holds no trajectory rows", data.display());
    }
    let samples = samples_from_log(&rows, &cfg.physics.robot, cfg.eval.input);
    let model = train(&samples, &cfg.training).with_context(|| format!("training on {}", data.display()))?;
    let model_path = run.path("model.vsmlp");
    model.params.save(&model_path).with_context(|| format!("writing {}", model_path.display()))?;
    let hist_path = run.path("loss_history.csv");
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&hist_path)?;
    for h in &model.history {
        w.serialize(h)?;
    }
    w.flush()?;
    let val_rmse = rmse(&model.params, &model.validation);
    run.write_json(
        "train_report.json",
        &serde_json::json!({
            "samples": samples.len(),
            "validation_samples": model.validation.len(),
            "initial_validation_loss": model.initial_validation_loss(),
            "final_validation_loss": model.final_validation_loss(),
            "validation_rmse": val_rmse,
            "v_max": cfg.physics.robot.v_max,
        }),
    )?;
    println!(
        "trained on {} samples; validation RMSE {:.4} cm/s ({:.3}% of v_max)",
        samples.len(),
        val_rmse,
        100.0 * val_rmse / cfg.physics.robot.v_max
    );
    Ok(())
}

fn fmt_metrics(label: &str, m: &EvalMetrics) -> String {
    format!("{label:<10} {:>9.1} ± {:<8.1} {:>3}/{}", m.mean, m.sd, m.scored, m.steps.len())
}

fn print_adaptation(r: &AdaptationReport) {
    println!("{:<10} {:>20} {:>7}", "condition", "steps to goal", "goals");
    println!("{}", fmt_metrics("baseline", &r.baseline));
    println!("{}", fmt_metrics("unadapted", &r.unadapted));
    println!("{}", fmt_metrics("adapted", &r.adapted));
    println!("ratio adapted/unadapted: {:.3}", r.ratio);
    let t = |w: &Option<vsss_rl::stats::WelchTest>| match w {
        Some(w) => format!("t = {:.3}, df = {:.1}, p = {:.4}", w.t, w.df, w.p_value),
        None => "n/a".to_string(),
    };
    println!("adapted vs unadapted: {}", t(&r.adapted_vs_unadapted));
    println!("adapted vs baseline:  {}", t(&r.adapted_vs_baseline));
}

fn cmd_eval(cfg: &KitConfig, a: &EvalArgs, run: &mut Run) -> Result<()> {
    let model = MlpParams::load(&a.model).with_context(|| format!("loading model {}", a.model.display()))?;
    let plant = if a.identity_plant { PseudoRealPlant::IDENTITY } else { cfg.plant };
    let report = compare_adaptation(&cfg.eval, &cfg.physics, &plant, &model)?;
    print_adaptation(&report);
    run.write_json("eval_report.json", &report)
}

fn cmd_serve(cfg: &KitConfig, run: &mut Run) -> Result<()> {
    let server_cfg = cfg.server_config();
    let world = kickoff_world(&cfg.env, &cfg.physics);
    let core = ServerCore::new(Game::new(world, cfg.physics, cfg.env), cfg.action, &server_cfg)?;
    let handle = spawn(core, &server_cfg)?;
    println!(
        "listening for commands on {}; {} mode",
        handle.command_addr(),
        if server_cfg.lock_step { "lock-step" } else { "free-run" }
    );
    let stats = handle.join()?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    run.write_json("server_stats.json", &stats)
}

fn cmd_replay(cfg: &KitConfig, a: &ReplayArgs, run: &mut Run) -> Result<()> {
    let summary = replay(&a.log, &run.dir, a.every, &cfg.physics).with_context(|| format!("replaying {}", a.log.display()))?;
    for f in &summary.frames {
        run.manifest.outputs.push(f.file_name().expect("frame file").to_string_lossy().into_owned());
    }
    println!(
        "{} frames; final score blue {} : {} yellow",
        summary.frames.len(),
        summary.final_score.blue,
        summary.final_score.yellow
    );
    Ok(())
}

fn log_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.file_name().is_some_and(|n| n.to_string_lossy().starts_with("episode_")) && f.extension().is_some_and(|e| e == "csv"))
                .collect();
            found.sort();
            if found.is_empty() {
                bail!("{} holds no episode_*.csv logs", p.display());
            }
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn cmd_metrics(cfg: &KitConfig, a: &MetricsArgs, run: &mut Run) -> Result<()> {
    let mut traces = Vec::new();
    for path in log_files(&a.log)? {
        let log = EpisodeLog::load(&path).with_context(|| format!("reading {}", path.display()))?;
        traces.push(log.trace().with_context(|| format!("reading {}", path.display()))?);
    }
    let report = MetricsReport::from_traces(&traces, cfg.rollout.window);
    println!("{}", report.describe());
    run.write_json("report.json", &report)
}
