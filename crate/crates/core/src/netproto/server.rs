//! UDP simulation server.
//!
//! The simulation thread owns the world. A receiver thread forwards raw
//! command datagrams to it over a channel, and it hands encoded state packets
//! to a broadcaster thread the same way.

use std::collections::{BTreeMap, BTreeSet};
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::channel::{Channel, ChannelModel, DelayLine, Direction};
use super::packet::{CommandPacket, StatePacket, MAX_COMMAND_LEN};
use super::{DecodeError, NetError};
use crate::action::{AgentAction, ControllerGains, VirtualTarget};
use crate::env::Game;
use crate::physics::{Team, WheelCommand};

pub const DEFAULT_STATE_PORT: u16 = 9001;
pub const DEFAULT_COMMAND_PORT: u16 = 9002;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    /// Local address for the command socket.
    pub bind: String,
    pub command_port: u16,
    /// Where state packets are sent, besides every client that has sent a command.
    pub state_host: String,
    /// 0 disables the fixed state destination.
    pub state_port: u16,
    /// Control steps per second in free-run mode; 0 runs unthrottled.
    pub rate_hz: f64,
    /// Advance only once every controlled robot has a fresh command.
    pub lock_step: bool,
    /// Teams whose robots must report before a lock-step advance.
    pub controlled_teams: Vec<Team>,
    /// Optional loss/latency model on both directions.
    pub channel: Option<ChannelModel>,
    /// Stop after this many frames.
    pub max_frames: Option<u64>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            command_port: DEFAULT_COMMAND_PORT,
            state_host: "127.0.0.1".into(),
            state_port: DEFAULT_STATE_PORT,
            rate_hz: 30.0,
            lock_step: false,
            controlled_teams: vec![Team::Blue],
            channel: None,
            max_frames: None,
        }
    }
}

impl ServerConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.rate_hz >= 0.0 && self.rate_hz.is_finite()) {
            return Err(NetError::InvalidConfig("rate_hz must be finite and non-negative".into()));
        }
        if let Some(c) = &self.channel {
            c.validate()?;
            if self.lock_step {
                return Err(NetError::InvalidConfig("the channel model needs free-run mode".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerStats {
    pub frames: u64,
    pub datagrams: u64,
    pub applied_commands: u64,
    pub malformed: u64,
    pub oversized: u64,
    pub unknown_robots: u64,
    pub invalid_payloads: u64,
    pub dropped_commands: u64,
    pub dropped_states: u64,
    pub goals_blue: u64,
    pub goals_yellow: u64,
}

/// Outcome of one well-formed command datagram.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub applied: usize,
    /// Deferred by the channel model (or lost in it).
    pub in_flight: bool,
    pub unknown: Vec<(Team, u8)>,
    pub invalid: Vec<DecodeError>,
}

type RobotKey = (Team, u8);

/// Deterministic server state machine, independent of sockets and clocks.
pub struct ServerCore {
    game: Game,
    gains: ControllerGains,
    lock_step: bool,
    controlled_teams: Vec<Team>,
    actions: BTreeMap<RobotKey, AgentAction>,
    targets: BTreeMap<RobotKey, VirtualTarget>,
    fresh: BTreeSet<RobotKey>,
    channel: Option<Channel>,
    inbound: DelayLine<CommandPacket>,
    outbound: DelayLine<Vec<u8>>,
    last_goal: Option<Team>,
    stats: ServerStats,
}

impl ServerCore {
    pub fn new(game: Game, gains: ControllerGains, cfg: &ServerConfig) -> Result<Self, NetError> {
        cfg.validate()?;
        let channel = cfg.channel.map(Channel::new).transpose()?;
        Ok(Self {
            game,
            gains,
            lock_step: cfg.lock_step,
            controlled_teams: cfg.controlled_teams.clone(),
            actions: BTreeMap::new(),
            targets: BTreeMap::new(),
            fresh: BTreeSet::new(),
            channel,
            inbound: DelayLine::default(),
            outbound: DelayLine::default(),
            last_goal: None,
            stats: ServerStats::default(),
        })
    }

    pub fn game(&self) -> &Game {
        &self.game
    }

    pub fn stats(&self) -> &ServerStats {
        &self.stats
    }

    fn now(&self) -> f64 {
        self.game.world.elapsed
    }

    /// Parse one datagram and record its commands (last write wins).
    pub fn ingest(&mut self, bytes: &[u8]) -> Result<IngestReport, NetError> {
        self.stats.datagrams += 1;
        if bytes.len() > MAX_COMMAND_LEN {
            self.stats.oversized += 1;
            return Err(NetError::Oversized(bytes.len()));
        }
        let packet = CommandPacket::decode(bytes).inspect_err(|_| self.stats.malformed += 1)?;
        let now = self.now();
        match self.channel.as_mut() {
            None => Ok(self.apply(packet)),
            Some(ch) => {
                match ch.transmit(Direction::Command, now) {
                    Some(at) => self.inbound.push(at, packet),
                    None => self.stats.dropped_commands += 1,
                }
                Ok(IngestReport { in_flight: true, ..Default::default() })
            }
        }
    }

    fn apply(&mut self, packet: CommandPacket) -> IngestReport {
        let mut report = IngestReport::default();
        for c in &packet.commands {
            let key = (packet.team, c.id);
            if self.game.world.robot_index(packet.team, c.id).is_none() {
                self.stats.unknown_robots += 1;
                report.unknown.push(key);
                continue;
            }
            match c.to_action() {
                Ok(action) => {
                    self.actions.insert(key, action);
                    self.fresh.insert(key);
                    self.stats.applied_commands += 1;
                    report.applied += 1;
                }
                Err(e) => {
                    self.stats.invalid_payloads += 1;
                    report.invalid.push(e);
                }
            }
        }
        report
    }

    fn controlled(&self) -> impl Iterator<Item = RobotKey> + '_ {
        self.game.world.robots().filter(|r| self.controlled_teams.contains(&r.team)).map(|r| (r.team, r.id))
    }

    /// Free-run: always. Lock-step: once every controlled robot has a new command.
    pub fn ready(&self) -> bool {
        !self.lock_step || self.controlled().all(|k| self.fresh.contains(&k))
    }

    /// Advance one control period with the latest command of every robot.
    pub fn step(&mut self) -> Result<Option<Team>, NetError> {
        let now = self.now();
        for packet in self.inbound.pop_due(now) {
            self.apply(packet);
        }
        let robot_spec = self.game.params.robot;
        let mut commands = Vec::with_capacity(self.game.world.robot_count());
        for r in self.game.world.robots() {
            let key = (r.team, r.id);
            let cmd = match self.actions.get(&key) {
                Some(action) => {
                    let target = self.targets.entry(key).or_insert_with(|| VirtualTarget::new(0.0, r.pose.theta));
                    action.to_command(r.pose, target, &self.gains, &robot_spec)
                }
                None => WheelCommand::ZERO,
            };
            commands.push(cmd);
        }
        let goal = self.game.step_physics(&commands).map_err(crate::env::EnvError::from)?;
        if self.game.settle(goal) {
            self.targets.clear();
        }
        match goal {
            Some(Team::Blue) => self.stats.goals_blue += 1,
            Some(Team::Yellow) => self.stats.goals_yellow += 1,
            None => {}
        }
        self.last_goal = goal;
        self.fresh.clear();
        self.stats.frames += 1;
        Ok(goal)
    }

    /// Encoded current state, bypassing the channel.
    pub fn state_datagram(&self) -> Vec<u8> {
        let ts = self.game.episode.timestamp(&self.game.world);
        StatePacket::from_world(&self.game.world, ts).map(|p| p.encode()).unwrap_or_default()
    }

    /// Send the current state into the channel and return whatever is due now.
    pub fn outgoing_states(&mut self) -> Vec<Vec<u8>> {
        let bytes = self.state_datagram();
        let now = self.now();
        match self.channel.as_mut() {
            None => vec![bytes],
            Some(ch) => {
                match ch.transmit(Direction::Sensing, now) {
                    Some(at) => self.outbound.push(at, bytes),
                    None => self.stats.dropped_states += 1,
                }
                self.outbound.pop_due(now)
            }
        }
    }

    pub fn finished(&self, max_frames: Option<u64>) -> bool {
        self.game.is_done(self.last_goal) || max_frames.is_some_and(|m| self.stats.frames >= m)
    }
}

enum Outbound {
    State(Vec<u8>),
    Direct(SocketAddr, Vec<u8>),
    Peer(SocketAddr),
}

/// A running server; dropping it without [`ServerHandle::stop`] leaves it running.
pub struct ServerHandle {
    command_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: JoinHandle<Result<ServerStats, NetError>>,
}

impl ServerHandle {
    pub fn command_addr(&self) -> SocketAddr {
        self.command_addr
    }

    pub fn is_finished(&self) -> bool {
        self.thread.is_finished()
    }

    /// Ask the server to stop and wait for it.
    pub fn stop(self) -> Result<ServerStats, NetError> {
        self.stop.store(true, Ordering::SeqCst);
        self.join()
    }

    /// Wait for the server to end on its own (episode over or frame budget spent).
    pub fn join(self) -> Result<ServerStats, NetError> {
        self.thread.join().map_err(|_| NetError::ThreadPanicked)?
    }
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut)
}

/// Bind the sockets and start the server threads.
pub fn spawn(mut core: ServerCore, cfg: &ServerConfig) -> Result<ServerHandle, NetError> {
    cfg.validate()?;
    let cmd_socket = UdpSocket::bind((cfg.bind.as_str(), cfg.command_port)).map_err(NetError::Bind)?;
    cmd_socket.set_read_timeout(Some(Duration::from_millis(10)))?;
    let command_addr = cmd_socket.local_addr()?;
    let state_socket = UdpSocket::bind((cfg.bind.as_str(), 0)).map_err(NetError::Bind)?;
    let mut fixed_targets = Vec::new();
    if cfg.state_port != 0 {
        fixed_targets.extend((cfg.state_host.as_str(), cfg.state_port).to_socket_addrs()?);
    }
    let stop = Arc::new(AtomicBool::new(false));
    let (in_tx, in_rx) = mpsc::channel::<(Vec<u8>, SocketAddr)>();
    let (out_tx, out_rx) = mpsc::channel::<Outbound>();

    let recv_stop = stop.clone();
    let receiver = std::thread::spawn(move || {
        let mut buf = vec![0u8; 65536];
        while !recv_stop.load(Ordering::SeqCst) {
            match cmd_socket.recv_from(&mut buf) {
                Ok((n, peer)) => {
                    if in_tx.send((buf[..n].to_vec(), peer)).is_err() {
                        break;
                    }
                }
                Err(e) if is_timeout(&e) => {}
                Err(_) => {}
            }
        }
    });

    let broadcaster = std::thread::spawn(move || {
        let mut targets = fixed_targets;
        for msg in out_rx {
            match msg {
                Outbound::Peer(addr) => {
                    if !targets.contains(&addr) {
                        targets.push(addr);
                    }
                }
                Outbound::Direct(addr, bytes) => {
                    let _ = state_socket.send_to(&bytes, addr);
                }
                Outbound::State(bytes) => {
                    for t in &targets {
                        let _ = state_socket.send_to(&bytes, t);
                    }
                }
            }
        }
    });

    let period = (cfg.rate_hz > 0.0).then(|| Duration::from_secs_f64(1.0 / cfg.rate_hz));
    let lock_step = cfg.lock_step;
    let max_frames = cfg.max_frames;
    let sim_stop = stop.clone();
    let thread = std::thread::spawn(move || {
        let mut peers: BTreeSet<SocketAddr> = BTreeSet::new();
        let mut handle = |core: &mut ServerCore, (bytes, peer): (Vec<u8>, SocketAddr)| {
            if peers.insert(peer) {
                let _ = out_tx.send(Outbound::Peer(peer));
                let _ = out_tx.send(Outbound::Direct(peer, core.state_datagram()));
            }
            let _ = core.ingest(&bytes);
        };
        for s in core.outgoing_states() {
            let _ = out_tx.send(Outbound::State(s));
        }
        let mut next_tick = Instant::now();
        let result = loop {
            if sim_stop.load(Ordering::SeqCst) || core.finished(max_frames) {
                break Ok(());
            }
            while let Ok(msg) = in_rx.try_recv() {
                handle(&mut core, msg);
            }
            let due = if lock_step {
                core.ready()
            } else {
                period.is_none_or(|_| Instant::now() >= next_tick)
            };
            if !due {
                let wait = match period {
                    Some(_) if !lock_step => next_tick.saturating_duration_since(Instant::now()).min(Duration::from_millis(5)),
                    _ => Duration::from_millis(5),
                };
                match in_rx.recv_timeout(wait) {
                    Ok(msg) => handle(&mut core, msg),
                    Err(RecvTimeoutError::Timeout) => {}
                    Err(RecvTimeoutError::Disconnected) => break Ok(()),
                }
                continue;
            }
            if let Err(e) = core.step() {
                break Err(e);
            }
            if let Some(p) = period {
                next_tick += p;
            }
            for s in core.outgoing_states() {
                let _ = out_tx.send(Outbound::State(s));
            }
        };
        sim_stop.store(true, Ordering::SeqCst);
        drop(out_tx);
        let _ = receiver.join();
        let _ = broadcaster.join();
        result.map(|_| core.stats)
    });
    Ok(ServerHandle { command_addr, stop, thread })
}
