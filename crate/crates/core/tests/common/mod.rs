//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use vsss_rl::action::{AgentAction, DiscreteAction, HighLevelAction};
use vsss_rl::env::{kickoff_world, EpisodeConfig};
use vsss_rl::netproto::{CommandPacket, RobotCommand};
use vsss_rl::physics::{PhysicsParams, Pose2D, Score, Team, Twist2D, Vec2, WheelCommand, WorldState};

pub const REGENERATE_ENV: &str = "VSSS_REGENERATE_FIXTURES";

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

/// Compare `bytes` with the stored fixture, rewriting it first when the
/// regeneration variable is set.
pub fn check_fixture(name: &str, bytes: &[u8]) -> Result<(), String> {
    let path = fixture_path(name);
    if std::env::var_os(REGENERATE_ENV).is_some() {
        std::fs::write(&path, bytes).map_err(|e| e.to_string())?;
    }
    let golden = std::fs::read(&path).map_err(|e| format!("{}: {e} (set {REGENERATE_ENV}=1 to create)", path.display()))?;
    if golden == bytes {
        Ok(())
    } else {
        Err(format!("{} differs from the encoded bytes", path.display()))
    }
}

/// Mid-game 3v3 world whose every wire field is exactly representable in f32.
pub fn reference_world() -> WorldState {
    let episode = EpisodeConfig { n_per_team: 3, ..Default::default() };
    let params = PhysicsParams::default();
    let mut w = kickoff_world(&episode, &params);
    w.frame = 4500;
    w.elapsed = 150.0;
    w.score = Score { blue: 3, yellow: 1 };
    w.ball.position = Vec2::new(12.5, -7.25);
    w.ball.velocity = Vec2::new(30.0, -4.5);
    for (i, r) in w.blue.iter_mut().enumerate() {
        let k = i as f64;
        r.pose = Pose2D::new(-20.0 - 10.0 * k, 15.5 - 12.0 * k, 0.25 * k);
        r.twist = Twist2D { vx: 8.0 + k, vy: -2.0 * k, omega: 0.5 - k };
    }
    for (i, r) in w.yellow.iter_mut().enumerate() {
        let k = i as f64;
        r.pose = Pose2D::new(25.0 + 9.5 * k, -30.0 + 20.0 * k, -1.5 + 0.125 * k);
        r.twist = Twist2D { vx: -4.0 * k, vy: 1.0, omega: -0.75 * k };
    }
    w
}

/// Blue commands in all three modes.
pub fn reference_commands() -> CommandPacket {
    CommandPacket::new(
        Team::Blue,
        vec![
            RobotCommand::from_action(0, &AgentAction::Wheels(WheelCommand::new(50.0, -50.0))),
            RobotCommand::from_action(1, &AgentAction::Continuous(HighLevelAction::new(30.5, -1.25))),
            RobotCommand::from_action(2, &AgentAction::Discrete(DiscreteAction::RotateCcw)),
        ],
    )
}

/// Random datagram biased toward near-valid command packets.
pub fn fuzz_datagram(rng: &mut vsss_rl::rng::SimRng) -> Vec<u8> {
    use rand::Rng;
    let valid = |rng: &mut vsss_rl::rng::SimRng| {
        let n = rng.random_range(0..4usize);
        let cmds = (0..n)
            .map(|_| RobotCommand {
                id: rng.random_range(0..4),
                mode: vsss_rl::netproto::WireMode::from_byte(rng.random_range(0..3)).unwrap(),
                a: f32::from_bits(rng.random()),
                b: rng.random_range(-150.0..150.0),
            })
            .collect();
        CommandPacket::new(if rng.random() { Team::Blue } else { Team::Yellow }, cmds).encode()
    };
    match rng.random_range(0..6u8) {
        0 => (0..rng.random_range(0..64)).map(|_| rng.random()).collect(),
        1 => {
            let mut b = valid(rng);
            let i = rng.random_range(0..b.len());
            b[i] ^= 1 << rng.random_range(0..8);
            b
        }
        2 => {
            let mut b = valid(rng);
            let cut = rng.random_range(0..=b.len() + 8);
            b.resize(cut, rng.random());
            b
        }
        3 => {
            let mut b = b"VSRL\x01\x02".to_vec();
            b.extend((0..rng.random_range(0..40)).map(|_| rng.random::<u8>()));
            b
        }
        4 => vec![rng.random(); rng.random_range(2559..4000)],
        _ => valid(rng),
    }
}
