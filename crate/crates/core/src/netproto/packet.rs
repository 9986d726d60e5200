//! State and command datagram codecs. All numbers are little-endian.

use crate::action::{AgentAction, DiscreteAction, HighLevelAction};
use crate::physics::{PhysicsParams, Pose2D, RobotState, Score, Team, Twist2D, Vec2, WheelCommand, WorldState};

use super::DecodeError;

pub const MAGIC: &[u8; 4] = b"VSRL";
pub const VERSION: u8 = 1;
pub const TYPE_STATE: u8 = 0x01;
pub const TYPE_COMMAND: u8 = 0x02;

pub const STATE_HEADER_LEN: usize = 20;
/// Header, ball block and the two robot counts.
pub const STATE_FIXED_LEN: usize = STATE_HEADER_LEN + 16 + 2;
pub const STATE_ROBOT_LEN: usize = 25;
pub const COMMAND_HEADER_LEN: usize = 8;
pub const COMMAND_ROBOT_LEN: usize = 10;
/// Longest well-formed command datagram.
pub const MAX_COMMAND_LEN: usize = COMMAND_HEADER_LEN + COMMAND_ROBOT_LEN * 255;

pub fn state_len(robots: usize) -> usize {
    STATE_FIXED_LEN + STATE_ROBOT_LEN * robots
}

pub fn command_len(robots: usize) -> usize {
    COMMAND_HEADER_LEN + COMMAND_ROBOT_LEN * robots
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireRobot {
    pub id: u8,
    pub x: f32,
    pub y: f32,
    pub theta: f32,
    pub vx: f32,
    pub vy: f32,
    pub omega: f32,
}

impl WireRobot {
    pub fn from_state(r: &RobotState) -> Self {
        Self {
            id: r.id,
            x: r.pose.x as f32,
            y: r.pose.y as f32,
            theta: r.pose.theta as f32,
            vx: r.twist.vx as f32,
            vy: r.twist.vy as f32,
            omega: r.twist.omega as f32,
        }
    }

    /// Robot state with wheel speeds recovered from the twist.
    pub fn to_state(&self, team: Team, axle_length: f64) -> RobotState {
        let pose = Pose2D::new(self.x as f64, self.y as f64, self.theta as f64);
        let twist = Twist2D { vx: self.vx as f64, vy: self.vy as f64, omega: self.omega as f64 };
        let v = twist.linear().dot(pose.heading());
        let half = twist.omega * axle_length / 2.0;
        let mut r = RobotState::new(self.id, team, pose);
        r.twist = twist;
        r.wheel_left = v - half;
        r.wheel_right = v + half;
        r
    }
}

/// Decoded state broadcast. Scores are from the blue side: `score_own` is
/// blue's, `score_adv` yellow's.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePacket {
    pub frame: u32,
    pub timestamp: f32,
    pub score_own: i8,
    pub score_adv: i8,
    /// `[x, y, vx, vy]`.
    pub ball: [f32; 4],
    pub blue: Vec<WireRobot>,
    pub yellow: Vec<WireRobot>,
}

fn saturate_i8(v: i32) -> i8 {
    v.clamp(i8::MIN as i32, i8::MAX as i32) as i8
}

impl StatePacket {
    /// `None` when a team has more robots than a count byte can describe.
    pub fn from_world(world: &WorldState, timestamp: f64) -> Option<Self> {
        if world.blue.len() > 255 || world.yellow.len() > 255 {
            return None;
        }
        let b = &world.ball;
        let mut blue: Vec<WireRobot> = world.blue.iter().map(WireRobot::from_state).collect();
        let mut yellow: Vec<WireRobot> = world.yellow.iter().map(WireRobot::from_state).collect();
        blue.sort_by_key(|r| r.id);
        yellow.sort_by_key(|r| r.id);
        Some(Self {
            frame: world.frame.min(u32::MAX as u64) as u32,
            timestamp: timestamp.clamp(0.0, 1.0) as f32,
            score_own: saturate_i8(world.score.blue),
            score_adv: saturate_i8(world.score.yellow),
            ball: [b.position.x as f32, b.position.y as f32, b.velocity.x as f32, b.velocity.y as f32],
            blue,
            yellow,
        })
    }

    pub fn robot_count(&self) -> usize {
        self.blue.len() + self.yellow.len()
    }

    pub fn encoded_len(&self) -> usize {
        state_len(self.robot_count())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(TYPE_STATE);
        out.extend_from_slice(&self.frame.to_le_bytes());
        out.extend_from_slice(&self.timestamp.to_le_bytes());
        out.push(self.score_own as u8);
        out.push(self.score_adv as u8);
        out.extend_from_slice(&[0; 4]);
        for v in self.ball {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.blue.len() as u8);
        out.push(self.yellow.len() as u8);
        for r in self.blue.iter().chain(&self.yellow) {
            out.push(r.id);
            for v in [r.x, r.y, r.theta, r.vx, r.vy, r.omega] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        check_header(bytes, TYPE_STATE, STATE_FIXED_LEN)?;
        let mut rd = Reader::new(bytes, 6);
        let frame = rd.u32();
        let timestamp = rd.f32();
        let score_own = rd.u8() as i8;
        let score_adv = rd.u8() as i8;
        rd.skip(4);
        let ball = [rd.f32(), rd.f32(), rd.f32(), rd.f32()];
        let (nb, ny) = (rd.u8() as usize, rd.u8() as usize);
        let expected = state_len(nb + ny);
        if bytes.len() < expected {
            return Err(DecodeError::Truncated { needed: expected, got: bytes.len() });
        }
        if bytes.len() > expected {
            return Err(DecodeError::LengthMismatch { expected, got: bytes.len() });
        }
        let robot = |rd: &mut Reader| WireRobot {
            id: rd.u8(),
            x: rd.f32(),
            y: rd.f32(),
            theta: rd.f32(),
            vx: rd.f32(),
            vy: rd.f32(),
            omega: rd.f32(),
        };
        let blue = (0..nb).map(|_| robot(&mut rd)).collect();
        let yellow = (0..ny).map(|_| robot(&mut rd)).collect();
        Ok(Self { frame, timestamp, score_own, score_adv, ball, blue, yellow })
    }

    /// World as seen through the wire, at 32-bit precision.
    pub fn to_world(&self, params: &PhysicsParams) -> WorldState {
        let mut w = WorldState::new(params);
        w.ball.position = Vec2::new(self.ball[0] as f64, self.ball[1] as f64);
        w.ball.velocity = Vec2::new(self.ball[2] as f64, self.ball[3] as f64);
        let axle = params.robot.axle_length;
        w.blue = self.blue.iter().map(|r| r.to_state(Team::Blue, axle)).collect();
        w.yellow = self.yellow.iter().map(|r| r.to_state(Team::Yellow, axle)).collect();
        w.frame = self.frame as u64;
        w.score = Score { blue: self.score_own as i32, yellow: self.score_adv as i32 };
        w
    }
}

/// Per-robot action mode byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireMode {
    Wheels = 0,
    HighLevel = 1,
    Discrete = 2,
}

impl WireMode {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Wheels),
            1 => Some(Self::HighLevel),
            2 => Some(Self::Discrete),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotCommand {
    pub id: u8,
    pub mode: WireMode,
    pub a: f32,
    pub b: f32,
}

impl RobotCommand {
    pub fn from_action(id: u8, action: &AgentAction) -> Self {
        let (mode, a, b) = match *action {
            AgentAction::Wheels(c) => (WireMode::Wheels, c.left as f32, c.right as f32),
            AgentAction::Continuous(h) => (WireMode::HighLevel, h.v as f32, h.omega as f32),
            AgentAction::Discrete(d) => (WireMode::Discrete, d.index() as f32, 0.0),
        };
        Self { id, mode, a, b }
    }

    /// Payload as an action; discrete mode takes the integer part of the first value.
    pub fn to_action(&self) -> Result<AgentAction, DecodeError> {
        if !(self.a.is_finite() && self.b.is_finite()) {
            return Err(DecodeError::NonFinitePayload { id: self.id });
        }
        Ok(match self.mode {
            WireMode::Wheels => AgentAction::Wheels(WheelCommand::new(self.a as f64, self.b as f64)),
            WireMode::HighLevel => AgentAction::Continuous(HighLevelAction::new(self.a as f64, self.b as f64)),
            WireMode::Discrete => {
                let i = self.a.trunc();
                let action = if (1.0..=5.0).contains(&i) { DiscreteAction::from_index(i as u8) } else { None };
                AgentAction::Discrete(action.ok_or(DecodeError::InvalidDiscrete { id: self.id, value: self.a })?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandPacket {
    pub team: Team,
    pub commands: Vec<RobotCommand>,
}

impl CommandPacket {
    pub fn new(team: Team, commands: Vec<RobotCommand>) -> Self {
        Self { team, commands }
    }

    /// Wire form; at most 255 commands are written.
    pub fn encode(&self) -> Vec<u8> {
        let n = self.commands.len().min(255);
        let mut out = Vec::with_capacity(command_len(n));
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(TYPE_COMMAND);
        out.push(self.team.wire_id());
        out.push(n as u8);
        for c in &self.commands[..n] {
            out.push(c.id);
            out.push(c.mode as u8);
            out.extend_from_slice(&c.a.to_le_bytes());
            out.extend_from_slice(&c.b.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        check_header(bytes, TYPE_COMMAND, COMMAND_HEADER_LEN)?;
        let team = Team::from_wire_id(bytes[6]).ok_or(DecodeError::InvalidTeam(bytes[6]))?;
        let n = bytes[7] as usize;
        let expected = command_len(n);
        if bytes.len() < expected {
            return Err(DecodeError::Truncated { needed: expected, got: bytes.len() });
        }
        if bytes.len() > expected {
            return Err(DecodeError::LengthMismatch { expected, got: bytes.len() });
        }
        let mut rd = Reader::new(bytes, COMMAND_HEADER_LEN);
        let mut commands = Vec::with_capacity(n);
        for _ in 0..n {
            let id = rd.u8();
            let mode_byte = rd.u8();
            let mode = WireMode::from_byte(mode_byte).ok_or(DecodeError::InvalidMode(mode_byte))?;
            commands.push(RobotCommand { id, mode, a: rd.f32(), b: rd.f32() });
        }
        Ok(Self { team, commands })
    }
}

fn check_header(bytes: &[u8], kind: u8, min_len: usize) -> Result<(), DecodeError> {
    if bytes.len() < min_len {
        return Err(DecodeError::Truncated { needed: min_len, got: bytes.len() });
    }
    if &bytes[..4] != MAGIC {
        return Err(DecodeError::BadMagic([bytes[0], bytes[1], bytes[2], bytes[3]]));
    }
    if bytes[4] != VERSION {
        return Err(DecodeError::UnsupportedVersion(bytes[4]));
    }
    if bytes[5] != kind {
        return Err(DecodeError::WrongType { expected: kind, got: bytes[5] });
    }
    Ok(())
}

/// Cursor over a buffer whose length was already checked.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], pos: usize) -> Self {
        Self { buf, pos }
    }

    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.buf[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        out
    }

    fn skip(&mut self, n: usize) {
        self.pos += n;
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{kickoff_world, EpisodeConfig};
    use proptest::prelude::*;

    fn kickoff() -> WorldState {
        kickoff_world(&EpisodeConfig::default(), &PhysicsParams::default())
    }

    #[test]
    fn kickoff_packet_layout() {
        let bytes = StatePacket::from_world(&kickoff(), 0.0).unwrap().encode();
        assert_eq!(bytes.len(), 88);
        assert_eq!(&bytes[..4], b"VSRL");
        assert_eq!(bytes[4..6], [1, 1]);
        assert_eq!(bytes[16..20], [0; 4]);
        assert_eq!(bytes[36..38], [1, 1]);
        assert_eq!(bytes[38], 0);
        assert_eq!(f32::from_le_bytes(bytes[39..43].try_into().unwrap()), -20.0);
        assert_eq!(bytes, StatePacket::from_world(&kickoff(), 0.0).unwrap().encode());
    }

    #[test]
    fn state_roundtrip_through_world() {
        let params = PhysicsParams::default();
        let mut w = kickoff();
        w.ball.velocity = Vec2::new(12.5, -3.25);
        w.blue[0].wheel_left = 20.0;
        w.blue[0].wheel_right = 35.0;
        w.blue[0].refresh_twist(params.robot.axle_length);
        w.score = Score { blue: 2, yellow: -1 };
        w.frame = 77;
        let p = StatePacket::from_world(&w, 0.25).unwrap();
        let back = StatePacket::decode(&p.encode()).unwrap();
        assert_eq!(back, p);
        let w2 = back.to_world(&params);
        assert_eq!(w2.score, w.score);
        assert!((w2.blue[0].wheel_left - 20.0).abs() < 1e-4 && (w2.blue[0].wheel_right - 35.0).abs() < 1e-4);
        assert!((w2.blue[0].pose.theta - w.blue[0].pose.theta).abs() < 1e-6);
    }

    #[test]
    fn command_roundtrip_exact() {
        let p = CommandPacket::new(Team::Yellow, vec![RobotCommand::from_action(3, &AgentAction::Wheels(WheelCommand::new(50.0, -50.0)))]);
        let bytes = p.encode();
        assert_eq!(bytes.len(), 18);
        let back = CommandPacket::decode(&bytes).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.commands[0].to_action().unwrap(), AgentAction::Wheels(WheelCommand::new(50.0, -50.0)));
    }

    #[test]
    fn distinct_decode_errors() {
        let good = CommandPacket::new(Team::Blue, vec![RobotCommand { id: 0, mode: WireMode::HighLevel, a: 1.0, b: 2.0 }]).encode();
        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert_eq!(CommandPacket::decode(&bad), Err(DecodeError::BadMagic(*b"XXXX")));
        assert!(matches!(CommandPacket::decode(&good[..7]), Err(DecodeError::Truncated { .. })));
        assert!(matches!(CommandPacket::decode(&good[..12]), Err(DecodeError::Truncated { needed: 18, got: 12 })));
        let mut v = good.clone();
        v[4] = 2;
        assert_eq!(CommandPacket::decode(&v), Err(DecodeError::UnsupportedVersion(2)));
        let mut t = good.clone();
        t[5] = TYPE_STATE;
        assert_eq!(CommandPacket::decode(&t), Err(DecodeError::WrongType { expected: TYPE_COMMAND, got: TYPE_STATE }));
        let mut m = good.clone();
        m[9] = 7;
        assert_eq!(CommandPacket::decode(&m), Err(DecodeError::InvalidMode(7)));
        let mut team = good.clone();
        team[6] = 9;
        assert_eq!(CommandPacket::decode(&team), Err(DecodeError::InvalidTeam(9)));
        let mut long = good;
        long.push(0);
        assert_eq!(CommandPacket::decode(&long), Err(DecodeError::LengthMismatch { expected: 18, got: 19 }));
    }

    #[test]
    fn discrete_payload() {
        let c = RobotCommand { id: 1, mode: WireMode::Discrete, a: 4.9, b: 0.0 };
        assert_eq!(c.to_action().unwrap(), AgentAction::Discrete(DiscreteAction::Extend));
        for a in [0.5, 6.0, -1.0] {
            assert!(matches!(RobotCommand { a, ..c }.to_action(), Err(DecodeError::InvalidDiscrete { .. })));
        }
        assert!(matches!(RobotCommand { a: f32::NAN, ..c }.to_action(), Err(DecodeError::NonFinitePayload { id: 1 })));
    }

    proptest! {
        #[test]
        fn state_decode_encode_identity(frame in any::<u32>(), ts in 0.0f32..=1.0, so in any::<i8>(), sa in any::<i8>(),
                                        ball in prop::array::uniform4(-1e4f32..1e4),
                                        robots in prop::collection::vec((any::<u8>(), prop::array::uniform6(-1e3f32..1e3)), 0..8),
                                        split in 0usize..8) {
            let robots: Vec<WireRobot> = robots.into_iter()
                .map(|(id, v)| WireRobot { id, x: v[0], y: v[1], theta: v[2], vx: v[3], vy: v[4], omega: v[5] })
                .collect();
            let k = split.min(robots.len());
            let p = StatePacket { frame, timestamp: ts, score_own: so, score_adv: sa, ball,
                                  blue: robots[..k].to_vec(), yellow: robots[k..].to_vec() };
            let bytes = p.encode();
            prop_assert_eq!(bytes.len(), p.encoded_len());
            prop_assert_eq!(StatePacket::decode(&bytes).unwrap(), p);
        }

        #[test]
        fn command_decode_encode_identity(team in 0u8..2,
                                          cmds in prop::collection::vec((any::<u8>(), 0u8..3, -1e3f32..1e3, -1e3f32..1e3), 0..20)) {
            let commands = cmds.into_iter()
                .map(|(id, m, a, b)| RobotCommand { id, mode: WireMode::from_byte(m).unwrap(), a, b })
                .collect();
            let p = CommandPacket::new(Team::from_wire_id(team).unwrap(), commands);
            prop_assert_eq!(CommandPacket::decode(&p.encode()).unwrap(), p);
        }

        #[test]
        fn decoders_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
            let _ = CommandPacket::decode(&bytes);
            let _ = StatePacket::decode(&bytes);
        }
    }
}
