//! Binary UDP protocol: state broadcast, command intake and an optional
//! loss/latency channel.

mod channel;
mod client;
mod packet;
mod server;

pub use channel::{Channel, ChannelModel, DelayLine, Direction};
pub use client::Client;
pub use packet::{
    command_len, state_len, CommandPacket, RobotCommand, StatePacket, WireMode, WireRobot, COMMAND_HEADER_LEN,
    COMMAND_ROBOT_LEN, MAGIC, MAX_COMMAND_LEN, STATE_FIXED_LEN, STATE_HEADER_LEN, STATE_ROBOT_LEN, TYPE_COMMAND,
    TYPE_STATE, VERSION,
};
pub use server::{
    spawn, IngestReport, ServerConfig, ServerCore, ServerHandle, ServerStats, DEFAULT_COMMAND_PORT, DEFAULT_STATE_PORT,
};

/// Why a datagram could not be decoded.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("wrong packet type {got:#04x} (expected {expected:#04x})")]
    WrongType { expected: u8, got: u8 },
    #[error("truncated packet: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("packet length {got} does not match the declared {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid action mode {0}")]
    InvalidMode(u8),
    #[error("invalid team byte {0}")]
    InvalidTeam(u8),
    #[error("robot {id}: discrete action {value} outside 1..=5")]
    InvalidDiscrete { id: u8, value: f32 },
    #[error("robot {id}: non-finite payload")]
    NonFinitePayload { id: u8 },
}

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("cannot bind socket: {0}")]
    Bind(std::io::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("datagram of {0} bytes exceeds the largest command packet")]
    Oversized(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error("server thread panicked")]
    ThreadPanicked,
}
