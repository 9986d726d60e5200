//! Robot-soccer simulation kit for reinforcement learning and sim-to-real studies.

pub mod action;
pub mod config;
pub mod env;
pub mod manifest;
pub mod metrics;
pub mod netproto;
pub mod physics;
pub mod policy;
pub mod replay;
pub mod reward;
pub mod rng;
pub mod rollout;
pub mod sim2real;
pub mod stats;
