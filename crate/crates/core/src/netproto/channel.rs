//! Reality-gap channel: random packet loss and per-direction delivery delays.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::NetError;
use crate::rng::{seeded, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelModel {
    /// Mean delay of state packets (s).
    pub sensing_latency_mean: f64,
    /// Standard deviation of the state delay (s); samples are floored at 0.
    pub sensing_latency_sd: f64,
    /// Constant delay of command packets (s).
    pub command_delay: f64,
    /// Probability that any single packet is lost.
    pub loss_probability: f64,
    pub seed: u64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self { sensing_latency_mean: 0.090, sensing_latency_sd: 0.010, command_delay: 300e-6, loss_probability: 0.0008, seed: 0 }
    }
}

impl ChannelModel {
    /// No loss, no delay.
    pub const IDEAL: ChannelModel =
        ChannelModel { sensing_latency_mean: 0.0, sensing_latency_sd: 0.0, command_delay: 0.0, loss_probability: 0.0, seed: 0 };

    pub fn validate(&self) -> Result<(), NetError> {
        let delays = [self.sensing_latency_mean, self.sensing_latency_sd, self.command_delay];
        if !delays.iter().all(|d| d.is_finite() && *d >= 0.0) {
            return Err(NetError::InvalidConfig("channel delays must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(NetError::InvalidConfig("loss probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Simulator to agents (state broadcast).
    Sensing,
    /// Agents to simulator.
    Command,
}

/// Seeded instance of a [`ChannelModel`].
#[derive(Debug, Clone)]
pub struct Channel {
    model: ChannelModel,
    rng: SimRng,
    latency: Normal<f64>,
}

impl Channel {
    pub fn new(model: ChannelModel) -> Result<Self, NetError> {
        model.validate()?;
        let latency = Normal::new(model.sensing_latency_mean, model.sensing_latency_sd)
            .map_err(|e| NetError::InvalidConfig(e.to_string()))?;
        Ok(Self { model, rng: seeded(model.seed), latency })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn sample_delay(&mut self, direction: Direction) -> f64 {
        match direction {
            Direction::Sensing => self.latency.sample(&mut self.rng).max(0.0),
            Direction::Command => self.model.command_delay,
        }
    }

    /// Delivery time of a packet sent at `now`, or `None` if it is lost.
    pub fn transmit(&mut self, direction: Direction, now: f64) -> Option<f64> {
        let lost = self.model.loss_probability > 0.0 && self.rng.random::<f64>() < self.model.loss_probability;
        let delay = self.sample_delay(direction);
        (!lost).then_some(now + delay)
    }
}

struct Scheduled<T> {
    at: f64,
    seq: u64,
    item: T,
}

impl<T> PartialEq for Scheduled<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T> Eq for Scheduled<T> {}

impl<T> PartialOrd for Scheduled<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Scheduled<T> {
    /// Reversed so the max-heap pops the earliest delivery first, ties in send order.
    fn cmp(&self, other: &Self) -> Ordering {
        other.at.total_cmp(&self.at).then(other.seq.cmp(&self.seq))
    }
}

/// Packets in flight, released in delivery-time order.
pub struct DelayLine<T> {
    heap: BinaryHeap<Scheduled<T>>,
    seq: u64,
}

impl<T> Default for DelayLine<T> {
    fn default() -> Self {
        Self { heap: BinaryHeap::new(), seq: 0 }
    }
}

impl<T> DelayLine<T> {
    pub fn push(&mut self, at: f64, item: T) {
        self.heap.push(Scheduled { at, seq: self.seq, item });
        self.seq += 1;
    }

    /// Everything due at or before `now`, earliest first.
    pub fn pop_due(&mut self, now: f64) -> Vec<T> {
        let mut out = Vec::new();
        while self.heap.peek().is_some_and(|s| s.at <= now) {
            out.push(self.heap.pop().expect("peeked").item);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
