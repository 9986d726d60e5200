//! Inverse-dynamics adaptor for sim-to-real transfer.
//!
//! A small network maps the motion a policy asks for, plus the motion
//! observed on the previous step, to the wheel speeds that produce it on the
//! target plant. Data comes from exciting the plant with random commands; the
//! adaptor is judged by closed-loop steps-to-goal of a scripted attacker.

mod eval;
mod mlp;
mod plant;
mod train;

use serde::{Deserialize, Serialize};

use crate::env::EnvError;

pub use eval::{adapt, compare_adaptation, eval_closed_loop, fit_adaptor, AdaptationReport, EvalConfig, EvalMetrics};
pub use mlp::{Activation, Gradients, Layer, MlpParams, Normalization, DEFAULT_SIZES, MODEL_MAGIC};
pub use plant::{
    collect_log, collect_runs, collect_trajectories, read_log, samples_from_log, write_log, Actuator, CollectConfig,
    LogRow, PlantChannel, PseudoRealPlant, LOG_HEADER,
};
pub use train::{rmse, synthetic_identity_dataset, synthetic_identity_log, train, EpochLoss, TrainConfig, TrainedModel};

pub const INPUT_DIM: usize = 4;
pub const OUTPUT_DIM: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum Sim2RealError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("network input contains non-finite values")]
    NonFiniteInput,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sample {0} is not finite")]
    NonFiniteSample(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// One supervised pair: `[v_d, w_d, v_prev, w_prev] -> [V_l, V_r]` (cm/s, rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub input: [f64; INPUT_DIM],
    pub target: [f64; OUTPUT_DIM],
}

impl TrajectorySample {
    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.target).all(|v| v.is_finite())
    }
}

/// What fills the "previous step" half of the adaptor input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptorInput {
    /// Body speeds measured on the previous step.
    #[default]
    ObservedSpeeds,
    /// Body speeds implied by the previous wheel command.
    PreviousCommands,
}
