//! Mini-batch Adam training of the adaptor network.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::plant::LogRow;
use super::mlp::{Activation, MlpParams, Normalization, DEFAULT_SIZES};
use super::{Sim2RealError, TrajectorySample};
use crate::physics::{forward_kinematics, RobotSpec};
use crate::rng::{derive_seed, seeded, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of the (shuffled) dataset used for training; the rest validates.
    pub train_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Learning rate multiplier applied once per epoch.
    pub lr_decay: f64,
    pub hidden: Vec<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 64,
            learning_rate: 2e-3,
            seed: 0,
            train_fraction: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            lr_decay: 0.93,
            hidden: DEFAULT_SIZES[1..DEFAULT_SIZES.len() - 1].to_vec(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), Sim2RealError> {
        let bad = |m: &str| Err(Sim2RealError::InvalidConfig(m.into()));
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train_fraction must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("Adam coefficients out of range");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    /// 0 is the untrained network.
    pub epoch: usize,
    pub train: f64,
    pub validation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: MlpParams,
    pub history: Vec<EpochLoss>,
    /// Validation split, kept for reporting.
    pub validation: Vec<TrajectorySample>,
}

impl TrainedModel {
    pub fn initial_validation_loss(&self) -> f64 {
        self.history.first().map_or(f64::NAN, |h| h.validation)
    }

    pub fn final_validation_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |h| h.validation)
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(params: &mut MlpParams) -> Self {
        let shapes: Vec<usize> = params.tensors_mut().iter().map(|t| t.len()).collect();
        Self { m: shapes.iter().map(|&n| vec![0.0; n]).collect(), v: shapes.iter().map(|&n| vec![0.0; n]).collect(), t: 0 }
    }

    fn step(&mut self, params: &mut MlpParams, grads: &[&Vec<f64>], lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (k, tensor) in params.tensors_mut().into_iter().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], grads[k]);
            for i in 0..tensor.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                tensor[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + cfg.epsilon);
            }
        }
    }
}

/// Split, fit normalisation on the training part, then run Adam.
pub fn train(dataset: &[TrajectorySample], config: &TrainConfig) -> Result<TrainedModel, Sim2RealError> {
    config.validate()?;
    if dataset.len() < 2 {
        return Err(Sim2RealError::EmptyDataset);
    }
    if let Some(i) = dataset.iter().position(|s| !s.is_finite()) {
        return Err(Sim2RealError::NonFiniteSample(i));
    }
    let mut rng = seeded(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let n_train = ((dataset.len() as f64 * config.train_fraction).round() as usize).clamp(1, dataset.len() - 1);
    let mut train_set: Vec<TrajectorySample> = order[..n_train].iter().map(|&i| dataset[i]).collect();
    let validation: Vec<TrajectorySample> = order[n_train..].iter().map(|&i| dataset[i]).collect();

    let mut sizes = vec![super::INPUT_DIM];
    sizes.extend(&config.hidden);
    sizes.push(super::OUTPUT_DIM);
    let mut init_rng: SimRng = seeded(derive_seed(config.seed, 1));
    let mut params = MlpParams::init(&sizes, Activation::Tanh, &mut init_rng)?;
    params.input_norm = Normalization::fit(train_set.iter().map(|s| s.input.as_slice()), super::INPUT_DIM);
    params.output_norm = Normalization::fit(train_set.iter().map(|s| s.target.as_slice()), super::OUTPUT_DIM);

    let mut history = vec![EpochLoss { epoch: 0, train: params.loss(&train_set), validation: params.loss(&validation) }];
    let mut adam = Adam::new(&mut params);
    let mut lr = config.learning_rate;
    for epoch in 1..=config.epochs {
        train_set.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in train_set.chunks(config.batch_size) {
            let (loss, grads) = params.loss_and_gradients(batch);
            sum += loss * batch.len() as f64;
            let flat: Vec<&Vec<f64>> = grads.layers.iter().flat_map(|(w, b)| [w, b]).collect();
            adam.step(&mut params, &flat, lr, config);
        }
        lr *= config.lr_decay;
        history.push(EpochLoss { epoch, train: sum / train_set.len() as f64, validation: params.loss(&validation) });
    }
    Ok(TrainedModel { params, history, validation })
}

/// Root-mean-square error of the network's de-normalised outputs (target units).
pub fn rmse(params: &MlpParams, samples: &[TrajectorySample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for s in samples {
        let y = params.forward(&s.input).unwrap_or_else(|_| vec![f64::NAN; super::OUTPUT_DIM]);
        total += y.iter().zip(&s.target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    (total / (samples.len() * super::OUTPUT_DIM) as f64).sqrt()
}

/// Exact inverse-kinematics pairs: wheel speeds drawn uniformly over the
/// actuator range, the body speeds they produce as the desired motion, and an
/// unrelated previous observation.
pub fn synthetic_identity_dataset(n: usize, robot: &RobotSpec, seed: u64) -> Vec<TrajectorySample> {
    let mut rng = seeded(seed);
    let vm = robot.v_max;
    let draw = |rng: &mut SimRng| forward_kinematics(rng.random_range(-vm..=vm), rng.random_range(-vm..=vm), robot.axle_length);
    (0..n)
        .map(|_| {
            let (v, w) = draw(&mut rng);
            let (vp, wp) = draw(&mut rng);
            let half = w * robot.axle_length / 2.0;
            TrajectorySample { input: [v, w, vp, wp], target: [v - half, v + half] }
        })
        .collect()
}

/// [`synthetic_identity_dataset`] written as a collection log, one row per sample.
pub fn synthetic_identity_log(n: usize, robot: &RobotSpec, seed: u64, dt: f64) -> Vec<LogRow> {
    let to_cmd = |s: f64| s * 100.0 / robot.v_max;
    synthetic_identity_dataset(n, robot, seed)
        .into_iter()
        .enumerate()
        .map(|(k, s)| LogRow {
            t: k as f64 * dt,
            v_d: s.input[0],
            w_d: s.input[1],
            v_obs: s.input[2],
            w_obs: s.input[3],
            vl_cmd: to_cmd(s.target[0]),
            vr_cmd: to_cmd(s.target[1]),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { train_fraction: 1.0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        let cfg = TrainConfig::default();
        assert!(matches!(train(&[], &cfg), Err(Sim2RealError::EmptyDataset)));
        let mut data = synthetic_identity_dataset(10, &RobotSpec::default(), 1);
        data[3].input[0] = f64::NAN;
        assert!(matches!(train(&data, &cfg), Err(Sim2RealError::NonFiniteSample(3))));
    }

    #[test]
    fn synthetic_targets_in_range() {
        let robot = RobotSpec::default();
        for s in synthetic_identity_dataset(1000, &robot, 3) {
            assert!(s.target.iter().all(|t| t.abs() <= robot.v_max + 1e-9));
            let (v, w) = forward_kinematics(s.target[0], s.target[1], robot.axle_length);
            assert!((v - s.input[0]).abs() < 1e-9 && (w - s.input[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn synthetic_log_matches_dataset() {
        let robot = RobotSpec::default();
        let rows = synthetic_identity_log(200, &robot, 6, 1.0 / 30.0);
        let from_log = crate::sim2real::samples_from_log(&rows, &robot, crate::sim2real::AdaptorInput::ObservedSpeeds);
        for (a, b) in from_log.iter().zip(synthetic_identity_dataset(200, &robot, 6)) {
            assert_eq!(a.input, b.input);
            assert!(a.target.iter().zip(&b.target).all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn constant_target_converges() {
        let mut data = synthetic_identity_dataset(2000, &RobotSpec::default(), 4);
        data.iter_mut().for_each(|s| s.target = [12.0, -7.0]);
        let cfg = TrainConfig { epochs: 30, hidden: vec![8], learning_rate: 1e-2, ..Default::default() };
        let model = train(&data, &cfg).unwrap();
        assert!(model.final_validation_loss() < 1e-3 * model.initial_validation_loss(), "{:?}", model.history);
        let y = model.params.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((y[0] - 12.0).abs() < 0.05 && (y[1] + 7.0).abs() < 0.05, "{y:?}");
    }

    #[test]
    fn training_is_deterministic_and_learns() {
        let data = synthetic_identity_dataset(2000, &RobotSpec::default(), 5);
        let cfg = TrainConfig { epochs: 8, hidden: vec![16, 16], seed: 9, ..Default::default() };
        let a = train(&data, &cfg).unwrap();
        let b = train(&data, &cfg).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.history, b.history);
        assert!(a.final_validation_loss() * 10.0 < a.initial_validation_loss());
    }
}
