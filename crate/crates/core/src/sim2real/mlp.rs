//! Fully connected network with tanh hidden layers, input/output
//! standardisation, batch backpropagation and a versioned binary model file.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Sim2RealError, TrajectorySample, INPUT_DIM, OUTPUT_DIM};
use crate::rng::SimRng;

pub const MODEL_MAGIC: &[u8; 6] = b"VSMLP1";

/// Hidden-layer nonlinearity. The output layer is always affine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output.
    fn slope_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// Affine layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot(inputs: usize, outputs: usize, rng: &mut SimRng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
        Self { inputs, outputs, weights, bias: vec![0.0; outputs] }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.bias) {
            out.push(row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b);
        }
    }
}

/// Per-feature `(x - mean) / scale` standardisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    /// Mean and standard deviation of `rows`; near-constant features keep scale 1.
    pub fn fit<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Self {
        let mut n = 0usize;
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for row in rows {
            n += 1;
            for j in 0..dim {
                let d = row[j] - mean[j];
                mean[j] += d / n as f64;
                m2[j] += d * (row[j] - mean[j]);
            }
        }
        let scale = m2
            .iter()
            .map(|s| {
                let sd = if n > 0 { (s / n as f64).sqrt() } else { 0.0 };
                if sd > 1e-9 { sd } else { 1.0 }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn denormalize(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| v * s + m).collect()
    }

    fn is_valid(&self) -> bool {
        self.mean.len() == self.scale.len()
            && self.mean.iter().all(|m| m.is_finite())
            && self.scale.iter().all(|s| s.is_finite() && *s > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
    pub activation: Activation,
    pub input_norm: Normalization,
    pub output_norm: Normalization,
}

/// Gradients in the same layout as the layers: `(d weights, d bias)` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl MlpParams {
    /// Randomly initialised network with identity normalisation.
    pub fn init(sizes: &[usize], activation: Activation, rng: &mut SimRng) -> Result<Self, Sim2RealError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Sim2RealError::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        let layers = sizes.windows(2).map(|w| Layer::glorot(w[0], w[1], rng)).collect();
        Ok(Self {
            layers,
            activation,
            input_norm: Normalization::identity(sizes[0]),
            output_norm: Normalization::identity(sizes[sizes.len() - 1]),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn validate(&self) -> Result<(), Sim2RealError> {
        if self.layers.is_empty() {
            return Err(Sim2RealError::Shape("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Sim2RealError::Shape(format!("layer {i} buffers do not match {}x{}", l.outputs, l.inputs)));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return Err(Sim2RealError::Shape(format!("layer {i} expects {} inputs, previous emits {}", l.inputs, self.layers[i - 1].outputs)));
            }
        }
        if self.input_norm.dim() != self.input_dim() || self.output_norm.dim() != self.output_dim() {
            return Err(Sim2RealError::Shape("normalization dimensions do not match the network".into()));
        }
        if !self.input_norm.is_valid() || !self.output_norm.is_valid() {
            return Err(Sim2RealError::Shape("normalization statistics must be finite with positive scales".into()));
        }
        Ok(())
    }

    /// Network output in normalised target units, keeping every layer's activations.
    fn forward_normalized(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(self.input_norm.normalize(x));
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(&acts[i], &mut z);
            if i < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            acts.push(z);
        }
        acts
    }

    /// Normalise, run the layers, de-normalise.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, Sim2RealError> {
        if input.len() != self.input_dim() {
            return Err(Sim2RealError::Shape(format!("expected {} inputs, got {}", self.input_dim(), input.len())));
        }
        if !input.iter().all(|v| v.is_finite()) {
            return Err(Sim2RealError::NonFiniteInput);
        }
        let acts = self.forward_normalized(input);
        Ok(self.output_norm.denormalize(acts.last().expect("at least the input")))
    }

    /// Mean squared error in normalised output units over `samples`.
    pub fn loss(&self, samples: &[TrajectorySample]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        for s in samples {
            let acts = self.forward_normalized(&s.input);
            let t = self.output_norm.normalize(&s.target);
            total += acts.last().unwrap().iter().zip(&t).map(|(y, t)| (y - t).powi(2)).sum::<f64>();
        }
        total / (samples.len() * self.output_dim()) as f64
    }

    /// Loss and its gradient with respect to every weight and bias.
    pub fn loss_and_gradients(&self, samples: &[TrajectorySample]) -> (f64, Gradients) {
        let mut grads = Gradients {
            layers: self.layers.iter().map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()])).collect(),
        };
        if samples.is_empty() {
            return (0.0, grads);
        }
        let denom = (samples.len() * self.output_dim()) as f64;
        let mut total = 0.0;
        for s in samples {
            let acts = self.forward_normalized(&s.input);
            let t = self.output_norm.normalize(&s.target);
            let out = acts.last().unwrap();
            let mut delta: Vec<f64> = out.iter().zip(&t).map(|(y, t)| y - t).collect();
            total += delta.iter().map(|d| d * d).sum::<f64>();
            delta.iter_mut().for_each(|d| *d *= 2.0 / denom);
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let a_in = &acts[l];
                let (gw, gb) = &mut grads.layers[l];
                for (o, d) in delta.iter().enumerate() {
                    gb[o] += d;
                    for (g, a) in gw[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(a_in) {
                        *g += d * a;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for (row, d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += w * d;
                        }
                    }
                    for (p, a) in prev.iter_mut().zip(a_in) {
                        *p *= self.activation.slope_from_output(*a);
                    }
                    delta = prev;
                }
            }
        }
        (total / denom, grads)
    }

    /// Mutable views of all parameter tensors: weights then bias, layer by layer.
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weights, &mut l.bias]).collect()
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), Sim2RealError> {
        self.validate()?;
        if self.layers.len() > 1 && self.activation != Activation::Tanh {
            return Err(Sim2RealError::ModelFile("the model format stores tanh hidden layers only".into()));
        }
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        for l in &self.layers {
            w.write_all(&(l.inputs as u32).to_le_bytes())?;
            w.write_all(&(l.outputs as u32).to_le_bytes())?;
        }
        let mut put = |values: &[f64]| -> std::io::Result<()> {
            for v in values {
                w.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        };
        for l in &self.layers {
            put(&l.weights)?;
            put(&l.bias)?;
        }
        put(&self.input_norm.mean)?;
        put(&self.input_norm.scale)?;
        put(&self.output_norm.mean)?;
        put(&self.output_norm.scale)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, Sim2RealError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, Sim2RealError> {
        let truncated = |_| Sim2RealError::ModelFile("truncated model file".into());
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MODEL_MAGIC {
            return Err(Sim2RealError::ModelFile("bad magic".into()));
        }
        let mut u32_buf = [0u8; 4];
        let mut read_u32 = |r: &mut dyn Read| -> Result<usize, Sim2RealError> {
            r.read_exact(&mut u32_buf).map_err(truncated)?;
            Ok(u32::from_le_bytes(u32_buf) as usize)
        };
        let count = read_u32(&mut r)?;
        if count == 0 || count > 64 {
            return Err(Sim2RealError::ModelFile(format!("implausible layer count {count}")));
        }
        let mut dims = Vec::with_capacity(count);
        for _ in 0..count {
            let (i, o) = (read_u32(&mut r)?, read_u32(&mut r)?);
            if i == 0 || o == 0 || i > 1 << 16 || o > 1 << 16 {
                return Err(Sim2RealError::ModelFile(format!("implausible layer shape {o}x{i}")));
            }
            dims.push((i, o));
        }
        let read_f64s = |r: &mut dyn Read, n: usize| -> Result<Vec<f64>, Sim2RealError> {
            let mut out = Vec::with_capacity(n);
            let mut b = [0u8; 8];
            for _ in 0..n {
                r.read_exact(&mut b).map_err(truncated)?;
                out.push(f64::from_le_bytes(b));
            }
            Ok(out)
        };
        let mut layers = Vec::with_capacity(count);
        for &(i, o) in &dims {
            let weights = read_f64s(&mut r, i * o)?;
            let bias = read_f64s(&mut r, o)?;
            layers.push(Layer { inputs: i, outputs: o, weights, bias });
        }
        let (n_in, n_out) = (dims[0].0, dims[count - 1].1);
        let input_norm = Normalization { mean: read_f64s(&mut r, n_in)?, scale: read_f64s(&mut r, n_in)? };
        let output_norm = Normalization { mean: read_f64s(&mut r, n_out)?, scale: read_f64s(&mut r, n_out)? };
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Sim2RealError::ModelFile("trailing bytes after model".into()));
        }
        let params = Self { layers, activation: Activation::Tanh, input_norm, output_norm };
        params.validate().map_err(|e| Sim2RealError::ModelFile(e.to_string()))?;
        Ok(params)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, Sim2RealError> {
        Self::read_from(bytes)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), Sim2RealError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, Sim2RealError> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Default adaptor shape.
pub const DEFAULT_SIZES: [usize; 4] = [INPUT_DIM, 64, 64, OUTPUT_DIM];
