//! Multilayer perceptron representation and run-forward inference.
//!
//! Each layer computes `out_i = f(sum_j w_ij * x_j + b_i)` for every neuron
//! `i` of the upper layer. Coefficients may be stored as binary16 or binary32
//! in bytecode, but inference always runs in f64.

use std::fmt;

use thiserror::Error;

use crate::ir::{Coefficients, Instruction, MlKind, RegisterRef};

/// Negative-side slope of [`Activation::LeakyRelu`].
pub const LEAKY_RELU_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Linear,
    Sigmoid,
    Tanh,
    Relu,
    LeakyRelu,
    /// Normalizes across the whole layer.
    Softmax,
}

impl Activation {
    pub const ALL: [Activation; 6] = [
        Activation::Linear,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
        Activation::LeakyRelu,
        Activation::Softmax,
    ];

    /// 3-bit wire code.
    pub fn code(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Sigmoid => 1,
            Activation::Tanh => 2,
            Activation::Relu => 3,
            Activation::LeakyRelu => 4,
            Activation::Softmax => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Activation::ALL.get(usize::from(code)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Linear => "LINEAR",
            Activation::Sigmoid => "SIGMOID",
            Activation::Tanh => "TANH",
            Activation::Relu => "RELU",
            Activation::LeakyRelu => "LEAKY_RELU",
            Activation::Softmax => "SOFTMAX",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let upper = name.to_ascii_uppercase();
        Activation::ALL.into_iter().find(|a| a.name() == upper)
    }

    /// Applies the activation in place to a layer's pre-activations.
    pub fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Linear => {}
            Activation::Sigmoid => z.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::LeakyRelu => z.iter_mut().for_each(|v| {
                if *v < 0.0 {
                    *v *= LEAKY_RELU_SLOPE
                }
            }),
            Activation::Softmax => {
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in z.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                z.iter_mut().for_each(|v| *v /= sum);
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Logistic function, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Storage precision of layer coefficients in bytecode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    Float16,
    Float32,
}

impl Encoding {
    pub fn bytes_per_coefficient(self) -> usize {
        match self {
            Encoding::Float16 => 2,
            Encoding::Float32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Float16 => "FLOAT16",
            Encoding::Float32 => "FLOAT32",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "FLOAT16" | "F16" => Some(Encoding::Float16),
            "FLOAT32" | "F32" => Some(Encoding::Float32),
            _ => None,
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlpError {
    #[error("dimension mismatch: expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("layer with {neurons} neurons and fan-in {fan_in} needs {expected} coefficients, got {found}")]
    BadCoefficientCount { neurons: usize, fan_in: usize, expected: usize, found: usize },
    #[error("layer {layer} has fan-in {found}, previous layer produces {expected}")]
    FanInMismatch { layer: usize, expected: usize, found: usize },
    #[error("a layer needs at least one neuron and one input")]
    EmptyLayer,
    #[error("a model needs at least one layer")]
    NoLayers,
}

/// One fully connected layer. `weights` is row-major, `fan_out` rows of
/// `fan_in` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpLayer {
    fan_in: usize,
    fan_out: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
    encoding: Encoding,
}

impl MlpLayer {
    pub fn new(
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
        activation: Activation,
        encoding: Encoding,
    ) -> Result<Self, MlpError> {
        let fan_out = weights.len();
        let fan_in = weights.first().map_or(0, Vec::len);
        if fan_out == 0 || fan_in == 0 {
            return Err(MlpError::EmptyLayer);
        }
        if let Some(row) = weights.iter().find(|r| r.len() != fan_in) {
            return Err(MlpError::DimensionMismatch { expected: fan_in, found: row.len() });
        }
        if biases.len() != fan_out {
            return Err(MlpError::DimensionMismatch { expected: fan_out, found: biases.len() });
        }
        Ok(Self {
            fan_in,
            fan_out,
            weights: weights.into_iter().flatten().collect(),
            biases,
            activation,
            encoding,
        })
    }

    /// Builds a layer from the flat coefficient order used by NNLAYER.
    pub fn from_coefficients(
        fan_in: usize,
        neurons: usize,
        activation: Activation,
        encoding: Encoding,
        coefficients: &[f64],
    ) -> Result<Self, MlpError> {
        if fan_in == 0 || neurons == 0 {
            return Err(MlpError::EmptyLayer);
        }
        let expected = neurons * (fan_in + 1);
        if coefficients.len() != expected {
            return Err(MlpError::BadCoefficientCount {
                neurons,
                fan_in,
                expected,
                found: coefficients.len(),
            });
        }
        let mut weights = Vec::with_capacity(neurons * fan_in);
        let mut biases = Vec::with_capacity(neurons);
        for row in coefficients.chunks_exact(fan_in + 1) {
            weights.extend_from_slice(&row[..fan_in]);
            biases.push(row[fan_in]);
        }
        Ok(Self { fan_in, fan_out: neurons, weights, biases, activation, encoding })
    }

    /// Inverse of [`MlpLayer::from_coefficients`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coefficient_count());
        for (row, bias) in self.weights.chunks_exact(self.fan_in).zip(&self.biases) {
            out.extend_from_slice(row);
            out.push(*bias);
        }
        out
    }

    pub fn fan_in(&self) -> usize {
        self.fan_in
    }

    pub fn fan_out(&self) -> usize {
        self.fan_out
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Weight from lower neuron `j` to upper neuron `i`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.fan_in + j]
    }

    pub fn weight_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks_exact(self.fan_in)
    }

    pub fn coefficient_count(&self) -> usize {
        self.fan_out * (self.fan_in + 1)
    }

    pub fn storage_bytes(&self) -> usize {
        self.coefficient_count() * self.encoding.bytes_per_coefficient()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        layer_forward(self, x)
    }
}

/// Runs one layer forward.
pub fn layer_forward(layer: &MlpLayer, x: &[f64]) -> Result<Vec<f64>, MlpError> {
    if x.len() != layer.fan_in {
        return Err(MlpError::DimensionMismatch { expected: layer.fan_in, found: x.len() });
    }
    let mut z: Vec<f64> = layer
        .weight_rows()
        .zip(&layer.biases)
        .map(|(row, b)| row.iter().zip(x).map(|(w, xj)| w * xj).sum::<f64>() + b)
        .collect();
    layer.activation.apply(&mut z);
    Ok(z)
}

/// Input arity plus the ordered layers from input to output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input_arity: usize,
    layers: Vec<MlpLayer>,
}

impl MlpModel {
    pub fn new(input_arity: usize, layers: Vec<MlpLayer>) -> Result<Self, MlpError> {
        if layers.is_empty() {
            return Err(MlpError::NoLayers);
        }
        let mut expected = input_arity;
        for (k, layer) in layers.iter().enumerate() {
            if layer.fan_in != expected {
                return Err(MlpError::FanInMismatch { layer: k, expected, found: layer.fan_in });
            }
            expected = layer.fan_out;
        }
        Ok(Self { input_arity, layers })
    }

    pub fn input_arity(&self) -> usize {
        self.input_arity
    }

    pub fn layers(&self) -> &[MlpLayer] {
        &self.layers
    }

    /// Width of the last layer.
    pub fn output_arity(&self) -> usize {
        self.layers.last().map_or(self.input_arity, MlpLayer::fan_out)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        model_forward(self, x)
    }

    pub fn coefficient_count(&self) -> usize {
        coefficient_count(self)
    }

    pub fn storage_bytes(&self) -> usize {
        storage_bytes(self)
    }

    /// Same model with every layer's storage encoding replaced. Coefficients
    /// are not rounded; the bytecode does that when they are stored.
    pub fn with_encoding(mut self, encoding: Encoding) -> Self {
        for layer in &mut self.layers {
            layer.encoding = encoding;
        }
        self
    }

    /// The MLINPUT / NNLAYER / MLOUTPUT instruction block for this model.
    pub fn to_instructions(&self, source: RegisterRef, target: RegisterRef) -> Vec<Instruction> {
        let mut out = Vec::with_capacity(self.layers.len() + 2);
        out.push(Instruction::MlInput { kind: MlKind::Mlp, arity: self.input_arity as u64, source });
        for layer in &self.layers {
            out.push(Instruction::NnLayer {
                neurons: layer.fan_out as u64,
                activation: layer.activation,
                coefficients: Coefficients::from_f64(layer.encoding, &layer.flatten()),
            });
        }
        out.push(Instruction::MlOutput { target });
        out
    }
}

/// Folds [`layer_forward`] over the layers in order.
pub fn model_forward(model: &MlpModel, x: &[f64]) -> Result<Vec<f64>, MlpError> {
    if x.len() != model.input_arity {
        return Err(MlpError::DimensionMismatch { expected: model.input_arity, found: x.len() });
    }
    model.layers.iter().try_fold(x.to_vec(), |acc, layer| layer_forward(layer, &acc))
}

/// Total weights plus biases: the sum over layers of `fan_out * (fan_in + 1)`.
pub fn coefficient_count(model: &MlpModel) -> usize {
    model.layers.iter().map(MlpLayer::coefficient_count).sum()
}

/// Bytes taken by the coefficients at each layer's storage encoding.
pub fn storage_bytes(model: &MlpModel) -> usize {
    model.layers.iter().map(MlpLayer::storage_bytes).sum()
}
