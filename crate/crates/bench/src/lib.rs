//! Shared inputs for the toolchain benchmarks.

use qrind_core::{Activation, Encoding, MlpLayer, MlpModel, Program, Value};

pub const MACHINE_CHECK: &str = include_str!("../../core/fixtures/machine_check.qri");

pub fn machine_check() -> Program {
    qrind_core::parse_ir(MACHINE_CHECK).expect("fixture parses")
}

/// Inputs that take the longest path through the machine check.
pub fn problem_inputs() -> Vec<Value> {
    vec![Value::float32(60.0), Value::float32(1000.0), Value::bool(true)]
}

/// Dense model with deterministic small weights.
pub fn dense_model(widths: &[usize], activation: Activation) -> MlpModel {
    let mut seed = 0x9e37_79b9_u32;
    let mut next = move || {
        seed ^= seed << 13;
        seed ^= seed >> 17;
        seed ^= seed << 5;
        f64::from(seed) / f64::from(u32::MAX) - 0.5
    };
    let layers = widths
        .windows(2)
        .map(|w| {
            let weights = (0..w[1]).map(|_| (0..w[0]).map(|_| next()).collect()).collect();
            let biases = (0..w[1]).map(|_| next()).collect();
            MlpLayer::new(weights, biases, activation, Encoding::Float32).unwrap()
        })
        .collect();
    MlpModel::new(widths[0], layers).unwrap()
}
