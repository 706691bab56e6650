//! JSON model descriptions for `ml-import`.
//!
//! ```json
//! {
//!   "input_arity": 2,
//!   "layers": [
//!     { "neuron_count": 1, "activation": "SIGMOID", "encoding": "f32",
//!       "weights": [[0.01, 0.001]], "biases": [-1.5] }
//!   ]
//! }
//! ```
//!
//! `weights[i][j]` is the weight from input `j` to neuron `i`. `encoding` is
//! optional and defaults to `f32`.

use anyhow::{bail, Context, Result};
use qrind_core::{Activation, Encoding, MlpLayer, MlpModel};
use serde::Deserialize;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    input_arity: usize,
    layers: Vec<LayerFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    neuron_count: usize,
    activation: String,
    #[serde(default)]
    encoding: Option<String>,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

pub fn import(json: &str, encoding: Option<Encoding>) -> Result<MlpModel> {
    let file: ModelFile = serde_json::from_str(json).context("model file does not match the schema")?;
    if file.layers.is_empty() {
        bail!("model has no layers");
    }
    let mut layers = Vec::with_capacity(file.layers.len());
    for (k, l) in file.layers.into_iter().enumerate() {
        let activation = Activation::from_name(&l.activation)
            .with_context(|| format!("layer {k}: unknown activation `{}`", l.activation))?;
        let enc = match (encoding, &l.encoding) {
            (Some(e), _) => e,
            (None, Some(name)) => {
                Encoding::from_name(name).with_context(|| format!("layer {k}: unknown encoding `{name}`"))?
            }
            (None, None) => Encoding::Float32,
        };
        if l.weights.len() != l.neuron_count {
            bail!("layer {k}: neuron_count is {} but there are {} weight rows", l.neuron_count, l.weights.len());
        }
        let layer = MlpLayer::new(l.weights, l.biases, activation, enc).with_context(|| format!("layer {k}"))?;
        layers.push(layer);
    }
    Ok(MlpModel::new(file.input_arity, layers)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_neuron() {
        let m = import(
            r#"{"input_arity":2,"layers":[{"neuron_count":1,"activation":"sigmoid","weights":[[0.01,0.001]],"biases":[-1.5]}]}"#,
            None,
        )
        .unwrap();
        assert_eq!(m.coefficient_count(), 3);
        assert_eq!(m.layers()[0].encoding(), Encoding::Float32);
    }

    #[test]
    fn shape_errors() {
        assert!(import(r#"{"input_arity":2,"layers":[]}"#, None).is_err());
        let bad_rows = r#"{"input_arity":2,"layers":[{"neuron_count":2,"activation":"RELU","weights":[[1,2]],"biases":[0]}]}"#;
        assert!(import(bad_rows, None).is_err());
        let bad_fan_in = r#"{"input_arity":3,"layers":[{"neuron_count":1,"activation":"RELU","weights":[[1,2]],"biases":[0]}]}"#;
        assert!(import(bad_fan_in, None).is_err());
        let unknown = r#"{"input_arity":2,"layers":[{"neuron_count":1,"activation":"GELU","weights":[[1,2]],"biases":[0]}]}"#;
        assert!(import(unknown, None).is_err());
    }
}
