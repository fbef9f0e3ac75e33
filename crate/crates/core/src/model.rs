//! Kind-dispatched model loading and the deterministic working-set
//! formulas used by benchmarking and the inference server.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fmt::{Reader, KIND_FLOAT_MLP, KIND_FOREST, KIND_QUANT_MLP};
use crate::forest::Forest;
use crate::mlp::MlpModel;
use crate::quant::QuantizedMlpModel;

/// Fixed per-inference bookkeeping bytes added to every working-set
/// figure (loop state, argmax scratch).
pub const FIXED_SCRATCH_BYTES: usize = 64;

/// Activation element width of the float path (f32 storage).
const FLOAT_ELEM: usize = 4;
/// Operand element width of the quantized path (int8).
const QUANT_ELEM: usize = 1;
/// In-memory bytes of one tree node: u16 feature + f32 threshold +
/// u32 left + u32 right + u16 leaf class.
const NODE_BYTES: usize = 16;

/// Working set of a float MLP: the largest in+out activation buffer pair
/// at float32 width, plus softmax output and fixed scratch.
pub fn mlp_working_set(model: &MlpModel) -> usize {
    let peak = model
        .layers
        .iter()
        .map(|l| (l.in_dim + l.out_dim) * FLOAT_ELEM)
        .max()
        .unwrap_or(0);
    peak + model.n_classes * 4 + FIXED_SCRATCH_BYTES
}

/// Working set of a quantized MLP: the largest in+out operand buffer pair
/// at int8 width, plus softmax output and fixed scratch.
pub fn quant_working_set(model: &QuantizedMlpModel) -> usize {
    let peak = model
        .layers
        .iter()
        .map(|l| (l.weights.in_dim + l.weights.out_dim) * QUANT_ELEM)
        .max()
        .unwrap_or(0);
    peak + model.n_classes * 4 + FIXED_SCRATCH_BYTES
}

/// Working set of a forest: the resident node records traversed during a
/// prediction plus the vote counters and fixed scratch.
pub fn forest_working_set(model: &Forest) -> usize {
    model.total_nodes() * NODE_BYTES + model.n_classes * 4 + FIXED_SCRATCH_BYTES
}

/// Any serialized model, dispatched on the header kind byte.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    FloatMlp(MlpModel),
    QuantMlp(QuantizedMlpModel),
    Forest(Forest),
}

impl LoadedModel {
    pub fn from_bytes(bytes: &[u8]) -> Result<LoadedModel> {
        let kind = Reader::new(bytes).header()?;
        match kind {
            KIND_FLOAT_MLP => Ok(LoadedModel::FloatMlp(MlpModel::deserialize(bytes)?)),
            KIND_QUANT_MLP => Ok(LoadedModel::QuantMlp(QuantizedMlpModel::deserialize(bytes)?)),
            KIND_FOREST => Ok(LoadedModel::Forest(Forest::deserialize(bytes)?)),
            other => Err(Error::format_at(
                5,
                format!("artifact kind {other} is not a model"),
            )),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<LoadedModel> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LoadedModel::FloatMlp(_) => "float-mlp",
            LoadedModel::QuantMlp(_) => "quant-mlp",
            LoadedModel::Forest(_) => "forest",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            LoadedModel::FloatMlp(m) => m.n_features,
            LoadedModel::QuantMlp(m) => m.n_features,
            LoadedModel::Forest(m) => m.n_features,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            LoadedModel::FloatMlp(m) => m.n_classes,
            LoadedModel::QuantMlp(m) => m.n_classes,
            LoadedModel::Forest(m) => m.n_classes,
        }
    }

    /// `(class, confidence)` for a raw (pre-standardization) feature row;
    /// the bundled scaler is applied inside.
    pub fn infer_raw(&self, x_raw: &[f64]) -> Result<(u8, f32)> {
        match self {
            LoadedModel::FloatMlp(m) => m.infer_raw(x_raw),
            LoadedModel::QuantMlp(m) => m.infer_raw(x_raw),
            LoadedModel::Forest(m) => m.infer_raw(x_raw),
        }
    }

    pub fn working_set_bytes(&self) -> usize {
        match self {
            LoadedModel::FloatMlp(m) => mlp_working_set(m),
            LoadedModel::QuantMlp(m) => quant_working_set(m),
            LoadedModel::Forest(m) => forest_working_set(m),
        }
    }

    pub fn serialize(&self) -> Vec<u8> {
        match self {
            LoadedModel::FloatMlp(m) => m.serialize(),
            LoadedModel::QuantMlp(m) => m.serialize(),
            LoadedModel::Forest(m) => m.serialize(),
        }
    }
}
