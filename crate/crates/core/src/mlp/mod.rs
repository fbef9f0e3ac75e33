//! Dense-network construction, training, and inference.

pub mod net;
pub mod train;

mod io;

pub use net::{log_sum_exp, softmax, DenseNet};
pub use train::{train, EarlyStopper, StopDecision, TrainConfig, TrainHistory};

use crate::dataset::ScalerParams;
use crate::error::{Error, Result};

/// Layer activation, as stored in the model format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Activation {
    None = 0,
    Relu = 1,
    Softmax = 2,
}

impl Activation {
    pub fn from_u8(v: u8) -> Option<Activation> {
        match v {
            0 => Some(Activation::None),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Softmax),
            _ => None,
        }
    }
}

/// Network architecture presets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArchSpec {
    /// Hidden layers `[16, 32, 32]`.
    Baseline,
    /// Twelve hidden layers of 64 units.
    Enhanced,
    /// Hidden layers `[8, 8, 8]`.
    Compact,
    /// Explicit hidden widths.
    Custom(Vec<usize>),
}

impl ArchSpec {
    pub fn hidden_dims(&self) -> Vec<usize> {
        match self {
            ArchSpec::Baseline => vec![16, 32, 32],
            ArchSpec::Enhanced => vec![64; 12],
            ArchSpec::Compact => vec![8, 8, 8],
            ArchSpec::Custom(dims) => dims.clone(),
        }
    }

    pub fn parse(s: &str) -> Result<ArchSpec> {
        match s {
            "baseline" => Ok(ArchSpec::Baseline),
            "enhanced" => Ok(ArchSpec::Enhanced),
            "compact" => Ok(ArchSpec::Compact),
            other => {
                let dims: std::result::Result<Vec<usize>, _> =
                    other.split(',').map(|p| p.trim().parse::<usize>()).collect();
                match dims {
                    Ok(d) if !d.is_empty() && d.iter().all(|&w| w >= 1) => Ok(ArchSpec::Custom(d)),
                    _ => Err(Error::Argument(format!(
                        "unknown architecture {other:?} (expected baseline, enhanced, compact, \
                         or a comma-separated width list)"
                    ))),
                }
            }
        }
    }
}

impl std::fmt::Display for ArchSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArchSpec::Baseline => write!(f, "baseline"),
            ArchSpec::Enhanced => write!(f, "enhanced"),
            ArchSpec::Compact => write!(f, "compact"),
            ArchSpec::Custom(d) => {
                let parts: Vec<String> = d.iter().map(|w| w.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// One dense layer with float32 parameter storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

/// Float MLP: float32 parameter storage, f64 arithmetic, bundled scaler
/// and label names so a serialized model is self-contained for serving.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
    pub n_features: usize,
    pub n_classes: usize,
    pub scaler: ScalerParams,
    pub label_names: Vec<String>,
}

/// Builds a network with Glorot-uniform weights and zero biases. The
/// scaler starts as identity; attach the fitted one with
/// [`MlpModel::with_preprocessing`] before serializing.
pub fn build_mlp(
    arch: &ArchSpec,
    n_features: usize,
    n_classes: usize,
    seed: u64,
) -> Result<MlpModel> {
    if n_features < 1 {
        return Err(Error::Argument("n_features must be >= 1".into()));
    }
    if n_classes < 2 {
        return Err(Error::Argument("n_classes must be >= 2".into()));
    }
    let hidden = arch.hidden_dims();
    if hidden.is_empty() || hidden.iter().any(|&w| w < 1) {
        return Err(Error::Argument(
            "architecture needs at least one hidden layer, all widths >= 1".into(),
        ));
    }
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(n_features);
    dims.extend_from_slice(&hidden);
    dims.push(n_classes);

    let net = DenseNet::glorot(dims, seed);
    Ok(MlpModel::from_net(
        &net,
        ScalerParams::identity(n_features),
        default_label_names(n_classes),
    ))
}

pub fn default_label_names(n_classes: usize) -> Vec<String> {
    use crate::dataset::MERGED_LABEL_NAMES;
    if n_classes == MERGED_LABEL_NAMES.len() {
        MERGED_LABEL_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..n_classes).map(|c| format!("class-{c}")).collect()
    }
}

impl MlpModel {
    /// Converts a training net to float32 storage: hidden layers ReLU,
    /// final layer softmax.
    pub fn from_net(net: &DenseNet, scaler: ScalerParams, label_names: Vec<String>) -> MlpModel {
        let mut layers = Vec::with_capacity(net.n_layers());
        let mut offset = 0;
        for l in 0..net.n_layers() {
            let (in_dim, out_dim) = (net.dims[l], net.dims[l + 1]);
            let weights: Vec<f32> = net.params[offset..offset + out_dim * in_dim]
                .iter()
                .map(|&p| p as f32)
                .collect();
            offset += out_dim * in_dim;
            let bias: Vec<f32> = net.params[offset..offset + out_dim]
                .iter()
                .map(|&p| p as f32)
                .collect();
            offset += out_dim;
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                weights,
                bias,
                activation: if l + 1 < net.n_layers() {
                    Activation::Relu
                } else {
                    Activation::Softmax
                },
            });
        }
        MlpModel {
            n_features: net.dims[0],
            n_classes: *net.dims.last().unwrap(),
            layers,
            scaler,
            label_names,
        }
    }

    /// Training view of the parameters (f32 values widened to f64).
    pub fn to_net(&self) -> DenseNet {
        let mut dims = vec![self.n_features];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        let mut params = Vec::with_capacity(DenseNet::param_count(&dims));
        for layer in &self.layers {
            params.extend(layer.weights.iter().map(|&w| w as f64));
            params.extend(layer.bias.iter().map(|&b| b as f64));
        }
        DenseNet { dims, params }
    }

    pub fn with_preprocessing(mut self, scaler: ScalerParams, label_names: Vec<String>) -> Self {
        self.scaler = scaler;
        self.label_names = label_names;
        self
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Probabilities for an already-standardized input.
    #[allow(clippy::needless_range_loop)]
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut act = x.to_vec();
        for layer in &self.layers {
            let mut out = vec![0f64; layer.out_dim];
            for o in 0..layer.out_dim {
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                let mut z = layer.bias[o] as f64;
                for (w, a) in row.iter().zip(&act) {
                    z += *w as f64 * a;
                }
                out[o] = z;
            }
            act = match layer.activation {
                Activation::None => out,
                Activation::Relu => {
                    out.iter_mut().for_each(|z| *z = z.max(0.0));
                    out
                }
                Activation::Softmax => softmax(&out),
            };
        }
        Ok(act)
    }

    /// Argmax class for an already-standardized input; ties resolve to the
    /// lowest class id.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Scales a raw feature row with the bundled scaler, then predicts.
    /// Returns `(class, confidence)`.
    pub fn infer_raw(&self, x_raw: &[f64]) -> Result<(u8, f32)> {
        let mut row = x_raw.to_vec();
        self.scaler.transform_row(&mut row)?;
        let probs = self.forward(&row)?;
        let class = argmax(&probs);
        Ok((class, probs[class as usize] as f32))
    }

    pub fn serialize(&self) -> Vec<u8> {
        io::serialize(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<MlpModel> {
        io::deserialize(bytes)
    }
}

/// First index of the maximum value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> u8 {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as u8
}
