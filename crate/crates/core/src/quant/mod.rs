//! Post-training int8 dynamic-range quantization.
//!
//! Weights are quantized symmetrically per output row (zero point 0,
//! range [-127, 127]); activations stay in float between layers and are
//! quantized asymmetrically on the fly per inference (range [-128, 127]).
//! Matrix products accumulate in i32 with the zero-point correction term
//! subtracted, then dequantize through the product of the input and
//! per-row weight scales. The fused softmax of the source model is split
//! into a linear dense stage plus an explicit terminal softmax with
//! beta 1, and inference runs one sample at a time.

mod io;

use crate::dataset::ScalerParams;
use crate::error::{Error, Result};
use crate::mlp::{argmax, softmax, Activation, MlpModel};

/// Rounding mode used throughout: round half away from zero.
#[inline]
fn round_half_away(v: f64) -> f64 {
    v.round()
}

/// Symmetric per-output-row int8 weight tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantTensor {
    pub out_dim: usize,
    pub in_dim: usize,
    /// Row-major `out_dim x in_dim`, entries in [-127, 127].
    pub q: Vec<i8>,
    /// Per-output-row scale; always > 0.
    pub scale: Vec<f32>,
}

impl QuantTensor {
    pub fn dequantize(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.q.len());
        for o in 0..self.out_dim {
            let s = self.scale[o] as f64;
            for i in 0..self.in_dim {
                out.push(self.q[o * self.in_dim + i] as f64 * s);
            }
        }
        out
    }

    /// Per-row sums of quantized weights, used for the zero-point
    /// correction at inference time.
    fn row_sums(&self) -> Vec<i32> {
        (0..self.out_dim)
            .map(|o| {
                self.q[o * self.in_dim..(o + 1) * self.in_dim]
                    .iter()
                    .map(|&q| q as i32)
                    .sum()
            })
            .collect()
    }
}

/// Quantizes a float weight matrix: per-row scale `max|w| / 127`
/// (all-zero rows use scale 1), values rounded half away from zero and
/// clamped to [-127, 127].
pub fn quantize_weights(weights: &[f64], out_dim: usize, in_dim: usize) -> Result<QuantTensor> {
    if weights.len() != out_dim * in_dim {
        return Err(Error::Dimension {
            expected: out_dim * in_dim,
            got: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("weight matrix"));
    }
    let mut q = Vec::with_capacity(weights.len());
    let mut scale = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let row = &weights[o * in_dim..(o + 1) * in_dim];
        let max_abs = row.iter().fold(0f64, |acc, w| acc.max(w.abs()));
        let s = if max_abs == 0.0 { 1.0 } else { max_abs / 127.0 };
        // Snap the stored scale to f32 and quantize against that value so
        // in-memory and deserialized models agree bit for bit.
        let s32 = s as f32;
        scale.push(s32);
        for &w in row {
            let v = round_half_away(w / s32 as f64).clamp(-127.0, 127.0);
            q.push(v as i8);
        }
    }
    Ok(QuantTensor {
        out_dim,
        in_dim,
        q,
        scale,
    })
}

/// Asymmetric int8 parameters for one activation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputQuantization {
    pub scale: f64,
    pub zero_point: i32,
}

/// Quantizes an activation vector to int8 with an asymmetric range:
/// scale `(max - min) / 255`, zero point aligning `min` with -128.
/// A constant vector uses scale 1 with the zero point absorbing the value.
///
/// The range is first extended to include zero. Without that, a vector
/// with min > 0 clamps the zero point to -128 and saturates its large
/// values, breaking the min/max roundtrip guarantee; with zero inside
/// the range the published formula and the guarantee coincide.
pub fn quantize_input_dynamic(x: &[f64]) -> (Vec<i8>, InputQuantization) {
    debug_assert!(x.iter().all(|v| v.is_finite()));
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (scale, zero_point) = if max == min {
        (1.0, round_half_away(-min).clamp(-128.0, 127.0) as i32)
    } else {
        let lo = min.min(0.0);
        let hi = max.max(0.0);
        let scale = (hi - lo) / 255.0;
        let zp = round_half_away(-128.0 - lo / scale).clamp(-128.0, 127.0) as i32;
        (scale, zp)
    };
    let q: Vec<i8> = x
        .iter()
        .map(|&v| round_half_away(v / scale + zero_point as f64).clamp(-128.0, 127.0) as i8)
        .collect();
    (q, InputQuantization { scale, zero_point })
}

/// One quantized dense stage; ReLU on hidden stages, none on the last.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantLayer {
    pub weights: QuantTensor,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

/// Int8 dynamic-range model: quantized dense stages, an explicit terminal
/// softmax stage (beta 1), fixed batch size of one, bundled scaler and
/// label names.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMlpModel {
    pub layers: Vec<QuantLayer>,
    pub n_features: usize,
    pub n_classes: usize,
    /// Always true; the final stage is a separate softmax.
    pub terminal_softmax: bool,
    pub scaler: ScalerParams,
    pub label_names: Vec<String>,
}

/// Converts a float model whose final layer is softmax. Hidden stages
/// keep ReLU; the fused final softmax becomes a linear stage plus the
/// explicit softmax stage.
pub fn convert(model: &MlpModel) -> Result<QuantizedMlpModel> {
    let last = model
        .layers
        .last()
        .ok_or_else(|| Error::Argument("model has no layers".into()))?;
    if last.activation != Activation::Softmax {
        return Err(Error::Argument(
            "conversion requires a terminal softmax layer".into(),
        ));
    }
    let n_layers = model.layers.len();
    let mut layers = Vec::with_capacity(n_layers);
    for (l, layer) in model.layers.iter().enumerate() {
        let weights_f64: Vec<f64> = layer.weights.iter().map(|&w| w as f64).collect();
        let weights = quantize_weights(&weights_f64, layer.out_dim, layer.in_dim)?;
        layers.push(QuantLayer {
            weights,
            bias: layer.bias.clone(),
            activation: if l + 1 < n_layers {
                Activation::Relu
            } else {
                Activation::None
            },
        });
    }
    Ok(QuantizedMlpModel {
        layers,
        n_features: model.n_features,
        n_classes: model.n_classes,
        terminal_softmax: true,
        scaler: model.scaler.clone(),
        label_names: model.label_names.clone(),
    })
}

/// Per-layer observability of a quantized forward pass.
#[derive(Debug, Clone)]
pub struct QuantTrace {
    /// Input quantization chosen per dense stage.
    pub input_quant: Vec<InputQuantization>,
    /// Pre-softmax output of the last dense stage.
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl QuantizedMlpModel {
    /// Quantized inference on a raw (unscaled) feature vector: applies
    /// the bundled scaler, then per dense stage quantizes the float
    /// activation vector, accumulates `q_x . q_w` in i32 with the
    /// zero-point correction subtracted, dequantizes, adds the float
    /// bias, and applies ReLU in float. The terminal softmax runs in
    /// float with beta 1.
    pub fn forward_trace(&self, x_raw: &[f64]) -> Result<QuantTrace> {
        if x_raw.len() != self.n_features {
            return Err(Error::Dimension {
                expected: self.n_features,
                got: x_raw.len(),
            });
        }
        let mut act = x_raw.to_vec();
        self.scaler.transform_row(&mut act)?;

        let mut input_quant = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let t = &layer.weights;
            if act.len() != t.in_dim {
                return Err(Error::Dimension {
                    expected: t.in_dim,
                    got: act.len(),
                });
            }
            let (qx, iq) = quantize_input_dynamic(&act);
            input_quant.push(iq);
            let row_sums = t.row_sums();
            let mut out = vec![0f64; t.out_dim];
            for o in 0..t.out_dim {
                let mut acc: i32 = 0;
                let row = &t.q[o * t.in_dim..(o + 1) * t.in_dim];
                for (qw, qa) in row.iter().zip(&qx) {
                    acc += (*qw as i32) * (*qa as i32);
                }
                acc -= iq.zero_point * row_sums[o];
                let mut v = iq.scale * t.scale[o] as f64 * acc as f64 + layer.bias[o] as f64;
                if layer.activation == Activation::Relu {
                    v = v.max(0.0);
                }
                out[o] = v;
            }
            act = out;
        }
        let probabilities = softmax(&act);
        Ok(QuantTrace {
            input_quant,
            logits: act,
            probabilities,
        })
    }

    /// Probabilities for a raw feature vector.
    pub fn forward(&self, x_raw: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_trace(x_raw)?.probabilities)
    }

    /// `(class, confidence)` for a raw feature vector.
    pub fn infer_raw(&self, x_raw: &[f64]) -> Result<(u8, f32)> {
        let probs = self.forward(x_raw)?;
        let class = argmax(&probs);
        Ok((class, probs[class as usize] as f32))
    }

    pub fn serialize(&self) -> Vec<u8> {
        io::serialize(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<QuantizedMlpModel> {
        io::deserialize(bytes)
    }
}
