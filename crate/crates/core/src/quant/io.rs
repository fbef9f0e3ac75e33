//! Quantized-MLP binary serialization (kind 2).
//!
//! Layout (little-endian): shared header, u8 n_layers; per layer u16 in,
//! u16 out, u8 activation (0 none, 1 relu), int8 weights row-major,
//! per-row float32 scales, float32 biases; u8 terminal-softmax marker;
//! then the f32 scaler block and the label table. Every float in this
//! artifact is 32-bit; it is the minimum-footprint deployment format.

use crate::error::{Error, Result};
use crate::fmt::{
    read_label_table, read_scaler_f32, write_label_table, write_scaler_f32, Reader, Writer,
    KIND_QUANT_MLP,
};
use crate::mlp::Activation;
use crate::quant::{QuantLayer, QuantTensor, QuantizedMlpModel};

pub fn serialize(model: &QuantizedMlpModel) -> Vec<u8> {
    let mut w = Writer::with_header(KIND_QUANT_MLP);
    w.u8(model.layers.len() as u8);
    for layer in &model.layers {
        let t = &layer.weights;
        w.u16(t.in_dim as u16);
        w.u16(t.out_dim as u16);
        w.u8(layer.activation as u8);
        for &q in &t.q {
            w.i8(q);
        }
        for &s in &t.scale {
            w.f32(s);
        }
        for &b in &layer.bias {
            w.f32(b);
        }
    }
    w.u8(model.terminal_softmax as u8);
    write_scaler_f32(&mut w, &model.scaler);
    write_label_table(&mut w, &model.label_names);
    w.finish()
}

pub fn deserialize(bytes: &[u8]) -> Result<QuantizedMlpModel> {
    let mut r = Reader::new(bytes);
    r.header_expect(KIND_QUANT_MLP)?;
    let n_layers = r.u8()? as usize;
    if n_layers == 0 {
        return Err(Error::format_at(r.pos(), "model has zero layers"));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let in_dim = r.u16()? as usize;
        let out_dim = r.u16()? as usize;
        let act_at = r.pos();
        let act_byte = r.u8()?;
        let activation = match Activation::from_u8(act_byte) {
            Some(a @ (Activation::None | Activation::Relu)) => a,
            _ => {
                return Err(Error::format_at(
                    act_at,
                    format!("bad activation byte {act_byte} in quantized layer {l}"),
                ))
            }
        };
        let mut q = Vec::with_capacity(out_dim * in_dim);
        for _ in 0..out_dim * in_dim {
            q.push(r.i8()?);
        }
        let scale_at = r.pos();
        let mut scale = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            let s = r.f32()?;
            if !s.is_finite() || s <= 0.0 {
                return Err(Error::format_at(scale_at, format!("non-positive scale {s}")));
            }
            scale.push(s);
        }
        let mut bias = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            bias.push(r.f32()?);
        }
        layers.push(QuantLayer {
            weights: QuantTensor {
                out_dim,
                in_dim,
                q,
                scale,
            },
            bias,
            activation,
        });
    }
    let marker_at = r.pos();
    let terminal_softmax = r.u8()? == 1;
    if !terminal_softmax {
        return Err(Error::format_at(marker_at, "missing terminal softmax marker"));
    }
    if layers.last().unwrap().activation != Activation::None {
        return Err(Error::format_at(
            marker_at,
            "last dense stage must be linear before the softmax stage",
        ));
    }
    for pair in layers.windows(2) {
        if pair[0].weights.out_dim != pair[1].weights.in_dim {
            return Err(Error::format_at(
                marker_at,
                format!(
                    "layer dims do not chain: {} out vs {} in",
                    pair[0].weights.out_dim, pair[1].weights.in_dim
                ),
            ));
        }
    }
    let scaler = read_scaler_f32(&mut r)?;
    let label_names = read_label_table(&mut r)?;
    r.expect_end()?;

    let n_features = layers[0].weights.in_dim;
    if scaler.n_features() != n_features {
        return Err(Error::Dimension {
            expected: n_features,
            got: scaler.n_features(),
        });
    }
    Ok(QuantizedMlpModel {
        n_features,
        n_classes: layers.last().unwrap().weights.out_dim,
        layers,
        terminal_softmax,
        scaler,
        label_names,
    })
}
