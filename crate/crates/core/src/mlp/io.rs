//! Float-MLP binary serialization (kind 1).
//!
//! Layout (little-endian): shared header, u8 n_layers; per layer u16 in,
//! u16 out, u8 activation (0 none, 1 relu, 2 softmax), float32 weights
//! row-major, float32 biases; then the f64 scaler block and the label
//! table.

use crate::error::{Error, Result};
use crate::fmt::{
    read_label_table, read_scaler_f64, write_label_table, write_scaler_f64, Reader, Writer,
    KIND_FLOAT_MLP,
};
use crate::mlp::{Activation, DenseLayer, MlpModel};

pub fn serialize(model: &MlpModel) -> Vec<u8> {
    let mut w = Writer::with_header(KIND_FLOAT_MLP);
    w.u8(model.layers.len() as u8);
    for layer in &model.layers {
        w.u16(layer.in_dim as u16);
        w.u16(layer.out_dim as u16);
        w.u8(layer.activation as u8);
        for &v in &layer.weights {
            w.f32(v);
        }
        for &v in &layer.bias {
            w.f32(v);
        }
    }
    write_scaler_f64(&mut w, &model.scaler);
    write_label_table(&mut w, &model.label_names);
    w.finish()
}

pub fn deserialize(bytes: &[u8]) -> Result<MlpModel> {
    let mut r = Reader::new(bytes);
    r.header_expect(KIND_FLOAT_MLP)?;
    let n_layers = r.u8()? as usize;
    if n_layers == 0 {
        return Err(Error::format_at(r.pos(), "model has zero layers"));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let in_dim = r.u16()? as usize;
        let out_dim = r.u16()? as usize;
        let act_at = r.pos();
        let act_byte = r.u8()?;
        let activation = Activation::from_u8(act_byte)
            .ok_or_else(|| Error::format_at(act_at, format!("bad activation byte {act_byte}")))?;
        let mut weights = Vec::with_capacity(out_dim * in_dim);
        for _ in 0..out_dim * in_dim {
            weights.push(r.f32()?);
        }
        let mut bias = Vec::with_capacity(out_dim);
        for _ in 0..out_dim {
            bias.push(r.f32()?);
        }
        layers.push(DenseLayer {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        });
    }
    for pair in layers.windows(2) {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::format_at(
                r.pos(),
                format!(
                    "layer dims do not chain: {} out vs {} in",
                    pair[0].out_dim, pair[1].in_dim
                ),
            ));
        }
    }
    let scaler = read_scaler_f64(&mut r)?;
    let label_names = read_label_table(&mut r)?;
    r.expect_end()?;

    let n_features = layers[0].in_dim;
    if scaler.n_features() != n_features {
        return Err(Error::Dimension {
            expected: n_features,
            got: scaler.n_features(),
        });
    }
    Ok(MlpModel {
        n_features,
        n_classes: layers.last().unwrap().out_dim,
        layers,
        scaler,
        label_names,
    })
}
