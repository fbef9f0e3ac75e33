//! Prepared-dataset binary serialization (kind 0).
//!
//! Layout (little-endian): magic `TIDS`, u8 version = 1, u8 kind = 0,
//! u32 n_samples, u16 n_features = 31, u16 n_classes = 7, label-name table
//! (u8 count + length-prefixed UTF-8 names), four categorical codebooks
//! (u32 count + length-prefixed values each, in flow-id / source-ip /
//! destination-ip / protocol order), row-major float32 matrix, label ids
//! as u8.

use crate::dataset::encode::{Codebook, EncodingMaps};
use crate::dataset::labels::{MERGED_LABEL_NAMES, N_CLASSES};
use crate::dataset::schema::N_FEATURES;
use crate::dataset::{PreparedDataset, Provenance};
use crate::error::{Error, Result};
use crate::fmt::{Reader, Writer, KIND_DATASET};

fn write_codebook(w: &mut Writer, cb: &Codebook) {
    w.u32(cb.len() as u32);
    for value in cb.values() {
        w.str(value);
    }
}

fn read_codebook(r: &mut Reader) -> Result<Codebook> {
    let count = r.u32()? as usize;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        values.push(r.str()?);
    }
    Ok(Codebook::from_values(&values))
}

pub fn serialize(ds: &PreparedDataset) -> Vec<u8> {
    let mut w = Writer::with_header(KIND_DATASET);
    w.u32(ds.n_samples as u32);
    w.u16(N_FEATURES as u16);
    w.u16(N_CLASSES as u16);
    w.u8(N_CLASSES as u8);
    for name in MERGED_LABEL_NAMES {
        w.str(name);
    }
    write_codebook(&mut w, &ds.maps.flow_id);
    write_codebook(&mut w, &ds.maps.src_ip);
    write_codebook(&mut w, &ds.maps.dst_ip);
    write_codebook(&mut w, &ds.maps.protocol);
    for &v in &ds.matrix {
        w.f32(v as f32);
    }
    w.bytes(&ds.labels);
    w.finish()
}

pub fn deserialize(bytes: &[u8]) -> Result<PreparedDataset> {
    let mut r = Reader::new(bytes);
    r.header_expect(KIND_DATASET)?;
    let n_samples = r.u32()? as usize;
    let n_features = r.u16()? as usize;
    if n_features != N_FEATURES {
        return Err(Error::format_at(
            10,
            format!("expected {N_FEATURES} features, file has {n_features}"),
        ));
    }
    let n_classes = r.u16()? as usize;
    if n_classes != N_CLASSES {
        return Err(Error::format_at(
            12,
            format!("expected {N_CLASSES} classes, file has {n_classes}"),
        ));
    }
    let name_count = r.u8()? as usize;
    for _ in 0..name_count {
        r.str()?;
    }
    let maps = EncodingMaps {
        flow_id: read_codebook(&mut r)?,
        src_ip: read_codebook(&mut r)?,
        dst_ip: read_codebook(&mut r)?,
        protocol: read_codebook(&mut r)?,
    };
    let mut matrix = Vec::with_capacity(n_samples * N_FEATURES);
    for _ in 0..n_samples * N_FEATURES {
        matrix.push(r.f32()? as f64);
    }
    let label_at = r.pos();
    let labels = r.byte_slice(n_samples)?.to_vec();
    if let Some(bad) = labels.iter().position(|&y| y as usize >= N_CLASSES) {
        return Err(Error::format_at(
            label_at + bad,
            format!("label id {} out of range", labels[bad]),
        ));
    }
    r.expect_end()?;
    Ok(PreparedDataset {
        n_samples,
        matrix,
        labels,
        maps,
        provenance: Provenance::default(),
    })
}
