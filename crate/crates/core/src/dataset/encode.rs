//! Categorical encoding and matrix assembly.

use std::collections::HashMap;

use crate::dataset::labels::merge_labels;
use crate::dataset::parse::FlowRecord;
use crate::dataset::schema::{N_FEATURES, N_NUMERIC};
use crate::dataset::timestamp::{expand_timestamp, TimestampFormat};
use crate::dataset::{PreparedDataset, Provenance};
use crate::error::Result;

/// Ordinal codebook for one categorical column: codes are assigned in
/// first-seen order starting at 0.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Codebook {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn code(&self, value: &str) -> Option<u32> {
        self.index.get(value).copied()
    }

    pub fn value(&self, code: u32) -> Option<&str> {
        self.names.get(code as usize).map(|s| s.as_str())
    }

    pub fn values(&self) -> &[String] {
        &self.names
    }

    /// Returns the existing code, or appends the value with code = map size.
    pub fn encode_or_insert(&mut self, value: &str) -> u32 {
        if let Some(c) = self.index.get(value) {
            return *c;
        }
        let code = self.names.len() as u32;
        self.names.push(value.to_string());
        self.index.insert(value.to_string(), code);
        code
    }

    pub fn from_values(values: &[String]) -> Self {
        let mut cb = Codebook::default();
        for v in values {
            cb.encode_or_insert(v);
        }
        cb
    }
}

/// Codebooks for the four categorical feature columns. The label column's
/// encoding is the fixed merged-class table and is not stored here.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodingMaps {
    pub flow_id: Codebook,
    pub src_ip: Codebook,
    pub dst_ip: Codebook,
    pub protocol: Codebook,
}

/// Encodes cleaned records into the 31-column prepared matrix.
///
/// When `maps` is `None`, fresh first-seen codebooks are built; when
/// supplied (held-out data), existing codes are reused and unseen values
/// are appended with code = map size. Matrix cells are snapped to float32
/// precision, matching the serialized representation, so downstream
/// consumers see identical values whether the dataset traveled through a
/// file or not.
pub fn encode_and_assemble(
    records: &[FlowRecord],
    format: &TimestampFormat,
    maps: Option<EncodingMaps>,
    provenance: Provenance,
) -> Result<PreparedDataset> {
    let mut maps = maps.unwrap_or_default();
    let n = records.len();
    let mut matrix = vec![0f64; n * N_FEATURES];
    let mut labels = Vec::with_capacity(n);

    for (i, r) in records.iter().enumerate() {
        let row = &mut matrix[i * N_FEATURES..(i + 1) * N_FEATURES];
        let (dow, hour) = expand_timestamp(&r.timestamp, format)?;
        row[0] = maps.flow_id.encode_or_insert(&r.flow_id) as f64;
        row[1] = maps.src_ip.encode_or_insert(&r.src_ip) as f64;
        row[2] = r.src_port as f64;
        row[3] = maps.dst_ip.encode_or_insert(&r.dst_ip) as f64;
        row[4] = r.dst_port as f64;
        row[5] = maps.protocol.encode_or_insert(&r.protocol) as f64;
        row[6] = dow as f64;
        row[7] = hour as f64;
        for k in 0..N_NUMERIC {
            row[8 + k] = r.numeric[k] as f32 as f64;
        }
        labels.push(merge_labels(&r.label_raw)?.id());
    }

    Ok(PreparedDataset {
        n_samples: n,
        matrix,
        labels,
        maps,
        provenance,
    })
}
