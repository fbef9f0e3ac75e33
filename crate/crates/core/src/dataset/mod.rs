//! Flow-dataset ingestion and preprocessing.
//!
//! The pipeline mirrors the study setup: parse flow CSVs, merge the 15 raw
//! labels into 7 classes, expand the timestamp into day-of-week and hour,
//! drop NaN rows and clamp infinities, encode categorical columns to
//! first-seen ordinals, stratified-sample down to a working fraction, and
//! standardize with a scaler fit on the training partition.

pub mod clean;
pub mod encode;
pub mod labels;
pub mod parse;
pub mod scaler;
pub mod schema;
pub mod stratified;
pub mod synth;
pub mod timestamp;

mod io;

use std::path::Path;

pub use clean::{clean, CleanStats, F32_MAX};
pub use encode::{encode_and_assemble, Codebook, EncodingMaps};
pub use labels::{merge_labels, MergedLabel, MERGED_LABEL_NAMES, N_CLASSES, RAW_LABELS};
pub use parse::{parse_flow_csv, FlowRecord, ParseReport};
pub use scaler::{apply_scaler, fit_scaler, ScalerParams};
pub use schema::{N_FEATURES, N_NUMERIC, NUMERIC_FEATURES, PREPARED_COLUMNS, SELECTED_COLUMNS};
pub use stratified::{
    make_fold_plan, stratified_sample_indices, stratified_split_indices, FoldPlan, SplitIndices,
};
pub use synth::{synth_generate, synth_generate_to_file, SynthClassSpec, SynthSpec};
pub use timestamp::{expand_timestamp, TimestampFormat};

use crate::error::Result;

/// How a prepared dataset came to be; informational, not serialized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub sources: Vec<String>,
    pub seed: u64,
    pub sample_fraction: f64,
}

/// Encoded, cleaned feature matrix with merged labels.
///
/// Cells are held as f64 but always carry float32-precision values (the
/// serialized matrix is float32), so a dataset that traveled through a
/// file is numerically identical to one that never left memory.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub n_samples: usize,
    /// Row-major `n_samples x N_FEATURES`.
    pub matrix: Vec<f64>,
    /// Merged class ids, one per sample.
    pub labels: Vec<u8>,
    pub maps: EncodingMaps,
    pub provenance: Provenance,
}

impl PreparedDataset {
    pub fn feature(&self, sample: usize, feature: usize) -> f64 {
        self.matrix[sample * N_FEATURES + feature]
    }

    pub fn row(&self, sample: usize) -> &[f64] {
        &self.matrix[sample * N_FEATURES..(sample + 1) * N_FEATURES]
    }

    /// Copies the given samples into a new matrix/label pair.
    pub fn select(&self, indices: &[usize]) -> (Vec<f64>, Vec<u8>) {
        let mut matrix = Vec::with_capacity(indices.len() * N_FEATURES);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            matrix.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        (matrix, labels)
    }

    /// New dataset restricted to the given samples.
    pub fn subset(&self, indices: &[usize]) -> PreparedDataset {
        let (matrix, labels) = self.select(indices);
        PreparedDataset {
            n_samples: indices.len(),
            matrix,
            labels,
            maps: self.maps.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn class_counts(&self) -> [usize; N_CLASSES] {
        let mut counts = [0usize; N_CLASSES];
        for &y in &self.labels {
            counts[y as usize] += 1;
        }
        counts
    }

    pub fn serialize(&self) -> Vec<u8> {
        io::serialize(self)
    }

    pub fn deserialize(bytes: &[u8]) -> Result<PreparedDataset> {
        io::deserialize(bytes)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.serialize())?)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<PreparedDataset> {
        Self::deserialize(&std::fs::read(path)?)
    }

    /// CSV export of the encoded matrix: 31 feature columns plus the
    /// merged label id and name.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = PREPARED_COLUMNS.iter().map(|s| s.to_string()).collect();
        header.push("Label Id".into());
        header.push("Label".into());
        w.write_record(&header)?;
        for i in 0..self.n_samples {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            rec.push(format!("{}", self.labels[i]));
            rec.push(MERGED_LABEL_NAMES[self.labels[i] as usize].to_string());
            w.write_record(&rec)?;
        }
        Ok(w.flush()?)
    }
}

/// Options for the end-to-end prepare pipeline.
#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub time_format: TimestampFormat,
    /// Stratified subsample fraction; `None` keeps everything.
    pub sample_fraction: Option<f64>,
    pub seed: u64,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            time_format: TimestampFormat::default(),
            sample_fraction: Some(0.05),
            seed: 0,
        }
    }
}

/// Counters reported by [`prepare`].
#[derive(Debug, Default, Clone)]
pub struct PrepareStats {
    pub rows_parsed: u64,
    pub unparseable_cells: u64,
    pub clean: CleanStats,
    pub rows_after_sampling: u64,
}

/// Full ingestion pipeline: parse, clean, encode, stratified-sample.
pub fn prepare<P: AsRef<Path>>(
    paths: &[P],
    options: &PrepareOptions,
) -> Result<(PreparedDataset, PrepareStats)> {
    let report = parse_flow_csv(paths)?;
    let mut stats = PrepareStats {
        rows_parsed: report.records.len() as u64,
        unparseable_cells: report.unparseable_cells,
        ..Default::default()
    };
    let (records, clean_stats) = clean(report.records, &options.time_format);
    stats.clean = clean_stats;

    let provenance = Provenance {
        sources: paths
            .iter()
            .map(|p| p.as_ref().display().to_string())
            .collect(),
        seed: options.seed,
        sample_fraction: options.sample_fraction.unwrap_or(1.0),
    };
    let full = encode_and_assemble(&records, &options.time_format, None, provenance)?;

    let dataset = match options.sample_fraction {
        Some(fraction) if fraction < 1.0 => {
            let idx =
                stratified_sample_indices(&full.labels, N_CLASSES, fraction, options.seed)?;
            full.subset(&idx)
        }
        _ => full,
    };
    stats.rows_after_sampling = dataset.n_samples as u64;
    Ok((dataset, stats))
}
