//! Synthetic flow-corpus generation.
//!
//! Produces a schema-compatible CSV: Gaussian clusters per class over the
//! numeric features, raw label names drawn per merged class, per-class
//! address pools, and timestamps inside one working week. Deterministic per
//! seed, byte for byte.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::labels::{MergedLabel, RAW_LABELS};
use crate::dataset::schema::{LABEL_COLUMN, N_NUMERIC, SELECTED_COLUMNS};
use crate::error::Result;

/// Cluster definition for one raw label.
#[derive(Debug, Clone)]
pub struct SynthClassSpec {
    pub label: String,
    pub merged: MergedLabel,
    pub numeric_mean: [f64; N_NUMERIC],
    pub numeric_std: [f64; N_NUMERIC],
    pub src_ip_pool: Vec<String>,
    pub dst_ip_pool: Vec<String>,
    pub protocol: String,
    pub src_port_range: (u16, u16),
    pub dst_ports: Vec<u16>,
}

/// A full 15-label corpus description.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub classes: Vec<SynthClassSpec>,
}

impl SynthSpec {
    /// Default desk-scale corpus: one dominant class-separating feature
    /// (flow duration), one per-class secondary feature, and the remaining
    /// columns filled with class-independent noise at plausible
    /// magnitudes. Raw labels within a merged class share the class
    /// cluster with a small per-label offset.
    pub fn default_corpus() -> SynthSpec {
        let mut classes = Vec::new();
        let mut within_class = [0usize; 7];
        for (label, merged) in RAW_LABELS {
            let c = merged.id() as usize;
            let label_ordinal = within_class[c];
            within_class[c] += 1;

            let mut mean = [0f64; N_NUMERIC];
            let mut std = [1f64; N_NUMERIC];

            // Feature 0 (flow duration) separates the 7 classes on its own.
            mean[0] = 12.0 * (c + 1) as f64 + 0.8 * label_ordinal as f64;
            std[0] = 1.2;
            // Features 1..=7: secondary per-class signal.
            for slot in 1..=7 {
                if slot == 1 + c {
                    mean[slot] = 9.0 + 0.4 * label_ordinal as f64;
                } else {
                    mean[slot] = 2.0;
                }
                std[slot] = 1.5;
            }
            // Remaining columns: class-independent noise.
            mean[8] = 3.0; // iat min
            std[8] = 1.0;
            mean[9] = 1.0; // fwd psh
            std[9] = 0.8;
            mean[10] = 1.0; // bwd psh
            std[10] = 0.8;
            mean[11] = 160.0; // fwd header len
            std[11] = 25.0;
            mean[12] = 140.0; // bwd header len
            std[12] = 25.0;
            for slot in 13..=20 {
                mean[slot] = 2.0; // tcp flag counts
                std[slot] = 1.2;
            }
            mean[21] = 8192.0; // init win fwd
            std[21] = 900.0;
            mean[22] = 4096.0; // init win bwd
            std[22] = 700.0;

            classes.push(SynthClassSpec {
                label: label.to_string(),
                merged,
                numeric_mean: mean,
                numeric_std: std,
                src_ip_pool: (0..8).map(|k| format!("10.{c}.{label_ordinal}.{k}")).collect(),
                dst_ip_pool: (0..4).map(|k| format!("172.16.{c}.{k}")).collect(),
                protocol: if c % 3 == 2 { "17" } else { "6" }.to_string(),
                src_port_range: (1024, 65000),
                dst_ports: match c {
                    0 => vec![80, 443],
                    1 | 3 => vec![80],
                    2 => vec![21, 22, 23, 25, 80, 443, 3389],
                    4 => vec![21, 22],
                    5 => vec![80, 8080],
                    _ => vec![6667, 8443],
                },
            });
        }
        SynthSpec { classes }
    }
}

/// Generates `n_per_class` rows for each raw label and returns the CSV
/// text. Rows are deterministically shuffled so class blocks do not leak
/// into encoding order.
pub fn synth_generate(spec: &SynthSpec, n_per_class: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<String> = Vec::with_capacity(spec.classes.len() * n_per_class);
    let mut flow_counter = 0u64;

    for class in &spec.classes {
        let normals: Vec<Normal<f64>> = (0..N_NUMERIC)
            .map(|j| Normal::new(class.numeric_mean[j], class.numeric_std[j]).unwrap())
            .collect();
        for _ in 0..n_per_class {
            let src_ip = class.src_ip_pool[rng.gen_range(0..class.src_ip_pool.len())].clone();
            let dst_ip = class.dst_ip_pool[rng.gen_range(0..class.dst_ip_pool.len())].clone();
            let src_port = rng.gen_range(class.src_port_range.0..=class.src_port_range.1);
            let dst_port = class.dst_ports[rng.gen_range(0..class.dst_ports.len())];
            // Working week of 3..=7 July 2017, business-ish hours.
            let day = rng.gen_range(3..=7u32);
            let hour = rng.gen_range(8..=18u32);
            let minute = rng.gen_range(0..60u32);
            let flow_id = format!("{src_ip}-{dst_ip}-{src_port}-{dst_port}-{flow_counter}");
            flow_counter += 1;

            let mut cells: Vec<String> = vec![
                flow_id,
                src_ip,
                src_port.to_string(),
                dst_ip,
                dst_port.to_string(),
                class.protocol.clone(),
                format!("{day}/7/2017 {hour}:{minute:02}"),
            ];
            for normal in &normals {
                cells.push(format!("{:.4}", normal.sample(&mut rng)));
            }
            cells.push(class.label.clone());
            rows.push(cells.join(","));
        }
    }
    rows.shuffle(&mut rng);

    let mut header: Vec<&str> = SELECTED_COLUMNS.to_vec();
    header.push(LABEL_COLUMN);
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn synth_generate_to_file(
    path: impl AsRef<Path>,
    spec: &SynthSpec,
    n_per_class: usize,
    seed: u64,
) -> Result<()> {
    Ok(std::fs::write(path, synth_generate(spec, n_per_class, seed))?)
}
