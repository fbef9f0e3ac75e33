//! Flow-CSV ingestion.
//!
//! Headers are matched case-insensitively after trimming surrounding
//! whitespace (the public CSV exports pad many header cells with a leading
//! space). Columns outside the 30 selected features plus `Label` are
//! ignored. Unparseable numeric cells become NaN and are dropped later by
//! [`clean`](super::clean::clean); the count of such cells is reported.

use std::collections::HashMap;
use std::path::Path;

use crate::dataset::schema::{canonical, LABEL_COLUMN, N_NUMERIC, NUMERIC_FEATURES, SELECTED_COLUMNS};
use crate::error::{Error, Result};

/// One raw flow row restricted to the selected columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub flow_id: String,
    pub src_ip: String,
    pub src_port: u16,
    pub dst_ip: String,
    pub dst_port: u16,
    pub protocol: String,
    /// Raw timestamp text; expanded during assembly.
    pub timestamp: String,
    /// The 23 numeric features in [`NUMERIC_FEATURES`] order.
    pub numeric: [f64; N_NUMERIC],
    pub label_raw: String,
    /// Count of cells (ports) that failed to parse and cannot be stored as
    /// NaN; any nonzero value marks the record for removal by `clean`.
    pub bad_cells: u32,
}

impl FlowRecord {
    /// Numeric feature by canonical name.
    pub fn numeric_feature(&self, name: &str) -> Option<f64> {
        NUMERIC_FEATURES
            .iter()
            .position(|n| canonical(n) == canonical(name))
            .map(|i| self.numeric[i])
    }

    pub fn has_nan(&self) -> bool {
        self.bad_cells > 0 || self.numeric.iter().any(|v| v.is_nan())
    }
}

/// Outcome of parsing one or more CSV files.
#[derive(Debug, Default)]
pub struct ParseReport {
    pub records: Vec<FlowRecord>,
    /// Numeric cells that failed to parse and were stored as NaN.
    pub unparseable_cells: u64,
}

/// Column indices of the selected features within one file's header.
struct HeaderMap {
    /// Index per SELECTED_COLUMNS position.
    selected: [usize; 30],
    label: usize,
}

fn map_header(headers: &csv::StringRecord) -> Result<HeaderMap> {
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        // First occurrence wins when a header repeats (the public exports
        // duplicate "Fwd Header Length" in some files).
        by_name.entry(canonical(h)).or_insert(i);
    }

    let mut selected = [0usize; 30];
    let mut missing: Vec<&str> = Vec::new();
    for (slot, name) in SELECTED_COLUMNS.iter().enumerate() {
        match by_name.get(&canonical(name)) {
            Some(&i) => selected[slot] = i,
            None => missing.push(name),
        }
    }
    let label = match by_name.get(&canonical(LABEL_COLUMN)) {
        Some(&i) => i,
        None => {
            missing.push(LABEL_COLUMN);
            0
        }
    };
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing.join(", ")));
    }
    Ok(HeaderMap { selected, label })
}

fn parse_port(cell: &str) -> Option<u16> {
    let t = cell.trim();
    if let Ok(v) = t.parse::<u32>() {
        return u16::try_from(v).ok();
    }
    // Some exports write ports as floats ("80.0").
    if let Ok(v) = t.parse::<f64>() {
        if v.is_finite() && v.fract() == 0.0 && (0.0..=65535.0).contains(&v) {
            return Some(v as u16);
        }
    }
    None
}

fn parse_numeric(cell: &str) -> f64 {
    let t = cell.trim();
    match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "+inf" => f64::INFINITY,
        "-inf" | "-infinity" => f64::NEG_INFINITY,
        "" | "nan" => f64::NAN,
        _ => t.parse::<f64>().unwrap_or(f64::NAN),
    }
}

/// Parses one or more flow CSV files into records.
pub fn parse_flow_csv<P: AsRef<Path>>(paths: &[P]) -> Result<ParseReport> {
    let mut report = ParseReport::default();
    for path in paths {
        parse_one(path.as_ref(), &mut report)?;
    }
    Ok(report)
}

fn parse_one(path: &Path, report: &mut ParseReport) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header_map = map_header(rdr.headers()?)?;

    for row in rdr.records() {
        let row = row?;
        // Blank separator lines occur between day sections in some exports.
        if row.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let cell = |i: usize| row.get(i).unwrap_or("");

        let mut bad_cells = 0u32;
        let mut take_port = |i: usize| match parse_port(cell(i)) {
            Some(p) => p,
            None => {
                bad_cells += 1;
                0
            }
        };
        let src_port = take_port(header_map.selected[2]);
        let dst_port = take_port(header_map.selected[4]);

        let mut numeric = [0f64; N_NUMERIC];
        for (k, v) in numeric.iter_mut().enumerate() {
            // Numeric features start at selected-column slot 7.
            *v = parse_numeric(cell(header_map.selected[7 + k]));
            if v.is_nan() {
                report.unparseable_cells += 1;
            }
        }
        report.unparseable_cells += bad_cells as u64;

        report.records.push(FlowRecord {
            flow_id: cell(header_map.selected[0]).trim().to_string(),
            src_ip: cell(header_map.selected[1]).trim().to_string(),
            src_port,
            dst_ip: cell(header_map.selected[3]).trim().to_string(),
            dst_port,
            protocol: cell(header_map.selected[5]).trim().to_string(),
            timestamp: cell(header_map.selected[6]).trim().to_string(),
            numeric,
            label_raw: cell(header_map.label).trim().to_string(),
            bad_cells,
        });
    }
    Ok(())
}
