//! Record cleaning: NaN rows dropped, infinities clamped to the float32
//! range, unparseable timestamps dropped.

use crate::dataset::parse::FlowRecord;
use crate::dataset::timestamp::TimestampFormat;

/// Largest finite float32 value; positive infinities clamp here and
/// negative infinities clamp to its negation.
pub const F32_MAX: f64 = f32::MAX as f64;

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct CleanStats {
    pub dropped_nan: u64,
    pub dropped_timestamp: u64,
    pub clamped_pos_inf: u64,
    pub clamped_neg_inf: u64,
}

/// Drops every record containing a NaN (or an unparseable port or
/// timestamp) and clamps infinite values. The returned records contain
/// only finite numeric values and parseable timestamps.
pub fn clean(
    records: Vec<FlowRecord>,
    format: &TimestampFormat,
) -> (Vec<FlowRecord>, CleanStats) {
    let mut stats = CleanStats::default();
    let mut out = Vec::with_capacity(records.len());
    for mut record in records {
        if record.has_nan() {
            stats.dropped_nan += 1;
            continue;
        }
        if format.parse(&record.timestamp).is_none() {
            stats.dropped_timestamp += 1;
            continue;
        }
        for v in record.numeric.iter_mut() {
            if *v == f64::INFINITY {
                *v = F32_MAX;
                stats.clamped_pos_inf += 1;
            } else if *v == f64::NEG_INFINITY {
                *v = -F32_MAX;
                stats.clamped_neg_inf += 1;
            }
        }
        out.push(record);
    }
    (out, stats)
}
