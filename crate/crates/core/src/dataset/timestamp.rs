//! Timestamp expansion: day-of-week and hour, minutes and seconds dropped.

use chrono::{Datelike, NaiveDateTime, Timelike};

use crate::error::{Error, Result};

/// Timestamp parsing configuration. The default accepts the day-first
/// `D/M/YYYY H:mm` layout of the public flow exports; other layouts can be
/// supplied as a chrono format string.
#[derive(Debug, Clone)]
pub struct TimestampFormat {
    format: String,
}

impl Default for TimestampFormat {
    fn default() -> Self {
        TimestampFormat {
            format: "%d/%m/%Y %H:%M".to_string(),
        }
    }
}

impl TimestampFormat {
    pub fn new(format: impl Into<String>) -> Self {
        TimestampFormat {
            format: format.into(),
        }
    }

    pub fn format_str(&self) -> &str {
        &self.format
    }

    pub(crate) fn parse(&self, timestamp: &str) -> Option<NaiveDateTime> {
        NaiveDateTime::parse_from_str(timestamp.trim(), &self.format).ok()
    }
}

/// Expands a timestamp into `(day_of_week, hour)` with Monday = 0.
/// Minutes and seconds are discarded.
pub fn expand_timestamp(timestamp: &str, format: &TimestampFormat) -> Result<(u8, u8)> {
    let dt = format
        .parse(timestamp)
        .ok_or_else(|| Error::Argument(format!("unparseable timestamp {timestamp:?}")))?;
    Ok((
        dt.weekday().num_days_from_monday() as u8,
        dt.hour() as u8,
    ))
}
