//! The 30-column flow schema and the 31-column prepared layout.

/// The 23 numeric flow features, in canonical column order.
pub const NUMERIC_FEATURES: [&str; 23] = [
    "Flow Duration",
    "Total Fwd Packets",
    "Total Backward Packets",
    "Flow Bytes/s",
    "Flow Packets/s",
    "Flow IAT Mean",
    "Flow IAT Std",
    "Flow IAT Max",
    "Flow IAT Min",
    "Fwd PSH Flags",
    "Bwd PSH Flags",
    "Fwd Header Length",
    "Bwd Header Length",
    "FIN Flag Count",
    "SYN Flag Count",
    "RST Flag Count",
    "PSH Flag Count",
    "ACK Flag Count",
    "URG Flag Count",
    "CWE Flag Count",
    "ECE Flag Count",
    "Init_Win_bytes_forward",
    "Init_Win_bytes_backward",
];

pub const N_NUMERIC: usize = 23;

/// All 30 selected input columns (the label column is separate).
pub const SELECTED_COLUMNS: [&str; 30] = [
    "Flow ID",
    "Source IP",
    "Source Port",
    "Destination IP",
    "Destination Port",
    "Protocol",
    "Timestamp",
    "Flow Duration",
    "Total Fwd Packets",
    "Total Backward Packets",
    "Flow Bytes/s",
    "Flow Packets/s",
    "Flow IAT Mean",
    "Flow IAT Std",
    "Flow IAT Max",
    "Flow IAT Min",
    "Fwd PSH Flags",
    "Bwd PSH Flags",
    "Fwd Header Length",
    "Bwd Header Length",
    "FIN Flag Count",
    "SYN Flag Count",
    "RST Flag Count",
    "PSH Flag Count",
    "ACK Flag Count",
    "URG Flag Count",
    "CWE Flag Count",
    "ECE Flag Count",
    "Init_Win_bytes_forward",
    "Init_Win_bytes_backward",
];

pub const LABEL_COLUMN: &str = "Label";

/// Column names of the prepared feature matrix: the timestamp is replaced
/// by its two derived features, everything else keeps its position.
pub const PREPARED_COLUMNS: [&str; 31] = [
    "Flow ID",
    "Source IP",
    "Source Port",
    "Destination IP",
    "Destination Port",
    "Protocol",
    "Day of Week",
    "Hour",
    "Flow Duration",
    "Total Fwd Packets",
    "Total Backward Packets",
    "Flow Bytes/s",
    "Flow Packets/s",
    "Flow IAT Mean",
    "Flow IAT Std",
    "Flow IAT Max",
    "Flow IAT Min",
    "Fwd PSH Flags",
    "Bwd PSH Flags",
    "Fwd Header Length",
    "Bwd Header Length",
    "FIN Flag Count",
    "SYN Flag Count",
    "RST Flag Count",
    "PSH Flag Count",
    "ACK Flag Count",
    "URG Flag Count",
    "CWE Flag Count",
    "ECE Flag Count",
    "Init_Win_bytes_forward",
    "Init_Win_bytes_backward",
];

pub const N_FEATURES: usize = 31;

/// Canonical form used for header matching: trimmed and case-folded.
pub fn canonical(header: &str) -> String {
    header.trim().to_ascii_lowercase()
}
