//! The 15 raw flow labels and their merge into 7 classes.

use crate::error::{Error, Result};

/// Merged traffic classes, in stable id order 0..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum MergedLabel {
    Benign = 0,
    Dos = 1,
    PortScan = 2,
    Ddos = 3,
    BruteForce = 4,
    WebAttack = 5,
    BotInfiltrationHeartbleed = 6,
}

pub const N_CLASSES: usize = 7;

/// Display names in id order; these are the names bundled into every
/// serialized artifact's label table.
pub const MERGED_LABEL_NAMES: [&str; N_CLASSES] = [
    "BENIGN",
    "DoS",
    "PortScan",
    "DDoS",
    "Brute Force",
    "Web Attack",
    "Bot/Infiltration/Heartbleed",
];

/// The 15 raw labels, paired with the class each merges into.
pub const RAW_LABELS: [(&str, MergedLabel); 15] = [
    ("BENIGN", MergedLabel::Benign),
    ("DoS Hulk", MergedLabel::Dos),
    ("DoS GoldenEye", MergedLabel::Dos),
    ("DoS slowloris", MergedLabel::Dos),
    ("DoS Slowhttptest", MergedLabel::Dos),
    ("PortScan", MergedLabel::PortScan),
    ("DDoS", MergedLabel::Ddos),
    ("FTP-Patator", MergedLabel::BruteForce),
    ("SSH-Patator", MergedLabel::BruteForce),
    ("Web Attack-Brute Force", MergedLabel::WebAttack),
    ("Web Attack-XSS", MergedLabel::WebAttack),
    ("Web Attack-Sql Injection", MergedLabel::WebAttack),
    ("Bot", MergedLabel::BotInfiltrationHeartbleed),
    ("Infiltration", MergedLabel::BotInfiltrationHeartbleed),
    ("Heartbleed", MergedLabel::BotInfiltrationHeartbleed),
];

impl MergedLabel {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<MergedLabel> {
        use MergedLabel::*;
        match id {
            0 => Some(Benign),
            1 => Some(Dos),
            2 => Some(PortScan),
            3 => Some(Ddos),
            4 => Some(BruteForce),
            5 => Some(WebAttack),
            6 => Some(BotInfiltrationHeartbleed),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        MERGED_LABEL_NAMES[self as usize]
    }
}

/// Maps a raw label to its merged class. Matching trims surrounding
/// whitespace; some CSV exports replace the hyphen in the web-attack
/// labels with other separator bytes, so any single non-alphanumeric
/// separator between "Web Attack" and the subtype is accepted.
pub fn merge_labels(label_raw: &str) -> Result<MergedLabel> {
    let trimmed = label_raw.trim();
    for (name, merged) in RAW_LABELS {
        if trimmed == name {
            return Ok(merged);
        }
    }
    if let Some(rest) = trimmed.strip_prefix("Web Attack") {
        let subtype = rest
            .trim_start_matches(|c: char| !c.is_ascii_alphanumeric())
            .trim();
        match subtype {
            "Brute Force" | "XSS" | "Sql Injection" => return Ok(MergedLabel::WebAttack),
            _ => {}
        }
    }
    Err(Error::UnknownLabel(label_raw.to_string()))
}
