//! UDP inference protocol: bit-exact little-endian datagrams carrying
//! per-sample requests and replies, plus a ping for health and
//! model-compatibility checks.
//!
//! Request (12 + 4n bytes): magic `TIDS`, u8 version = 1, u8 msg_type = 1,
//! u32 sample_id, u16 n_features, then n_features float32 values (raw
//! post-encoding features, pre-standardization).
//!
//! Reply (25 bytes): magic, version, u8 msg_type = 2, u32 sample_id,
//! u8 status, u8 predicted_class, float32 confidence, u32
//! inference_time_us, u32 memory_bytes, u8 reserved = 0. The documented
//! fields sum to 24 bytes; the reserved byte pads the datagram to the
//! fixed 25-byte length and must be zero.
//!
//! Ping request (6 bytes): magic, version, u8 msg_type = 0. Ping reply
//! (16 bytes): magic, version, u8 msg_type = 0, u64 FNV-1a model digest,
//! u16 model n_features.

mod client;
mod server;


pub use client::{run_client, write_results_csv, ClientOptions, ClientRow, ClientRunResult};
pub use server::{serve, spawn_server, ServerHandle};

use crate::error::{Error, Result};

pub const MSG_PING: u8 = 0;
pub const MSG_REQUEST: u8 = 1;
pub const MSG_REPLY: u8 = 2;

pub const MAX_FEATURES: usize = 2048;
pub const REPLY_LEN: usize = 25;
pub const PING_REQUEST_LEN: usize = 6;
pub const PING_REPLY_LEN: usize = 16;

/// Reply status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Status {
    Ok = 0,
    Malformed = 1,
    DimensionMismatch = 2,
    ModelNotLoaded = 3,
}

impl Status {
    pub fn from_u8(v: u8) -> Option<Status> {
        match v {
            0 => Some(Status::Ok),
            1 => Some(Status::Malformed),
            2 => Some(Status::DimensionMismatch),
            3 => Some(Status::ModelNotLoaded),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceRequest {
    pub sample_id: u32,
    pub features: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReply {
    pub sample_id: u32,
    pub status: Status,
    pub predicted_class: u8,
    pub confidence: f32,
    pub inference_time_us: u32,
    pub memory_bytes: u32,
}

impl InferenceReply {
    /// Error reply carrying the contract values for non-ok statuses.
    pub fn error(sample_id: u32, status: Status) -> InferenceReply {
        InferenceReply {
            sample_id,
            status,
            predicted_class: 255,
            confidence: 0.0,
            inference_time_us: 0,
            memory_bytes: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PingReply {
    pub model_digest: u64,
    pub n_features: u16,
}

fn header(msg_type: u8) -> Vec<u8> {
    let mut buf = Vec::with_capacity(32);
    buf.extend_from_slice(&crate::fmt::MAGIC);
    buf.push(crate::fmt::VERSION);
    buf.push(msg_type);
    buf
}

/// Checks magic and version, returning the message type.
pub(crate) fn check_header(datagram: &[u8]) -> Result<u8> {
    if datagram.len() < 6 {
        return Err(Error::Net(format!(
            "datagram of {} bytes is shorter than the 6-byte header",
            datagram.len()
        )));
    }
    if datagram[0..4] != crate::fmt::MAGIC {
        return Err(Error::Net("bad magic".into()));
    }
    if datagram[4] != crate::fmt::VERSION {
        return Err(Error::Net(format!("unsupported version {}", datagram[4])));
    }
    Ok(datagram[5])
}

pub fn encode_request(req: &InferenceRequest) -> Vec<u8> {
    debug_assert!(req.features.len() <= MAX_FEATURES);
    let mut buf = header(MSG_REQUEST);
    buf.extend_from_slice(&req.sample_id.to_le_bytes());
    buf.extend_from_slice(&(req.features.len() as u16).to_le_bytes());
    for &f in &req.features {
        buf.extend_from_slice(&f.to_le_bytes());
    }
    buf
}

pub fn decode_request(datagram: &[u8]) -> Result<InferenceRequest> {
    if check_header(datagram)? != MSG_REQUEST {
        return Err(Error::Net("not a request message".into()));
    }
    if datagram.len() < 12 {
        return Err(Error::Net("request shorter than its fixed fields".into()));
    }
    let sample_id = u32::from_le_bytes(datagram[6..10].try_into().unwrap());
    let n = u16::from_le_bytes(datagram[10..12].try_into().unwrap()) as usize;
    if n > MAX_FEATURES {
        return Err(Error::Net(format!("n_features {n} exceeds {MAX_FEATURES}")));
    }
    if datagram.len() != 12 + 4 * n {
        return Err(Error::Net(format!(
            "request length {} does not match 12 + 4*{n}",
            datagram.len()
        )));
    }
    let features = datagram[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(InferenceRequest {
        sample_id,
        features,
    })
}

pub fn encode_reply(reply: &InferenceReply) -> Vec<u8> {
    let mut buf = header(MSG_REPLY);
    buf.extend_from_slice(&reply.sample_id.to_le_bytes());
    buf.push(reply.status as u8);
    buf.push(reply.predicted_class);
    buf.extend_from_slice(&reply.confidence.to_le_bytes());
    buf.extend_from_slice(&reply.inference_time_us.to_le_bytes());
    buf.extend_from_slice(&reply.memory_bytes.to_le_bytes());
    buf.push(0); // reserved
    debug_assert_eq!(buf.len(), REPLY_LEN);
    buf
}

pub fn decode_reply(datagram: &[u8]) -> Result<InferenceReply> {
    if check_header(datagram)? != MSG_REPLY {
        return Err(Error::Net("not a reply message".into()));
    }
    if datagram.len() != REPLY_LEN {
        return Err(Error::Net(format!(
            "reply length {} is not {REPLY_LEN}",
            datagram.len()
        )));
    }
    if datagram[24] != 0 {
        return Err(Error::Net("reserved byte is not zero".into()));
    }
    let status = Status::from_u8(datagram[10])
        .ok_or_else(|| Error::Net(format!("unknown status {}", datagram[10])))?;
    let reply = InferenceReply {
        sample_id: u32::from_le_bytes(datagram[6..10].try_into().unwrap()),
        status,
        predicted_class: datagram[11],
        confidence: f32::from_le_bytes(datagram[12..16].try_into().unwrap()),
        inference_time_us: u32::from_le_bytes(datagram[16..20].try_into().unwrap()),
        memory_bytes: u32::from_le_bytes(datagram[20..24].try_into().unwrap()),
    };
    if reply.status != Status::Ok && (reply.predicted_class != 255 || reply.confidence != 0.0) {
        return Err(Error::Net(
            "error reply must carry predicted_class 255 and confidence 0".into(),
        ));
    }
    Ok(reply)
}

pub fn encode_ping_request() -> Vec<u8> {
    header(MSG_PING)
}

pub fn encode_ping_reply(reply: &PingReply) -> Vec<u8> {
    let mut buf = header(MSG_PING);
    buf.extend_from_slice(&reply.model_digest.to_le_bytes());
    buf.extend_from_slice(&reply.n_features.to_le_bytes());
    debug_assert_eq!(buf.len(), PING_REPLY_LEN);
    buf
}

pub fn decode_ping_reply(datagram: &[u8]) -> Result<PingReply> {
    if check_header(datagram)? != MSG_PING {
        return Err(Error::Net("not a ping message".into()));
    }
    if datagram.len() != PING_REPLY_LEN {
        return Err(Error::Net(format!(
            "ping reply length {} is not {PING_REPLY_LEN}",
            datagram.len()
        )));
    }
    Ok(PingReply {
        model_digest: u64::from_le_bytes(datagram[6..14].try_into().unwrap()),
        n_features: u16::from_le_bytes(datagram[14..16].try_into().unwrap()),
    })
}
