//! The inference client: streams a prepared dataset to a server one
//! datagram per sample, with bounded retransmission over the idempotent
//! server, and records results for evaluation.

use std::net::{ToSocketAddrs, UdpSocket};
use std::path::Path;
use std::time::{Duration, Instant};

use crate::dataset::PreparedDataset;
use crate::error::{Error, Result};
use crate::wire::{
    decode_ping_reply, decode_reply, encode_ping_request, encode_request, InferenceReply,
    InferenceRequest, PingReply, Status,
};

#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub timeout_ms: u64,
    pub retries: u32,
    /// When set, the server's ping digest must match.
    pub expected_digest: Option<u64>,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions {
            timeout_ms: 200,
            retries: 3,
            expected_digest: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientRow {
    pub sample_id: u32,
    pub true_label: u8,
    /// `None` when every attempt timed out.
    pub reply: Option<InferenceReply>,
    pub rtt_us: u64,
    pub attempts: u32,
}

#[derive(Debug, Clone)]
pub struct ClientRunResult {
    pub rows: Vec<ClientRow>,
    pub sent: usize,
    pub answered: usize,
    pub lost: usize,
    /// Total retransmissions beyond each sample's first attempt.
    pub retransmissions: u64,
    pub mean_rtt_us: f64,
    pub ping: Option<PingReply>,
}

fn connect(server: &str, timeout_ms: u64) -> Result<UdpSocket> {
    let addr = server
        .to_socket_addrs()
        .map_err(|e| Error::Net(format!("cannot resolve {server}: {e}")))?
        .next()
        .ok_or_else(|| Error::Net(format!("no address for {server}")))?;
    let socket = UdpSocket::bind("0.0.0.0:0").map_err(|e| Error::Net(e.to_string()))?;
    socket
        .connect(addr)
        .map_err(|e| Error::Net(format!("cannot connect to {server}: {e}")))?;
    socket
        .set_read_timeout(Some(Duration::from_millis(timeout_ms.max(1))))
        .map_err(|e| Error::Net(e.to_string()))?;
    Ok(socket)
}

/// One ping round trip; `Err` when the server never answers.
pub fn ping(socket: &UdpSocket, retries: u32) -> Result<PingReply> {
    let mut buf = [0u8; 65536];
    for _ in 0..=retries {
        socket
            .send(&encode_ping_request())
            .map_err(|e| Error::Net(e.to_string()))?;
        match socket.recv(&mut buf) {
            Ok(len) => {
                if let Ok(reply) = decode_ping_reply(&buf[..len]) {
                    return Ok(reply);
                }
            }
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut => {}
            Err(e) => return Err(Error::Net(e.to_string())),
        }
    }
    Err(Error::Net("ping timed out".into()))
}

/// Streams every sample of the dataset to the server. When the initial
/// ping fails the run returns immediately with every sample marked lost.
pub fn run_client(
    dataset: &PreparedDataset,
    server: &str,
    options: &ClientOptions,
) -> Result<ClientRunResult> {
    let socket = connect(server, options.timeout_ms)?;
    let n = dataset.n_samples;

    let ping_reply = match ping(&socket, options.retries) {
        Ok(reply) => reply,
        Err(_) => {
            // Unreachable server: report the whole run as lost.
            let rows = (0..n)
                .map(|i| ClientRow {
                    sample_id: i as u32,
                    true_label: dataset.labels[i],
                    reply: None,
                    rtt_us: 0,
                    attempts: 0,
                })
                .collect();
            return Ok(ClientRunResult {
                rows,
                sent: 0,
                answered: 0,
                lost: n,
                retransmissions: 0,
                mean_rtt_us: 0.0,
                ping: None,
            });
        }
    };
    if ping_reply.n_features as usize != crate::dataset::N_FEATURES {
        return Err(Error::Net(format!(
            "server model expects {} features, dataset has {}",
            ping_reply.n_features,
            crate::dataset::N_FEATURES
        )));
    }
    if let Some(expected) = options.expected_digest {
        if expected != ping_reply.model_digest {
            return Err(Error::Net(format!(
                "model digest mismatch: server {:016x}, expected {expected:016x}",
                ping_reply.model_digest
            )));
        }
    }

    let mut buf = [0u8; 65536];
    let mut rows = Vec::with_capacity(n);
    let mut retransmissions = 0u64;
    for i in 0..n {
        let request = encode_request(&InferenceRequest {
            sample_id: i as u32,
            features: dataset.row(i).iter().map(|&v| v as f32).collect(),
        });
        let mut answer: Option<InferenceReply> = None;
        let mut attempts = 0u32;
        let start = Instant::now();
        'attempts: while attempts <= options.retries {
            attempts += 1;
            socket
                .send(&request)
                .map_err(|e| Error::Net(e.to_string()))?;
            let deadline = Instant::now() + Duration::from_millis(options.timeout_ms.max(1));
            // Drain arrivals until the matching sample id or the timeout;
            // stale or duplicate replies are ignored without counting as
            // an attempt.
            loop {
                match socket.recv(&mut buf) {
                    Ok(len) => {
                        if let Ok(reply) = decode_reply(&buf[..len]) {
                            if reply.sample_id == i as u32 {
                                answer = Some(reply);
                                break 'attempts;
                            }
                        }
                    }
                    Err(e)
                        if e.kind() == std::io::ErrorKind::WouldBlock
                            || e.kind() == std::io::ErrorKind::TimedOut => {}
                    Err(e) => return Err(Error::Net(e.to_string())),
                }
                if Instant::now() >= deadline {
                    continue 'attempts;
                }
            }
        }
        retransmissions += (attempts - 1) as u64;
        rows.push(ClientRow {
            sample_id: i as u32,
            true_label: dataset.labels[i],
            rtt_us: if answer.is_some() {
                start.elapsed().as_micros().min(u64::MAX as u128) as u64
            } else {
                0
            },
            attempts,
            reply: answer,
        });
    }

    let answered = rows.iter().filter(|r| r.reply.is_some()).count();
    let rtt_sum: u64 = rows.iter().filter(|r| r.reply.is_some()).map(|r| r.rtt_us).sum();
    Ok(ClientRunResult {
        sent: n,
        answered,
        lost: n - answered,
        retransmissions,
        mean_rtt_us: if answered == 0 {
            0.0
        } else {
            rtt_sum as f64 / answered as f64
        },
        rows,
        ping: Some(ping_reply),
    })
}

/// Writes the per-sample results CSV plus a trailing summary comment.
pub fn write_results_csv(result: &ClientRunResult, path: impl AsRef<Path>) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::from(
        "sample_id,true_label,predicted_class,confidence,inference_time_us,memory_bytes,rtt_us,attempts\n",
    );
    for row in &result.rows {
        match &row.reply {
            Some(reply) if reply.status == Status::Ok => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    row.sample_id,
                    row.true_label,
                    reply.predicted_class,
                    reply.confidence,
                    reply.inference_time_us,
                    reply.memory_bytes,
                    row.rtt_us,
                    row.attempts
                );
            }
            Some(reply) => {
                let _ = writeln!(
                    out,
                    "{},{},error-status-{},,,,{},{}",
                    row.sample_id, row.true_label, reply.status as u8, row.rtt_us, row.attempts
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    "{},{},lost,,,,,{}",
                    row.sample_id, row.true_label, row.attempts
                );
            }
        }
    }
    let _ = writeln!(
        out,
        "# summary sent={} answered={} lost={} retransmissions={} mean_rtt_us={:.3}",
        result.sent, result.answered, result.lost, result.retransmissions, result.mean_rtt_us
    );
    Ok(std::fs::write(path, out)?)
}
