//! The inference server: a serial UDP loop over an immutable model.
//!
//! One datagram is handled at a time so the reported per-sample timing is
//! honest. The server is stateless; a retransmitted request produces an
//! identical reply apart from the timing field.

use std::net::UdpSocket;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fmt::fnv1a64;
use crate::model::LoadedModel;
use crate::wire::{
    check_header, encode_ping_reply, encode_reply, InferenceReply, PingReply, Status,
    MAX_FEATURES, MSG_PING, MSG_REQUEST,
};

struct Server {
    socket: UdpSocket,
    model: LoadedModel,
    digest: u64,
    working_set: u32,
}

/// sample_id of a request whose header was readable, for error replies.
fn sample_id_if_readable(datagram: &[u8]) -> u32 {
    if datagram.len() >= 10 {
        u32::from_le_bytes(datagram[6..10].try_into().unwrap())
    } else {
        0
    }
}

impl Server {
    fn handle(&self, datagram: &[u8]) -> Option<Vec<u8>> {
        // Undecipherable header: drop silently.
        let msg_type = check_header(datagram).ok()?;
        match msg_type {
            MSG_PING => Some(encode_ping_reply(&PingReply {
                model_digest: self.digest,
                n_features: self.model.n_features() as u16,
            })),
            MSG_REQUEST => Some(self.handle_request(datagram)),
            _ => Some(encode_reply(&InferenceReply::error(
                sample_id_if_readable(datagram),
                Status::Malformed,
            ))),
        }
    }

    fn handle_request(&self, datagram: &[u8]) -> Vec<u8> {
        let sample_id = sample_id_if_readable(datagram);
        if datagram.len() < 12 {
            return encode_reply(&InferenceReply::error(sample_id, Status::Malformed));
        }
        let n = u16::from_le_bytes(datagram[10..12].try_into().unwrap()) as usize;
        if n > MAX_FEATURES || datagram.len() != 12 + 4 * n {
            return encode_reply(&InferenceReply::error(sample_id, Status::Malformed));
        }
        if n != self.model.n_features() {
            return encode_reply(&InferenceReply::error(sample_id, Status::DimensionMismatch));
        }
        let features: Vec<f64> = datagram[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();

        let start = Instant::now();
        let result = self.model.infer_raw(&features);
        let elapsed_us = start.elapsed().as_micros().min(u32::MAX as u128) as u32;
        match result {
            Ok((class, confidence)) => encode_reply(&InferenceReply {
                sample_id,
                status: Status::Ok,
                predicted_class: class,
                confidence,
                inference_time_us: elapsed_us,
                memory_bytes: self.working_set,
            }),
            Err(_) => encode_reply(&InferenceReply::error(sample_id, Status::ModelNotLoaded)),
        }
    }

    fn run(&self, shutdown: &AtomicBool) -> Result<()> {
        let mut buf = [0u8; 65536];
        self.socket
            .set_read_timeout(Some(Duration::from_millis(100)))?;
        while !shutdown.load(Ordering::Relaxed) {
            match self.socket.recv_from(&mut buf) {
                Ok((len, peer)) => {
                    if let Some(reply) = self.handle(&buf[..len]) {
                        // A vanished peer is not a server error.
                        let _ = self.socket.send_to(&reply, peer);
                    }
                }
                Err(e)
                    if e.kind() == std::io::ErrorKind::WouldBlock
                        || e.kind() == std::io::ErrorKind::TimedOut =>
                {
                    continue;
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }
}

fn bind_server(model_path: &Path, bind: &str, port: u16) -> Result<Server> {
    let bytes = std::fs::read(model_path)?;
    let model = LoadedModel::from_bytes(&bytes)?;
    let socket = UdpSocket::bind((bind, port))
        .map_err(|e| Error::Net(format!("cannot bind {bind}:{port}: {e}")))?;
    Ok(Server {
        socket,
        digest: fnv1a64(&bytes),
        working_set: model.working_set_bytes() as u32,
        model,
    })
}

/// Runs the server on the current thread until `shutdown` is set.
pub fn serve(
    model_path: impl AsRef<Path>,
    bind: &str,
    port: u16,
    shutdown: Arc<AtomicBool>,
) -> Result<()> {
    let server = bind_server(model_path.as_ref(), bind, port)?;
    eprintln!(
        "serving {} ({} features) on {}",
        server.model.kind_name(),
        server.model.n_features(),
        server.socket.local_addr()?
    );
    server.run(&shutdown)
}

/// A server running on a background thread, used by tests and the
/// loopback conformance check.
pub struct ServerHandle {
    pub addr: std::net::SocketAddr,
    shutdown: Arc<AtomicBool>,
    join: Option<std::thread::JoinHandle<Result<()>>>,
}

impl ServerHandle {
    pub fn stop(mut self) -> Result<()> {
        self.shutdown.store(true, Ordering::Relaxed);
        match self.join.take() {
            Some(handle) => handle
                .join()
                .map_err(|_| Error::Net("server thread panicked".into()))?,
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(handle) = self.join.take() {
            let _ = handle.join();
        }
    }
}

/// Binds an ephemeral loopback port and serves from a background thread.
pub fn spawn_server(model_path: impl AsRef<Path>) -> Result<ServerHandle> {
    let server = bind_server(model_path.as_ref(), "127.0.0.1", 0)?;
    let addr = server.socket.local_addr()?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let thread_shutdown = shutdown.clone();
    let join = std::thread::spawn(move || server.run(&thread_shutdown));
    Ok(ServerHandle {
        addr,
        shutdown,
        join: Some(join),
    })
}
