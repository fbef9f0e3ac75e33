//! Flow-based network intrusion detection sized for microcontroller-class
//! deployment.
//!
//! The crate covers the full study pipeline:
//!
//! - [`dataset`]: flow-CSV ingestion, label merging, timestamp expansion,
//!   cleaning, categorical encoding, stratified sampling/splitting/folding,
//!   standardization, and a synthetic corpus generator.
//! - [`mlp`]: dense networks trained with Adam, sparse categorical
//!   cross-entropy, and early stopping.
//! - [`quant`]: post-training int8 dynamic-range quantization and the
//!   matching integer inference path.
//! - [`forest`]: CART random forests with Gini importances,
//!   cumulative-importance feature selection, and a compacted variant.
//! - [`bench`](mod@bench): per-sample latency/memory measurement,
//!   classification metrics, 5-fold scenario runs, and histogram/report
//!   emission.
//! - [`wire`]: a UDP request/reply protocol serving per-sample inference
//!   from any serialized model.
//!
//! All randomized operations take explicit seeds and are reproducible
//! bit-for-bit; all binary formats are little-endian with a shared
//! `TIDS` header.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod fmt;
pub mod forest;
pub mod mlp;
pub mod model;
pub mod quant;
pub mod wire;

pub use error::{Error, Result};
pub use model::LoadedModel;
