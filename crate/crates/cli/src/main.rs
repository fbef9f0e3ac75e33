//! `tinyids`: intrusion-detection pipeline CLI.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/schema error,
//! 3 model/format error, 4 network error.

mod commands;
mod profile;

use clap::{Args, Parser, Subcommand};
use tinyids_core::error::ErrorKind;

// Count allocation traffic so per-sample transient-memory figures are
// populated when benchmarking through the CLI.
#[global_allocator]
static ALLOC: tinyids_core::bench::alloc_counter::CountingAllocator =
    tinyids_core::bench::alloc_counter::CountingAllocator;

#[derive(Parser)]
#[command(
    name = "tinyids",
    version,
    about = "Flow-based intrusion detection: dataset preparation, MLP and random-forest training, int8 quantization, forest compaction, benchmarking, and UDP serving"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Seed resolution: explicit flag, else TINYIDS_SEED, else 0.
fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("TINYIDS_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

#[derive(Args)]
struct PrepareArgs {
    /// Input flow CSV file(s)
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<std::path::PathBuf>,
    /// Output prepared-dataset file
    #[arg(long)]
    out: std::path::PathBuf,
    /// Optional CSV export of the encoded matrix
    #[arg(long)]
    csv_out: Option<std::path::PathBuf>,
    /// Stratified sample fraction (1.0 keeps everything)
    #[arg(long, default_value_t = 0.05)]
    sample_frac: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Timestamp format (chrono syntax), day-first minutes layout by default
    #[arg(long)]
    time_format: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output CSV path
    #[arg(long)]
    out: std::path::PathBuf,
    /// Rows to generate per raw label (15 labels)
    #[arg(long)]
    per_class: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainMlpArgs {
    /// Architecture: baseline, enhanced, compact, or a width list like 16,32
    #[arg(long, default_value = "baseline")]
    arch: String,
    /// Prepared-dataset file
    #[arg(long)]
    data: std::path::PathBuf,
    /// Output model file
    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Epoch cap (early stopping usually halts first)
    #[arg(long, default_value_t = 500)]
    max_epochs: usize,
    /// Epochs without validation improvement before stopping
    #[arg(long, default_value_t = 10)]
    patience: usize,
}

#[derive(Args)]
struct QuantizeArgs {
    /// Float-MLP model file
    #[arg(long = "in")]
    input: std::path::PathBuf,
    /// Output quantized model file
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct TrainRfArgs {
    #[arg(long)]
    data: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Depth cap, or "none" for unlimited growth
    #[arg(long, default_value = "none")]
    max_depth: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CompactRfArgs {
    /// The dataset the full model was trained on
    #[arg(long)]
    data: std::path::PathBuf,
    /// The full forest to derive importances from
    #[arg(long)]
    full_model: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long, default_value_t = 0.6)]
    importance_threshold: f64,
    #[arg(long, default_value_t = 10)]
    trees: usize,
    #[arg(long, default_value_t = 10)]
    max_depth: u32,
    /// Seed the full model was trained with (importance replay) and the
    /// compact retrain seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    data: std::path::PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0.05)]
    fold_frac: f64,
    /// Comma-separated: ml-mlp,tinyml-mlp,ml-rf,tinyml-rf
    #[arg(long, default_value = "ml-mlp,tinyml-mlp,ml-rf,tinyml-rf")]
    scenarios: String,
    #[arg(long, default_value = "baseline")]
    arch: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report artifacts
    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long, default_value_t = 500)]
    max_epochs: usize,
    /// Warmup inference calls excluded from timing
    #[arg(long, default_value_t = 10)]
    warmup: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory containing a raw-sample file from a previous bench run
    #[arg(long)]
    bench_dir: std::path::PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    /// Serialized model (float MLP, quantized MLP, or forest)
    #[arg(long)]
    model: std::path::PathBuf,
    #[arg(long, default_value = "0.0.0.0")]
    bind: String,
    #[arg(long, default_value_t = 9000)]
    port: u16,
}

#[derive(Args)]
struct ClientArgs {
    /// Server address, host:port
    #[arg(long)]
    server: String,
    /// Prepared-dataset file to stream
    #[arg(long)]
    data: std::path::PathBuf,
    /// Results CSV path
    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long, default_value_t = 200)]
    timeout_ms: u64,
    #[arg(long, default_value_t = 3)]
    retries: u32,
    /// Local model file; its digest must match the server's
    #[arg(long)]
    model: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Profile file (key=value lines) driving the full pipeline
    #[arg(long)]
    profile: std::path::PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, clean, encode, and stratified-sample flow CSVs
    Prepare(PrepareArgs),
    /// Generate a synthetic flow corpus
    Synth(SynthArgs),
    /// Train a float MLP on a prepared dataset
    TrainMlp(TrainMlpArgs),
    /// Convert a float MLP to int8 dynamic-range quantization
    Quantize(QuantizeArgs),
    /// Train a random forest on a prepared dataset
    TrainRf(TrainRfArgs),
    /// Select features by cumulative importance and retrain compactly
    CompactRf(CompactRfArgs),
    /// Run scenario benchmarks over stratified folds
    Bench(BenchArgs),
    /// Re-emit report artifacts from a saved raw-sample file
    Report(ReportArgs),
    /// Serve per-sample inference over UDP
    Serve(ServeArgs),
    /// Stream a dataset to an inference server and record results
    Client(ClientArgs),
    /// Run the full pipeline from a profile file
    Run(RunArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code conventions differ; usage problems are 1.
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Prepare(args) => commands::prepare(args),
        Command::Synth(args) => commands::synth(args),
        Command::TrainMlp(args) => commands::train_mlp(args),
        Command::Quantize(args) => commands::quantize(args),
        Command::TrainRf(args) => commands::train_rf(args),
        Command::CompactRf(args) => commands::compact_rf(args),
        Command::Bench(args) => commands::bench(args),
        Command::Report(args) => commands::report(args),
        Command::Serve(args) => commands::serve(args),
        Command::Client(args) => commands::client(args),
        Command::Run(args) => profile::run(args),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Model => 3,
                ErrorKind::Network => 4,
            };
            std::process::exit(code);
        }
    }
}
