//! Subcommand implementations. Progress goes to stderr; machine artifacts
//! go only to the requested output paths.

use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use tinyids_core::bench::{emit_report, read_raw_report, RunSettings, Scenario};
use tinyids_core::dataset::{
    self, make_fold_plan, prepare as prepare_pipeline, synth_generate_to_file, PrepareOptions,
    PreparedDataset, SynthSpec, TimestampFormat, N_CLASSES, N_FEATURES,
};
use tinyids_core::error::{Error, Result};
use tinyids_core::forest::{
    compact_forest, recompute_importances, select_features_cumulative, train_forest, Forest,
    ForestConfig,
};
use tinyids_core::mlp::{build_mlp, train, ArchSpec, MlpModel, TrainConfig};
use tinyids_core::quant::convert;
use tinyids_core::wire;

use crate::{
    resolve_seed, BenchArgs, ClientArgs, CompactRfArgs, PrepareArgs, QuantizeArgs, ReportArgs,
    ServeArgs, SynthArgs, TrainMlpArgs, TrainRfArgs,
};

pub fn prepare(args: PrepareArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let sample_fraction = if args.sample_frac >= 1.0 {
        None
    } else {
        Some(args.sample_frac)
    };
    let options = PrepareOptions {
        time_format: args
            .time_format
            .map(TimestampFormat::new)
            .unwrap_or_default(),
        sample_fraction,
        seed,
    };
    let (ds, stats) = prepare_pipeline(&args.input, &options)?;
    ds.write_file(&args.out)?;
    if let Some(csv_out) = &args.csv_out {
        ds.write_csv(csv_out)?;
    }
    eprintln!(
        "parsed {} rows ({} unparseable cells), dropped {} NaN + {} bad-timestamp, clamped {}+{} infinities, kept {} samples -> {}",
        stats.rows_parsed,
        stats.unparseable_cells,
        stats.clean.dropped_nan,
        stats.clean.dropped_timestamp,
        stats.clean.clamped_pos_inf,
        stats.clean.clamped_neg_inf,
        ds.n_samples,
        args.out.display()
    );
    Ok(())
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    synth_generate_to_file(&args.out, &SynthSpec::default_corpus(), args.per_class, seed)?;
    eprintln!(
        "wrote {} synthetic rows to {}",
        15 * args.per_class,
        args.out.display()
    );
    Ok(())
}

/// Loads a prepared dataset, fits its scaler, and returns scaled rows.
fn load_scaled(path: &std::path::Path) -> Result<(PreparedDataset, dataset::ScalerParams, Vec<f64>)> {
    let ds = PreparedDataset::read_file(path)?;
    if ds.n_samples == 0 {
        return Err(Error::EmptyDataset);
    }
    let scaler = dataset::fit_scaler(&ds.matrix, N_FEATURES)?;
    let scaled = dataset::apply_scaler(&scaler, &ds.matrix, N_FEATURES)?;
    Ok((ds, scaler, scaled))
}

fn label_names() -> Vec<String> {
    dataset::MERGED_LABEL_NAMES
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn train_mlp(args: TrainMlpArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let arch = ArchSpec::parse(&args.arch)?;
    let (ds, scaler, scaled) = load_scaled(&args.data)?;
    let init = build_mlp(&arch, N_FEATURES, N_CLASSES, seed)?;
    let cfg = TrainConfig {
        seed,
        max_epochs: args.max_epochs,
        patience: args.patience,
        ..Default::default()
    };
    let (model, history) = train(&init, &scaled, &ds.labels, &cfg)?;
    let model = model.with_preprocessing(scaler, label_names());
    std::fs::write(&args.out, model.serialize())?;
    eprintln!(
        "trained {arch} on {} samples: {} epochs (best {}), final val loss {:.6} -> {}",
        ds.n_samples,
        history.epochs_run,
        history.best_epoch,
        history.val_loss[history.best_epoch - 1],
        args.out.display()
    );
    Ok(())
}

pub fn quantize(args: QuantizeArgs) -> Result<()> {
    let model = MlpModel::deserialize(&std::fs::read(&args.input)?)?;
    let quant = convert(&model)?;
    std::fs::write(&args.out, quant.serialize())?;
    let float_len = std::fs::metadata(&args.input)?.len();
    let quant_len = std::fs::metadata(&args.out)?.len();
    eprintln!(
        "quantized {} ({} bytes) -> {} ({} bytes, {:.2}x smaller)",
        args.input.display(),
        float_len,
        args.out.display(),
        quant_len,
        float_len as f64 / quant_len as f64
    );
    Ok(())
}

fn parse_max_depth(s: &str) -> Result<Option<u32>> {
    match s {
        "none" | "unlimited" => Ok(None),
        other => other
            .parse::<u32>()
            .map(Some)
            .map_err(|_| Error::Argument(format!("bad max depth {other:?} (number or \"none\")"))),
    }
}

pub fn train_rf(args: TrainRfArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let (ds, scaler, scaled) = load_scaled(&args.data)?;
    let config = ForestConfig {
        n_trees: args.trees,
        max_depth: parse_max_depth(&args.max_depth)?,
        seed,
        ..Default::default()
    };
    let forest = train_forest(
        &scaled,
        &ds.labels,
        N_FEATURES,
        N_CLASSES,
        &config,
        scaler,
        label_names(),
    )?;
    std::fs::write(&args.out, forest.serialize())?;
    eprintln!(
        "trained {} trees ({} nodes, max depth {}) on {} samples -> {}",
        forest.trees.len(),
        forest.total_nodes(),
        forest.max_depth_observed(),
        ds.n_samples,
        args.out.display()
    );
    Ok(())
}

pub fn compact_rf(args: CompactRfArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let (ds, scaler, scaled) = load_scaled(&args.data)?;
    let full = Forest::deserialize(&std::fs::read(&args.full_model)?)?;
    if full.n_features != N_FEATURES {
        return Err(Error::Dimension {
            expected: N_FEATURES,
            got: full.n_features,
        });
    }
    // The serialized format carries structure only, so importances are
    // replayed from the training data using the original seed.
    let importances = recompute_importances(&full, &scaled, &ds.labels, seed)?;
    let selected = select_features_cumulative(&importances, args.importance_threshold)?;
    let config = ForestConfig {
        n_trees: args.trees,
        max_depth: Some(args.max_depth),
        seed,
        ..Default::default()
    };
    let compact = compact_forest(
        &scaled,
        &ds.labels,
        N_FEATURES,
        N_CLASSES,
        &selected,
        &config,
        scaler,
        label_names(),
    )?;
    std::fs::write(&args.out, compact.serialize())?;
    eprintln!(
        "selected {} of {} features at threshold {}, compact forest {} trees ({} nodes) -> {}",
        selected.len(),
        N_FEATURES,
        args.importance_threshold,
        compact.trees.len(),
        compact.total_nodes(),
        args.out.display()
    );
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let seed = resolve_seed(args.seed);
    let ds = PreparedDataset::read_file(&args.data)?;
    let plan = make_fold_plan(&ds.labels, N_CLASSES, args.folds, args.fold_frac, seed)?;
    let settings = RunSettings {
        scenarios: Scenario::parse_list(&args.scenarios)?,
        arch: ArchSpec::parse(&args.arch)?,
        train: TrainConfig {
            max_epochs: args.max_epochs,
            ..Default::default()
        },
        warmup: args.warmup,
        seed,
        ..Default::default()
    };
    eprintln!(
        "benchmarking {:?} over {} folds of {} samples each",
        settings.scenarios.iter().map(|s| s.name()).collect::<Vec<_>>(),
        plan.k,
        plan.folds.first().map(Vec::len).unwrap_or(0),
    );
    let report = tinyids_core::bench::run_scenarios(&ds, &plan, &settings)?;
    let files = emit_report(&report, &args.out)?;
    for summary in report.summaries() {
        eprintln!(
            "{}: accuracy {:.4}%, mean inference {:.1} us, working set {} B, model {} B",
            summary.scenario.name(),
            summary.mean_accuracy,
            summary.mean_inference_time_us,
            summary.mean_working_set_bytes,
            summary.mean_model_size_bytes,
        );
    }
    eprintln!("wrote {} files to {}", files.len(), args.out.display());
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<()> {
    let report = read_raw_report(&args.bench_dir)?;
    let files = emit_report(&report, &args.bench_dir)?;
    eprintln!(
        "re-emitted {} files in {}",
        files.len(),
        args.bench_dir.display()
    );
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<()> {
    wire::serve(
        &args.model,
        &args.bind,
        args.port,
        Arc::new(AtomicBool::new(false)),
    )
}

pub fn client(args: ClientArgs) -> Result<()> {
    let ds = PreparedDataset::read_file(&args.data)?;
    let expected_digest = match &args.model {
        Some(path) => Some(tinyids_core::fmt::fnv1a64(&std::fs::read(path)?)),
        None => None,
    };
    let options = wire::ClientOptions {
        timeout_ms: args.timeout_ms,
        retries: args.retries,
        expected_digest,
    };
    let result = wire::run_client(&ds, &args.server, &options)?;
    wire::write_results_csv(&result, &args.out)?;
    eprintln!(
        "sent {} samples: {} answered, {} lost, {} retransmissions, mean rtt {:.1} us -> {}",
        result.sent,
        result.answered,
        result.lost,
        result.retransmissions,
        result.mean_rtt_us,
        args.out.display()
    );
    if result.lost > 0 {
        return Err(Error::Net(format!("{} samples lost", result.lost)));
    }
    Ok(())
}
