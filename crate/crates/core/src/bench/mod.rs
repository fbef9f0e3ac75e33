//! Measurement methodology: classification metrics, per-sample
//! latency/memory sampling, scenario runs over a fold plan, histograms
//! with a scaled normal overlay, and CSV/JSON report emission.

pub mod alloc_counter;
mod report;


pub use report::{emit_report, read_raw_report};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::stratified::FoldPlan;
use crate::dataset::{
    apply_scaler, fit_scaler, stratified_split_indices, PreparedDataset, MERGED_LABEL_NAMES,
    N_CLASSES, N_FEATURES,
};
use crate::error::{Error, Result};
use crate::forest::{compact_forest, select_features_cumulative, train_forest, ForestConfig};
use crate::mlp::{build_mlp, train, ArchSpec, TrainConfig};
use crate::model::LoadedModel;
use crate::quant::convert;

/// Support-weighted classification metrics, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `confusion[true_class][predicted_class]` counts.
    pub confusion: Vec<Vec<u64>>,
}

/// Computes the confusion matrix and support-weighted metrics. Per-class
/// F1 is `2PR/(P+R)`, defined as 0 when `P+R = 0`; weighted recall equals
/// accuracy by construction.
#[allow(clippy::needless_range_loop)]
pub fn evaluate_predictions(y_true: &[u8], y_pred: &[u8], n_classes: usize) -> Result<Metrics> {
    if y_true.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        confusion[t as usize][p as usize] += 1;
    }
    let n = y_true.len() as f64;
    let mut correct = 0u64;
    let mut precision = 0.0;
    let mut recall = 0.0;
    let mut f1 = 0.0;
    for c in 0..n_classes {
        let support: u64 = confusion[c].iter().sum();
        if support == 0 {
            continue;
        }
        let tp = confusion[c][c];
        correct += tp;
        let predicted: u64 = (0..n_classes).map(|t| confusion[t][c]).sum();
        let p = if predicted == 0 {
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let r = tp as f64 / support as f64;
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        let w = support as f64 / n;
        precision += w * p;
        recall += w * r;
        f1 += w * f;
    }
    // Weighted sums can drift a few ulps past 1; keep percentages in range.
    let pct = |v: f64| (100.0 * v).clamp(0.0, 100.0);
    let metrics = Metrics {
        accuracy: pct(correct as f64 / n),
        precision: pct(precision),
        recall: pct(recall),
        f1: pct(f1),
        confusion,
    };
    debug_assert!((metrics.recall - metrics.accuracy).abs() < 1e-9);
    Ok(metrics)
}

/// Runs a prediction function over a raw-feature test set and scores it.
pub fn evaluate<F>(mut predict: F, xs: &[f64], ys: &[u8], n_classes: usize) -> Result<Metrics>
where
    F: FnMut(&[f64]) -> Result<u8>,
{
    if ys.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n_features = xs.len() / ys.len();
    let mut preds = Vec::with_capacity(ys.len());
    for row in xs.chunks_exact(n_features) {
        preds.push(predict(row)?);
    }
    evaluate_predictions(ys, &preds, n_classes)
}

/// One per-sample measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSample {
    /// Monotonic-clock wall time around a single predict call.
    pub inference_time_us: f64,
    /// Deterministic computed activation/scratch footprint of the model.
    pub memory_working_set: u64,
    /// Allocation-hook cumulative byte count during the call;
    /// informational, 0 unless the counting allocator is installed.
    pub memory_transient: u64,
}

/// Times a prediction function per sample, serially, on a monotonic
/// clock. `warmup` extra calls run first and are excluded.
pub fn measure_inference<F>(
    mut predict: F,
    xs: &[f64],
    n_features: usize,
    warmup: usize,
    working_set: u64,
) -> Result<Vec<ResourceSample>>
where
    F: FnMut(&[f64]) -> Result<u8>,
{
    let rows: Vec<&[f64]> = xs.chunks_exact(n_features).collect();
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    for i in 0..warmup {
        predict(rows[i % rows.len()])?;
    }
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let alloc_before = alloc_counter::allocated_bytes();
        let start = Instant::now();
        predict(row)?;
        let elapsed = start.elapsed();
        let alloc_after = alloc_counter::allocated_bytes();
        out.push(ResourceSample {
            inference_time_us: elapsed.as_secs_f64() * 1e6,
            memory_working_set: working_set,
            memory_transient: alloc_after.saturating_sub(alloc_before),
        });
    }
    Ok(out)
}

/// The four evaluation scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    MlMlp,
    TinymlMlp,
    MlRf,
    TinymlRf,
}

pub const ALL_SCENARIOS: [Scenario; 4] = [
    Scenario::MlMlp,
    Scenario::TinymlMlp,
    Scenario::MlRf,
    Scenario::TinymlRf,
];

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::MlMlp => "ML_MLP",
            Scenario::TinymlMlp => "TinyML_MLP",
            Scenario::MlRf => "ML_RF",
            Scenario::TinymlRf => "TinyML_RF",
        }
    }

    pub fn parse(s: &str) -> Result<Scenario> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml-mlp" | "ml_mlp" => Ok(Scenario::MlMlp),
            "tinyml-mlp" | "tinyml_mlp" => Ok(Scenario::TinymlMlp),
            "ml-rf" | "ml_rf" => Ok(Scenario::MlRf),
            "tinyml-rf" | "tinyml_rf" => Ok(Scenario::TinymlRf),
            other => Err(Error::Argument(format!("unknown scenario {other:?}"))),
        }
    }

    pub fn parse_list(s: &str) -> Result<Vec<Scenario>> {
        let mut out = Vec::new();
        for part in s.split(',') {
            let sc = Scenario::parse(part)?;
            if !out.contains(&sc) {
                out.push(sc);
            }
        }
        Ok(out)
    }
}

/// Settings for a scenario run.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub scenarios: Vec<Scenario>,
    pub arch: ArchSpec,
    pub train: TrainConfig,
    pub rf: ForestConfig,
    pub compact_rf: ForestConfig,
    pub importance_threshold: f64,
    pub test_fraction: f64,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            scenarios: ALL_SCENARIOS.to_vec(),
            arch: ArchSpec::Baseline,
            train: TrainConfig::default(),
            rf: ForestConfig::default(),
            compact_rf: ForestConfig::compact(),
            importance_threshold: 0.6,
            test_fraction: 0.2,
            warmup: 10,
            seed: 0,
        }
    }
}

/// Results of one scenario within one fold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFold {
    pub scenario: Scenario,
    pub metrics: Metrics,
    pub samples: Vec<ResourceSample>,
    pub model_size_bytes: u64,
    pub working_set_bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub scenarios: Vec<ScenarioFold>,
}

/// Full benchmark output: per-fold results plus derived means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub scenario_order: Vec<Scenario>,
    pub folds: Vec<FoldReport>,
}

/// Per-scenario aggregate across folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: Scenario,
    pub mean_accuracy: f64,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub mean_inference_time_us: f64,
    pub mean_working_set_bytes: f64,
    pub mean_transient_bytes: f64,
    pub mean_model_size_bytes: f64,
}

impl BenchReport {
    pub fn scenario_folds(&self, scenario: Scenario) -> Vec<&ScenarioFold> {
        self.folds
            .iter()
            .flat_map(|f| f.scenarios.iter().filter(move |s| s.scenario == scenario))
            .collect()
    }

    /// Arithmetic means of the per-fold values.
    pub fn summary(&self, scenario: Scenario) -> Option<ScenarioSummary> {
        let folds = self.scenario_folds(scenario);
        if folds.is_empty() {
            return None;
        }
        let k = folds.len() as f64;
        let mean = |f: &dyn Fn(&ScenarioFold) -> f64| folds.iter().map(|s| f(s)).sum::<f64>() / k;
        let time_mean = |s: &ScenarioFold| {
            if s.samples.is_empty() {
                0.0
            } else {
                s.samples.iter().map(|r| r.inference_time_us).sum::<f64>() / s.samples.len() as f64
            }
        };
        let transient_mean = |s: &ScenarioFold| {
            if s.samples.is_empty() {
                0.0
            } else {
                s.samples.iter().map(|r| r.memory_transient as f64).sum::<f64>()
                    / s.samples.len() as f64
            }
        };
        Some(ScenarioSummary {
            scenario,
            mean_accuracy: mean(&|s| s.metrics.accuracy),
            mean_precision: mean(&|s| s.metrics.precision),
            mean_recall: mean(&|s| s.metrics.recall),
            mean_f1: mean(&|s| s.metrics.f1),
            mean_inference_time_us: mean(&time_mean),
            mean_working_set_bytes: mean(&|s| s.working_set_bytes as f64),
            mean_transient_bytes: mean(&transient_mean),
            mean_model_size_bytes: mean(&|s| s.model_size_bytes as f64),
        })
    }

    pub fn summaries(&self) -> Vec<ScenarioSummary> {
        self.scenario_order
            .iter()
            .filter_map(|&s| self.summary(s))
            .collect()
    }

    /// All per-sample values of one scenario across folds, in fold order.
    pub fn combined_samples(&self, scenario: Scenario) -> Vec<ResourceSample> {
        self.scenario_folds(scenario)
            .iter()
            .flat_map(|s| s.samples.iter().cloned())
            .collect()
    }
}

fn substream(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Trains the requested scenario models on one training partition (raw
/// features; the scaler is fit here and bundled into every model).
/// Models come back in canonical scenario order.
pub fn train_scenario_models(
    train_x_raw: &[f64],
    train_y: &[u8],
    settings: &RunSettings,
    fold: usize,
) -> Result<Vec<(Scenario, LoadedModel)>> {
    let scaler = fit_scaler(train_x_raw, N_FEATURES)?;
    let train_x = apply_scaler(&scaler, train_x_raw, N_FEATURES)?;
    let label_names: Vec<String> = MERGED_LABEL_NAMES.iter().map(|s| s.to_string()).collect();

    let want = |s: Scenario| settings.scenarios.contains(&s);
    let mut models = Vec::new();

    if want(Scenario::MlMlp) || want(Scenario::TinymlMlp) {
        let seed = substream(settings.seed, 100u64.wrapping_add(fold as u64));
        let init = build_mlp(&settings.arch, N_FEATURES, N_CLASSES, seed)?;
        let cfg = TrainConfig {
            seed,
            ..settings.train.clone()
        };
        let (trained, _) = train(&init, &train_x, train_y, &cfg)?;
        let trained = trained.with_preprocessing(scaler.clone(), label_names.clone());
        if want(Scenario::TinymlMlp) {
            models.push((Scenario::TinymlMlp, LoadedModel::QuantMlp(convert(&trained)?)));
        }
        if want(Scenario::MlMlp) {
            models.push((Scenario::MlMlp, LoadedModel::FloatMlp(trained)));
        }
    }
    if want(Scenario::MlRf) || want(Scenario::TinymlRf) {
        let full = train_forest(
            &train_x,
            train_y,
            N_FEATURES,
            N_CLASSES,
            &settings.rf,
            scaler.clone(),
            label_names.clone(),
        )?;
        if want(Scenario::TinymlRf) {
            let importances = full.feature_importances()?;
            let selected = select_features_cumulative(&importances, settings.importance_threshold)?;
            let compact = compact_forest(
                &train_x,
                train_y,
                N_FEATURES,
                N_CLASSES,
                &selected,
                &settings.compact_rf,
                scaler.clone(),
                label_names.clone(),
            )?;
            models.push((Scenario::TinymlRf, LoadedModel::Forest(compact)));
        }
        if want(Scenario::MlRf) {
            models.push((Scenario::MlRf, LoadedModel::Forest(full)));
        }
    }
    // Report in canonical scenario order.
    models.sort_by_key(|(s, _)| ALL_SCENARIOS.iter().position(|c| c == s).unwrap());
    Ok(models)
}

/// Runs the requested scenarios over every fold of the plan: per fold, an
/// 80/20 stratified split, scaler fit on train, training, quantization
/// and compaction as requested, then evaluation and per-sample
/// measurement on the identical test rows.
pub fn run_scenarios(
    corpus: &PreparedDataset,
    plan: &FoldPlan,
    settings: &RunSettings,
) -> Result<BenchReport> {
    let mut folds = Vec::with_capacity(plan.k);
    for (fold_idx, fold) in plan.folds.iter().enumerate() {
        let fold_ds = corpus.subset(fold);
        let split = stratified_split_indices(
            &fold_ds.labels,
            N_CLASSES,
            settings.test_fraction,
            substream(settings.seed, fold_idx as u64),
        )
        .map_err(|e| Error::Argument(format!("fold {fold_idx}: {e}")))?;
        let (train_x_raw, train_y) = fold_ds.select(&split.train);
        let (test_x_raw, test_y) = fold_ds.select(&split.test);

        let trained = train_scenario_models(&train_x_raw, &train_y, settings, fold_idx)
            .map_err(|e| Error::Argument(format!("fold {fold_idx}: {e}")))?;

        let mut scenario_reports = Vec::new();
        for (scenario, model) in &trained {
            let metrics = evaluate(
                |row| model.infer_raw(row).map(|(c, _)| c),
                &test_x_raw,
                &test_y,
                N_CLASSES,
            )?;
            let working_set = model.working_set_bytes() as u64;
            let samples = measure_inference(
                |row| model.infer_raw(row).map(|(c, _)| c),
                &test_x_raw,
                N_FEATURES,
                settings.warmup,
                working_set,
            )?;
            scenario_reports.push(ScenarioFold {
                scenario: *scenario,
                metrics,
                samples,
                model_size_bytes: model.serialize().len() as u64,
                working_set_bytes: working_set,
            });
        }
        folds.push(FoldReport {
            fold: fold_idx,
            n_train: train_y.len(),
            n_test: test_y.len(),
            scenarios: scenario_reports,
        });
    }
    Ok(BenchReport {
        scenario_order: settings.scenarios.clone(),
        folds,
    })
}

/// Histogram statistics over the raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramData {
    /// `n_bins + 1` edges; equal-width over [min, max].
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub stats: HistStats,
    /// Normal curve sampled at bin centers, scaled by `n * bin_width`;
    /// empty when the standard deviation is zero.
    pub overlay: Vec<f64>,
}

/// Equal-width histogram with a scaled normal-curve overlay. A
/// single-value input produces one bin of width 1.
pub fn histogram(values: &[f64], n_bins: usize) -> Result<HistogramData> {
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n_bins == 0 {
        return Err(Error::Argument("histogram needs at least one bin".into()));
    }
    let n = values.len() as f64;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();

    let (n_bins, width) = if max == min {
        (1, 1.0)
    } else {
        (n_bins, (max - min) / n_bins as f64)
    };
    let edges: Vec<f64> = (0..=n_bins).map(|i| min + i as f64 * width).collect();
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let mut bin = ((v - min) / width) as usize;
        if bin >= n_bins {
            bin = n_bins - 1; // max value lands in the last bin
        }
        counts[bin] += 1;
    }
    let overlay = if std == 0.0 {
        Vec::new()
    } else {
        (0..n_bins)
            .map(|i| {
                let center = min + (i as f64 + 0.5) * width;
                let z = (center - mean) / std;
                let pdf = (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt());
                n * width * pdf
            })
            .collect()
    };
    Ok(HistogramData {
        edges,
        counts,
        stats: HistStats {
            min,
            max,
            mean,
            std,
            n: values.len() as u64,
        },
        overlay,
    })
}
