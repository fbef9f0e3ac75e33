//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured values. Failures carry the criterion number.
//!
//! The desk-scale corpus is a seeded synthetic 7-class flow corpus of
//! 21,000 samples (1,400 rows per raw label).

use tinyids_core::bench::{
    evaluate_predictions, run_scenarios, RunSettings, Scenario, ALL_SCENARIOS,
};
use tinyids_core::dataset::{
    self, apply_scaler, fit_scaler, make_fold_plan, merge_labels, parse_flow_csv, prepare,
    stratified_sample_indices, stratified_split_indices, synth_generate_to_file, PrepareOptions,
    PreparedDataset, SynthSpec, N_CLASSES, N_FEATURES,
};
use tinyids_core::forest::{
    compact_forest, select_features_cumulative, train_forest, ForestConfig,
};
use tinyids_core::mlp::{build_mlp, softmax, train, ArchSpec, DenseNet, TrainConfig};
use tinyids_core::quant::{convert, quantize_input_dynamic, quantize_weights};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 21,000-sample acceptance corpus (1,400 rows per raw label), seed 42.
fn acceptance_corpus() -> PreparedDataset {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("acceptance.csv");
    synth_generate_to_file(&csv, &SynthSpec::default_corpus(), 1400, 42).unwrap();
    let (corpus, _) = prepare(
        &[&csv],
        &PrepareOptions {
            sample_fraction: None,
            seed: 42,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(corpus.n_samples >= 20_000);
    corpus
}

fn scale_pair(
    corpus: &PreparedDataset,
    test_fraction: f64,
    seed: u64,
) -> (Vec<f64>, Vec<u8>, Vec<f64>, Vec<u8>, dataset::ScalerParams) {
    let split = stratified_split_indices(&corpus.labels, N_CLASSES, test_fraction, seed).unwrap();
    let (train_raw, train_y) = corpus.select(&split.train);
    let (test_raw, test_y) = corpus.select(&split.test);
    let scaler = fit_scaler(&train_raw, N_FEATURES).unwrap();
    let train_x = apply_scaler(&scaler, &train_raw, N_FEATURES).unwrap();
    let test_x = apply_scaler(&scaler, &test_raw, N_FEATURES).unwrap();
    (train_x, train_y, test_x, test_y, scaler)
}

fn accuracy_of(preds: &[u8], truth: &[u8]) -> f64 {
    100.0 * preds.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

#[test]
fn criterion_1_label_merge_fidelity() {
    // The public corpus's known per-label counts must merge to the
    // published per-class totals under our mapping.
    let table: [(&str, u64); 15] = [
        ("BENIGN", 2_272_688),
        ("DoS Hulk", 230_124),
        ("DoS GoldenEye", 10_293),
        ("DoS slowloris", 5_796),
        ("DoS Slowhttptest", 5_499),
        ("PortScan", 158_930),
        ("DDoS", 128_027),
        ("FTP-Patator", 7_938),
        ("SSH-Patator", 5_897),
        ("Web Attack-Brute Force", 1_507),
        ("Web Attack-XSS", 652),
        ("Web Attack-Sql Injection", 21),
        ("Bot", 1_966),
        ("Infiltration", 36),
        ("Heartbleed", 11),
    ];
    let expected_totals: [u64; 7] =
        [2_272_688, 251_712, 158_930, 128_027, 13_835, 2_180, 2_013];
    let mut totals = [0u64; 7];
    for (label, count) in table {
        totals[merge_labels(label).unwrap().id() as usize] += count;
    }
    assert_eq!(totals, expected_totals, "criterion 1 FAIL: published per-class totals");

    // Desk-scale mandatory variant: a synthetic CSV with known per-label
    // counts merges to exact expected totals.
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("merge.csv");
    synth_generate_to_file(&csv, &SynthSpec::default_corpus(), 100, 7).unwrap();
    let report = parse_flow_csv(&[&csv]).unwrap();
    assert_eq!(report.records.len(), 1500, "criterion 1 FAIL: row count");
    let mut counts = [0u64; 7];
    for record in &report.records {
        counts[merge_labels(&record.label_raw).unwrap().id() as usize] += 1;
    }
    // 1 raw label x100 for BENIGN/PortScan/DDoS, 4x100 DoS, 2x100 brute
    // force, 3x100 web attack, 3x100 bot/infiltration/heartbleed.
    assert_eq!(
        counts,
        [100, 400, 100, 100, 200, 300, 300],
        "criterion 1 FAIL: desk-scale merged counts"
    );
    println!(
        "[PASS] criterion 1: label merge exact on desk corpus {counts:?} and published totals {expected_totals:?}"
    );
}

/// Full-corpus variant; runs only when TINYIDS_CICIDS_DIR points at the
/// real flow CSVs.
#[test]
fn criterion_1_full_corpus_optional() {
    let Ok(dir) = std::env::var("TINYIDS_CICIDS_DIR") else {
        println!("[SKIP] criterion 1 (full corpus): TINYIDS_CICIDS_DIR not set");
        return;
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(&dir).expect("read corpus dir") {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "csv") {
            paths.push(path);
        }
    }
    assert!(!paths.is_empty(), "criterion 1 FAIL: no CSVs in {dir}");
    let report = parse_flow_csv(&paths).unwrap();
    let mut counts = [0u64; 7];
    for record in &report.records {
        counts[merge_labels(&record.label_raw).unwrap().id() as usize] += 1;
    }
    let expected: [u64; 7] = [2_272_688, 251_712, 158_930, 128_027, 13_835, 2_180, 2_013];
    assert_eq!(counts, expected, "criterion 1 FAIL: full-corpus merged counts");
    println!("[PASS] criterion 1 (full corpus): merged counts {counts:?}");
}

#[test]
fn criterion_2_quantization_parity() {
    let corpus = acceptance_corpus();

    // Fold-methodology accuracy comparison.
    let settings = RunSettings {
        scenarios: vec![Scenario::MlMlp, Scenario::TinymlMlp],
        train: TrainConfig {
            max_epochs: 60,
            ..Default::default()
        },
        warmup: 2,
        seed: 0,
        ..Default::default()
    };
    let plan = make_fold_plan(&corpus.labels, N_CLASSES, 5, 0.05, 0).unwrap();
    let report = run_scenarios(&corpus, &plan, &settings).unwrap();
    let ml = report.summary(Scenario::MlMlp).unwrap().mean_accuracy;
    let tiny = report.summary(Scenario::TinymlMlp).unwrap().mean_accuracy;
    assert!(
        (ml - tiny).abs() <= 0.2,
        "criterion 2 FAIL: fold-mean accuracy gap {} (ML {ml}, TinyML {tiny})",
        (ml - tiny).abs()
    );

    // Argmax agreement and size on a single large split.
    let (train_x, train_y, test_x, test_y, scaler) = scale_pair(&corpus, 0.2, 0);
    let init = build_mlp(&ArchSpec::Baseline, N_FEATURES, N_CLASSES, 0).unwrap();
    let cfg = TrainConfig {
        max_epochs: 60,
        ..Default::default()
    };
    let (model, _) = train(&init, &train_x, &train_y, &cfg).unwrap();
    let model = model.with_preprocessing(scaler, tinyids_core::mlp::default_label_names(N_CLASSES));
    let quant = convert(&model).unwrap();
    // Rows here are already standardized; bypass the bundled scaler.
    let quant_direct = with_identity_scaler(&quant);

    let mut agree = 0usize;
    let mut float_correct = 0usize;
    let mut quant_correct = 0usize;
    for (row, &y) in test_x.chunks_exact(N_FEATURES).zip(&test_y) {
        let f = model.predict(row).unwrap();
        let q = quant_unscaled(&quant_direct, row);
        agree += (f == q) as usize;
        float_correct += (f == y) as usize;
        quant_correct += (q == y) as usize;
    }
    let agreement = 100.0 * agree as f64 / test_y.len() as f64;
    assert!(
        agreement >= 99.5,
        "criterion 2 FAIL: argmax agreement {agreement}%"
    );
    let float_len = model.serialize().len() as f64;
    let quant_len = quant.serialize().len() as f64;
    assert!(
        float_len / quant_len > 3.0,
        "criterion 2 FAIL: size ratio {}",
        float_len / quant_len
    );
    println!(
        "[PASS] criterion 2: fold accuracies ML {ml:.4}% / TinyML {tiny:.4}%, argmax agreement {agreement:.3}% \
         (float acc {:.4}%, quant acc {:.4}%), size ratio {:.2}x",
        100.0 * float_correct as f64 / test_y.len() as f64,
        100.0 * quant_correct as f64 / test_y.len() as f64,
        float_len / quant_len
    );
}

/// Copy of a quantized model that accepts already-scaled rows (the
/// bundled scaler must not be applied twice).
fn with_identity_scaler(
    quant: &tinyids_core::quant::QuantizedMlpModel,
) -> tinyids_core::quant::QuantizedMlpModel {
    let mut identity = quant.clone();
    identity.scaler = dataset::ScalerParams::identity(quant.n_features);
    identity
}

fn quant_unscaled(quant: &tinyids_core::quant::QuantizedMlpModel, scaled_row: &[f64]) -> u8 {
    quant.infer_raw(scaled_row).unwrap().0
}

#[test]
fn criterion_3_forest_compaction() {
    let corpus = acceptance_corpus();
    let (train_x, train_y, test_x, test_y, _scaler) = scale_pair(&corpus, 0.2, 1);

    let full = train_forest(
        &train_x,
        &train_y,
        N_FEATURES,
        N_CLASSES,
        &ForestConfig::default(),
        dataset::ScalerParams::identity(N_FEATURES),
        tinyids_core::mlp::default_label_names(N_CLASSES),
    )
    .unwrap();
    let importances = full.feature_importances().unwrap();
    let selected = select_features_cumulative(&importances, 0.6).unwrap();
    let compact = compact_forest(
        &train_x,
        &train_y,
        N_FEATURES,
        N_CLASSES,
        &selected,
        &ForestConfig::compact(),
        dataset::ScalerParams::identity(N_FEATURES),
        tinyids_core::mlp::default_label_names(N_CLASSES),
    )
    .unwrap();
    assert_eq!(compact.trees.len(), 10);
    assert!(compact.max_depth_observed() <= 10);

    let mut full_preds = Vec::with_capacity(test_y.len());
    let mut compact_preds = Vec::with_capacity(test_y.len());
    for row in test_x.chunks_exact(N_FEATURES) {
        full_preds.push(full.predict(row).unwrap());
        compact_preds.push(compact.predict(row).unwrap());
    }
    let full_acc = accuracy_of(&full_preds, &test_y);
    let compact_acc = accuracy_of(&compact_preds, &test_y);
    assert!(
        full_acc - compact_acc <= 1.0,
        "criterion 3 FAIL: accuracy drop {} (full {full_acc}, compact {compact_acc})",
        full_acc - compact_acc
    );
    let full_len = full.serialize().len() as f64;
    let compact_len = compact.serialize().len() as f64;
    assert!(
        full_len / compact_len >= 5.0,
        "criterion 3 FAIL: size ratio {}",
        full_len / compact_len
    );
    println!(
        "[PASS] criterion 3: full {full_acc:.4}% vs compact {compact_acc:.4}% \
         (drop {:.4} pp), {} selected features, size ratio {:.2}x",
        full_acc - compact_acc,
        selected.len(),
        full_len / compact_len
    );
}

#[test]
fn criterion_4_resource_direction() {
    let corpus = acceptance_corpus();
    let settings = RunSettings {
        train: TrainConfig {
            max_epochs: 30,
            ..Default::default()
        },
        warmup: 5,
        seed: 0,
        ..Default::default()
    };
    let plan = make_fold_plan(&corpus.labels, N_CLASSES, 5, 0.05, 0).unwrap();
    let report = run_scenarios(&corpus, &plan, &settings).unwrap();

    let summary = |s: Scenario| report.summary(s).unwrap();
    let rf_time = summary(Scenario::MlRf).mean_inference_time_us;
    let tiny_rf_time = summary(Scenario::TinymlRf).mean_inference_time_us;
    assert!(
        tiny_rf_time < rf_time,
        "criterion 4 FAIL: TinyML_RF {tiny_rf_time} us !< ML_RF {rf_time} us"
    );
    let mlp_ws = summary(Scenario::MlMlp).mean_working_set_bytes;
    let tiny_mlp_ws = summary(Scenario::TinymlMlp).mean_working_set_bytes;
    let rf_ws = summary(Scenario::MlRf).mean_working_set_bytes;
    let tiny_rf_ws = summary(Scenario::TinymlRf).mean_working_set_bytes;
    assert!(
        tiny_mlp_ws < mlp_ws,
        "criterion 4 FAIL: TinyML_MLP working set {tiny_mlp_ws} !< ML_MLP {mlp_ws}"
    );
    assert!(
        tiny_rf_ws < rf_ws,
        "criterion 4 FAIL: TinyML_RF working set {tiny_rf_ws} !< ML_RF {rf_ws}"
    );
    // Direction holds in every fold, not just in the mean.
    for fold in &report.folds {
        let get = |s: Scenario| fold.scenarios.iter().find(|x| x.scenario == s).unwrap();
        assert!(get(Scenario::TinymlMlp).working_set_bytes < get(Scenario::MlMlp).working_set_bytes);
        assert!(get(Scenario::TinymlRf).working_set_bytes < get(Scenario::MlRf).working_set_bytes);
    }
    println!(
        "[PASS] criterion 4: inference time TinyML_RF {tiny_rf_time:.1} us < ML_RF {rf_time:.1} us; \
         working set MLP {tiny_mlp_ws:.0} < {mlp_ws:.0} B, RF {tiny_rf_ws:.0} < {rf_ws:.0} B"
    );
}

#[test]
#[allow(clippy::needless_range_loop)]
fn criterion_5_numerical_invariants() {
    // Gradient vs central finite differences, max relative error <= 1e-4.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_rel = 0f64;
    for (trial, dims) in [vec![6usize, 8, 7], vec![4, 5, 5, 3], vec![9, 8, 8, 8, 2]]
        .into_iter()
        .enumerate()
    {
        let mut net = DenseNet::glorot(dims.clone(), trial as u64 + 50);
        for p in net.params.iter_mut() {
            *p += rng.gen::<f64>() * 0.1 - 0.05; // keep pre-activations off the ReLU kink
        }
        let n_in = dims[0];
        let n_out = *dims.last().unwrap();
        let xs: Vec<f64> = (0..8 * n_in).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let ys: Vec<u8> = (0..8).map(|_| rng.gen_range(0..n_out) as u8).collect();
        let (_, analytic) = net.loss_and_grad(&xs, &ys);

        let h = 1e-5;
        let mut probe = net.clone();
        for i in 0..probe.params.len() {
            let orig = probe.params[i];
            probe.params[i] = orig + h;
            let up = probe.loss(&xs, &ys);
            probe.params[i] = orig - h;
            let down = probe.loss(&xs, &ys);
            probe.params[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[i] - numeric).abs()
                / analytic[i].abs().max(numeric.abs()).max(1e-6);
            worst_rel = worst_rel.max(rel);
        }
    }
    assert!(worst_rel <= 1e-4, "criterion 5 FAIL: gradient rel err {worst_rel}");

    // Softmax normalization within 1e-6.
    let mut worst_softmax = 0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..10);
        let logits: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 200.0 - 100.0).collect();
        let p = softmax(&logits);
        worst_softmax = worst_softmax.max((p.iter().sum::<f64>() - 1.0).abs());
        assert!(p.iter().all(|&v| v >= 0.0));
    }
    assert!(worst_softmax <= 1e-6, "criterion 5 FAIL: softmax sum error {worst_softmax}");

    // Quantize/dequantize elementwise error <= scale/2.
    for _ in 0..300 {
        let out_dim = rng.gen_range(1..6);
        let in_dim = rng.gen_range(1..24);
        let w: Vec<f64> = (0..out_dim * in_dim)
            .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * 10f64.powi(rng.gen_range(-2..3)))
            .collect();
        let t = quantize_weights(&w, out_dim, in_dim).unwrap();
        let back = t.dequantize();
        for o in 0..out_dim {
            for i in 0..in_dim {
                let err = (back[o * in_dim + i] - w[o * in_dim + i]).abs();
                assert!(
                    err <= t.scale[o] as f64 / 2.0 + 1e-12,
                    "criterion 5 FAIL: weight roundtrip err {err} > scale/2"
                );
            }
        }
        let x: Vec<f64> = (0..in_dim).map(|_| rng.gen::<f64>() * 60.0 - 30.0).collect();
        let (q, iq) = quantize_input_dynamic(&x);
        for (qi, &xi) in q.iter().zip(&x) {
            let err = ((*qi as f64 - iq.zero_point as f64) * iq.scale - xi).abs();
            assert!(
                err <= iq.scale / 2.0 + 1e-12,
                "criterion 5 FAIL: input roundtrip err {err}"
            );
        }
    }

    // Weighted recall equals accuracy on randomized confusion inputs.
    for _ in 0..300 {
        let n = rng.gen_range(1..400);
        let n_classes = rng.gen_range(2..9);
        let t: Vec<u8> = (0..n).map(|_| rng.gen_range(0..n_classes) as u8).collect();
        let p: Vec<u8> = (0..n).map(|_| rng.gen_range(0..n_classes) as u8).collect();
        let m = evaluate_predictions(&t, &p, n_classes).unwrap();
        assert!(
            (m.recall - m.accuracy).abs() <= 1e-9,
            "criterion 5 FAIL: recall {} != accuracy {}",
            m.recall,
            m.accuracy
        );
    }
    println!(
        "[PASS] criterion 5: gradient rel err {worst_rel:.2e}, softmax sum err {worst_softmax:.2e}, \
         quant roundtrip bounds and recall=accuracy identity hold"
    );
}

#[test]
fn criterion_6_stratification_suite() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("strat.csv");
    synth_generate_to_file(&csv, &SynthSpec::default_corpus(), 300, 6).unwrap();

    // Byte-identical prepared datasets across two runs.
    let options = PrepareOptions {
        sample_fraction: Some(0.2),
        seed: 6,
        ..Default::default()
    };
    let (a, _) = prepare(&[&csv], &options).unwrap();
    let (b, _) = prepare(&[&csv], &options).unwrap();
    assert_eq!(a.serialize(), b.serialize(), "criterion 6 FAIL: prepare not deterministic");

    let corpus = a;
    let n = corpus.n_samples as f64;
    let parent: Vec<f64> = corpus
        .class_counts()
        .iter()
        .map(|&c| c as f64 / n)
        .collect();

    // Sample proportions within the largest-remainder bound.
    let idx = stratified_sample_indices(&corpus.labels, N_CLASSES, 0.25, 1).unwrap();
    check_proportions(&corpus, &idx, &parent, "sample");

    // Split proportions, both sides.
    let split = stratified_split_indices(&corpus.labels, N_CLASSES, 0.2, 2).unwrap();
    check_proportions(&corpus, &split.train, &parent, "train");
    check_proportions(&corpus, &split.test, &parent, "test");

    // Five pairwise-disjoint folds, each within the bound.
    let plan = make_fold_plan(&corpus.labels, N_CLASSES, 5, 0.05, 3).unwrap();
    let mut seen = std::collections::HashSet::new();
    for fold in &plan.folds {
        for &i in fold {
            assert!(seen.insert(i), "criterion 6 FAIL: folds overlap at {i}");
        }
        check_proportions(&corpus, fold, &parent, "fold");
    }

    // Byte-identical models across two runs.
    let (train_x, train_y, _, _, _) = scale_pair(&corpus, 0.2, 0);
    let cfg = TrainConfig {
        max_epochs: 5,
        ..Default::default()
    };
    let init = build_mlp(&ArchSpec::Compact, N_FEATURES, N_CLASSES, 0).unwrap();
    let (m1, _) = train(&init, &train_x, &train_y, &cfg).unwrap();
    let (m2, _) = train(&init, &train_x, &train_y, &cfg).unwrap();
    assert_eq!(m1.serialize(), m2.serialize(), "criterion 6 FAIL: training not deterministic");

    let rf_cfg = ForestConfig {
        n_trees: 15,
        ..Default::default()
    };
    let names = tinyids_core::mlp::default_label_names(N_CLASSES);
    let f1 = train_forest(&train_x, &train_y, N_FEATURES, N_CLASSES, &rf_cfg,
        dataset::ScalerParams::identity(N_FEATURES), names.clone()).unwrap();
    let f2 = train_forest(&train_x, &train_y, N_FEATURES, N_CLASSES, &rf_cfg,
        dataset::ScalerParams::identity(N_FEATURES), names).unwrap();
    assert_eq!(f1.serialize(), f2.serialize(), "criterion 6 FAIL: forest not deterministic");

    println!(
        "[PASS] criterion 6: proportions within largest-remainder bound, 5 disjoint folds, \
         byte-identical datasets and models across runs"
    );
}

fn check_proportions(corpus: &PreparedDataset, idx: &[usize], parent: &[f64], what: &str) {
    let mut counts = [0usize; N_CLASSES];
    for &i in idx {
        counts[corpus.labels[i] as usize] += 1;
    }
    let m = idx.len() as f64;
    for c in 0..N_CLASSES {
        let frac = counts[c] as f64 / m;
        assert!(
            (frac - parent[c]).abs() < 1.0 / m,
            "criterion 6 FAIL: {what} class {c} proportion |{frac} - {}| >= 1/{m}",
            parent[c]
        );
    }
}

#[test]
fn criterion_7_wire_conformance() {
    // Hand-encoded 20-byte request decodes to the original message.
    let expected: Vec<u8> = vec![
        0x54, 0x49, 0x44, 0x53, 0x01, 0x01, 0x01, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00,
        0x80, 0x3F, 0x00, 0x00, 0x20, 0xC0,
    ];
    let decoded = tinyids_core::wire::decode_request(&expected).unwrap();
    assert_eq!(decoded.sample_id, 1, "criterion 7 FAIL: sample id");
    assert_eq!(decoded.features, vec![1.0, -2.5], "criterion 7 FAIL: features");
    assert_eq!(
        tinyids_core::wire::encode_request(&decoded),
        expected,
        "criterion 7 FAIL: re-encode"
    );

    // Loopback run over 1,000+ samples.
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("wire.csv");
    synth_generate_to_file(&csv, &SynthSpec::default_corpus(), 67, 7).unwrap();
    let (corpus, _) = prepare(
        &[&csv],
        &PrepareOptions {
            sample_fraction: None,
            seed: 7,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(corpus.n_samples >= 1000);

    let (train_x, train_y, _, _, scaler) = scale_pair(&corpus, 0.2, 0);
    let init = build_mlp(&ArchSpec::Compact, N_FEATURES, N_CLASSES, 0).unwrap();
    let cfg = TrainConfig {
        max_epochs: 10,
        ..Default::default()
    };
    let (model, _) = train(&init, &train_x, &train_y, &cfg).unwrap();
    let model = model.with_preprocessing(scaler, tinyids_core::mlp::default_label_names(N_CLASSES));
    let quant = convert(&model).unwrap();
    let model_path = dir.path().join("model.tids");
    std::fs::write(&model_path, quant.serialize()).unwrap();
    let local = tinyids_core::model::LoadedModel::from_file(&model_path).unwrap();

    let handle = tinyids_core::wire::spawn_server(&model_path).unwrap();
    let options = tinyids_core::wire::ClientOptions {
        expected_digest: Some(tinyids_core::fmt::fnv1a64(&std::fs::read(&model_path).unwrap())),
        ..Default::default()
    };
    let result =
        tinyids_core::wire::run_client(&corpus, &handle.addr.to_string(), &options).unwrap();
    handle.stop().unwrap();

    let answered_frac = result.answered as f64 / result.sent as f64;
    assert!(
        answered_frac >= 0.999,
        "criterion 7 FAIL: answered {answered_frac}"
    );
    for row in &result.rows {
        let Some(reply) = &row.reply else { continue };
        let as_seen: Vec<f64> = corpus
            .row(row.sample_id as usize)
            .iter()
            .map(|&v| v as f32 as f64)
            .collect();
        let (class, confidence) = local.infer_raw(&as_seen).unwrap();
        assert_eq!(
            reply.predicted_class, class,
            "criterion 7 FAIL: remote class differs at sample {}",
            row.sample_id
        );
        assert_eq!(
            reply.confidence.to_bits(),
            confidence.to_bits(),
            "criterion 7 FAIL: remote confidence differs at sample {}",
            row.sample_id
        );
    }
    println!(
        "[PASS] criterion 7: 20-byte vector decodes, {}/{} answered ({:.2}%), \
         remote predictions bit-identical to local, {} retransmissions",
        result.answered,
        result.sent,
        100.0 * answered_frac,
        result.retransmissions
    );
}

#[test]
fn criterion_8_enhanced_architecture_robustness() {
    let corpus = acceptance_corpus();
    // Train on a 20% stratified slice, evaluate on the remaining 80% so
    // the accuracy comparison has fine granularity.
    let (train_x, train_y, test_x, test_y, scaler) = scale_pair(&corpus, 0.8, 8);

    let init = build_mlp(&ArchSpec::Enhanced, N_FEATURES, N_CLASSES, 8).unwrap();
    assert_eq!(init.layers.len(), 13);
    let cfg = TrainConfig {
        max_epochs: 40,
        ..Default::default()
    };
    let (model, history) = train(&init, &train_x, &train_y, &cfg).unwrap();
    let model = model.with_preprocessing(scaler, tinyids_core::mlp::default_label_names(N_CLASSES));
    let quant = convert(&model).unwrap();
    assert_eq!(quant.layers.len(), 13);

    let quant_direct = with_identity_scaler(&quant);
    let mut float_preds = Vec::with_capacity(test_y.len());
    let mut quant_preds = Vec::with_capacity(test_y.len());
    for row in test_x.chunks_exact(N_FEATURES) {
        float_preds.push(model.predict(row).unwrap());
        quant_preds.push(quant_unscaled(&quant_direct, row));
    }
    let float_acc = accuracy_of(&float_preds, &test_y);
    let quant_acc = accuracy_of(&quant_preds, &test_y);
    let degradation = float_acc - quant_acc;
    assert!(
        degradation <= 0.5,
        "criterion 8 FAIL: degradation {degradation} pp (float {float_acc}, quant {quant_acc})"
    );
    println!(
        "[PASS] criterion 8: enhanced 12x64 float {float_acc:.4}% -> quant {quant_acc:.4}% \
         (degradation {degradation:.4} pp, {} epochs)",
        history.epochs_run
    );
}

#[test]
fn criterion_4_and_2_model_sizes_direction() {
    // Companion check: serialized sizes shrink for both TinyML scenarios
    // on the acceptance corpus (fold means).
    let corpus = acceptance_corpus();
    let settings = RunSettings {
        scenarios: ALL_SCENARIOS.to_vec(),
        train: TrainConfig {
            max_epochs: 20,
            ..Default::default()
        },
        warmup: 2,
        seed: 3,
        ..Default::default()
    };
    let plan = make_fold_plan(&corpus.labels, N_CLASSES, 2, 0.05, 3).unwrap();
    let report = run_scenarios(&corpus, &plan, &settings).unwrap();
    let size = |s: Scenario| report.summary(s).unwrap().mean_model_size_bytes;
    assert!(size(Scenario::TinymlMlp) < size(Scenario::MlMlp));
    assert!(size(Scenario::TinymlRf) < size(Scenario::MlRf));
    println!(
        "[PASS] model-size direction: TinyML_MLP {:.0} < ML_MLP {:.0}; TinyML_RF {:.0} < ML_RF {:.0}",
        size(Scenario::TinymlMlp),
        size(Scenario::MlMlp),
        size(Scenario::TinymlRf),
        size(Scenario::MlRf)
    );
}
