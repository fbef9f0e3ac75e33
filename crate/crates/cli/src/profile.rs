//! Profile-driven end-to-end runs: corpus acquisition, scenario model
//! training, benchmarking, and a manifest of everything produced.
//!
//! Profiles are flat `key=value` lines; `#` starts a comment. Keys:
//! `out` (required), one corpus source (`synth_per_class`, `data`, or
//! `corpus`), and optional `seed`, `sample_frac`, `folds`, `fold_frac`,
//! `scenarios`, `arch`, `max_epochs`, `test_fraction`,
//! `importance_threshold`, `time_format`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tinyids_core::bench::{
    emit_report, run_scenarios, train_scenario_models, RunSettings, Scenario,
};
use tinyids_core::dataset::{
    make_fold_plan, prepare, stratified_split_indices, synth_generate_to_file, PrepareOptions,
    PreparedDataset, SynthSpec, TimestampFormat, N_CLASSES,
};
use tinyids_core::error::{Error, Result};
use tinyids_core::fmt::fnv1a64;
use tinyids_core::mlp::{ArchSpec, TrainConfig};

use crate::{resolve_seed, RunArgs};

struct Profile {
    values: BTreeMap<String, String>,
}

impl Profile {
    fn parse(text: &str) -> Result<Profile> {
        let mut values = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Argument(format!(
                    "profile line {}: expected key=value, got {line:?}",
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Profile { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| Error::Argument(format!("profile key {key}: bad value {raw:?}"))),
        }
    }
}

fn digest_file(path: &Path) -> Result<u64> {
    Ok(fnv1a64(&std::fs::read(path)?))
}

pub fn run(args: RunArgs) -> Result<()> {
    let profile = Profile::parse(&std::fs::read_to_string(&args.profile)?)?;
    let out_dir = PathBuf::from(
        profile
            .get("out")
            .ok_or_else(|| Error::Argument("profile needs an out= directory".into()))?,
    );
    std::fs::create_dir_all(&out_dir)?;

    let seed = match profile.get("seed") {
        Some(raw) => raw
            .parse()
            .map_err(|_| Error::Argument(format!("profile key seed: bad value {raw:?}")))?,
        None => resolve_seed(None),
    };
    let scenarios = Scenario::parse_list(profile.get("scenarios").unwrap_or(
        "ml-mlp,tinyml-mlp,ml-rf,tinyml-rf",
    ))?;
    let arch = ArchSpec::parse(profile.get("arch").unwrap_or("baseline"))?;
    let folds: usize = profile.parsed("folds", 5)?;
    let fold_frac: f64 = profile.parsed("fold_frac", 0.05)?;
    let sample_frac: f64 = profile.parsed("sample_frac", 0.05)?;
    let max_epochs: usize = profile.parsed("max_epochs", 500)?;
    let test_fraction: f64 = profile.parsed("test_fraction", 0.2)?;
    let importance_threshold: f64 = profile.parsed("importance_threshold", 0.6)?;

    let mut stages: Vec<String> = Vec::new();
    let mut inputs = serde_json::Map::new();

    // Stage 1: corpus acquisition.
    let corpus = if let Some(path) = profile.get("corpus") {
        stages.push("load-corpus".into());
        inputs.insert("corpus".into(), serde_json::json!(path));
        PreparedDataset::read_file(path)?
    } else {
        let csv_paths: Vec<PathBuf> = if let Some(n) = profile.get("synth_per_class") {
            let per_class: usize = n
                .parse()
                .map_err(|_| Error::Argument(format!("bad synth_per_class {n:?}")))?;
            let path = out_dir.join("synthetic.csv");
            synth_generate_to_file(&path, &SynthSpec::default_corpus(), per_class, seed)?;
            eprintln!("stage synth: {} rows -> {}", 15 * per_class, path.display());
            stages.push("synth".into());
            vec![path]
        } else if let Some(paths) = profile.get("data") {
            paths.split(';').map(PathBuf::from).collect()
        } else {
            return Err(Error::Argument(
                "profile needs one of corpus=, data=, or synth_per_class=".into(),
            ));
        };
        let options = PrepareOptions {
            time_format: profile
                .get("time_format")
                .map(TimestampFormat::new)
                .unwrap_or_default(),
            sample_fraction: if sample_frac >= 1.0 {
                None
            } else {
                Some(sample_frac)
            },
            seed,
        };
        let (ds, stats) = prepare(&csv_paths, &options)?;
        let corpus_path = out_dir.join("corpus.tids");
        ds.write_file(&corpus_path)?;
        eprintln!(
            "stage prepare: {} samples -> {}",
            stats.rows_after_sampling,
            corpus_path.display()
        );
        stages.push("prepare".into());
        inputs.insert(
            "data".into(),
            serde_json::json!(csv_paths
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()),
        );
        inputs.insert("corpus_digest".into(), serde_json::json!(format!("{:016x}", digest_file(&corpus_path)?)));
        ds
    };

    let settings = RunSettings {
        scenarios: scenarios.clone(),
        arch,
        train: TrainConfig {
            max_epochs,
            ..Default::default()
        },
        importance_threshold,
        test_fraction,
        seed,
        ..Default::default()
    };

    // Stage 2: train and save one model per scenario on an 80/20 split
    // of the whole corpus.
    let split = stratified_split_indices(&corpus.labels, N_CLASSES, test_fraction, seed)?;
    let (train_x, train_y) = corpus.select(&split.train);
    let (test_x, test_y) = corpus.select(&split.test);
    let models = train_scenario_models(&train_x, &train_y, &settings, usize::MAX)?;
    let mut model_entries = serde_json::Map::new();
    for (scenario, model) in &models {
        let name = format!("{}.tids", scenario.name().to_ascii_lowercase());
        let path = out_dir.join(&name);
        std::fs::write(&path, model.serialize())?;
        let metrics = tinyids_core::bench::evaluate(
            |row| model.infer_raw(row).map(|(c, _)| c),
            &test_x,
            &test_y,
            N_CLASSES,
        )?;
        eprintln!(
            "stage train {}: accuracy {:.4}% -> {}",
            scenario.name(),
            metrics.accuracy,
            path.display()
        );
        model_entries.insert(
            scenario.name().into(),
            serde_json::json!({
                "file": name,
                "digest": format!("{:016x}", digest_file(&path)?),
                "holdout_accuracy": metrics.accuracy,
            }),
        );
    }
    stages.push("train-models".into());

    // Stage 3: fold benchmark.
    let plan = make_fold_plan(&corpus.labels, N_CLASSES, folds, fold_frac, seed)?;
    let bench_report = run_scenarios(&corpus, &plan, &settings)?;
    let report_dir = out_dir.join("report");
    let report_files = emit_report(&bench_report, &report_dir)?;
    eprintln!(
        "stage bench: {} folds -> {} files in {}",
        plan.k,
        report_files.len(),
        report_dir.display()
    );
    stages.push("bench".into());

    // Stage 4: manifest.
    let manifest = serde_json::json!({
        "tool": format!("tinyids {}", env!("CARGO_PKG_VERSION")),
        "seed": seed,
        "stages": stages,
        "inputs": inputs,
        "scenarios": scenarios.iter().map(|s| s.name()).collect::<Vec<_>>(),
        "models": model_entries,
        "report_files": report_files,
    });
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Argument(format!("manifest serialization: {e}")))?,
    )?;
    eprintln!("manifest -> {}", manifest_path.display());
    Ok(())
}
