//! End-to-end tests of the `tinyids` binary: exit codes, artifact
//! determinism, the staged pipeline, and the profile runner.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tinyids"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn tinyids")
}

fn assert_success(out: &Output, context: &str) {
    assert!(
        out.status.success(),
        "{context} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth_csv(dir: &Path, per_class: usize, seed: u64) -> PathBuf {
    let csv = dir.join("synth.csv");
    let out = run(&[
        "synth",
        "--out",
        csv.to_str().unwrap(),
        "--per-class",
        &per_class.to_string(),
        "--seed",
        &seed.to_string(),
    ]);
    assert_success(&out, "synth");
    csv
}

fn prepare_bin(dir: &Path, csv: &Path, name: &str) -> PathBuf {
    let out_path = dir.join(name);
    let out = run(&[
        "prepare",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--sample-frac",
        "1.0",
        "--seed",
        "0",
    ]);
    assert_success(&out, "prepare");
    out_path
}

#[test]
fn missing_required_flag_is_usage_error_naming_the_flag() {
    let out = run(&["prepare", "--input", "whatever.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--out"), "{stderr}");
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = run(&["synth", "--bogus-flag", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_file_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "prepare",
        "--input",
        dir.path().join("nope.csv").to_str().unwrap(),
        "--out",
        dir.path().join("out.tids").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_model_file_is_model_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tids");
    std::fs::write(&bad, b"XIDS garbage").unwrap();
    let out = run(&[
        "quantize",
        "--in",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("q.tids").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // A corrupt dataset under bench is also a format problem.
    let out = run(&[
        "bench",
        "--data",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("rep").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn prepare_writes_optional_csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_csv(dir.path(), 10, 9);
    let out_bin = dir.path().join("out.tids");
    let out_csv = dir.path().join("out.csv");
    let out = run(&[
        "prepare",
        "--input",
        csv.to_str().unwrap(),
        "--out",
        out_bin.to_str().unwrap(),
        "--csv-out",
        out_csv.to_str().unwrap(),
        "--sample-frac",
        "1.0",
    ]);
    assert_success(&out, "prepare with csv export");
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("Flow ID,"), "{header}");
    assert!(header.ends_with(",Label Id,Label"), "{header}");
    assert_eq!(text.lines().count(), 1 + 150);
}

#[test]
fn serve_with_corrupt_model_is_model_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.tids");
    std::fs::write(&bad, b"TIDS\x01\x01truncated").unwrap();
    let out = run(&[
        "serve",
        "--model",
        bad.to_str().unwrap(),
        "--bind",
        "127.0.0.1",
        "--port",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn serve_bind_failure_is_network_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_csv(dir.path(), 10, 5);
    let data = prepare_bin(dir.path(), &csv, "corpus.tids");
    let mlp = dir.path().join("mlp.tids");
    assert_success(
        &run(&[
            "train-mlp",
            "--arch",
            "compact",
            "--data",
            data.to_str().unwrap(),
            "--out",
            mlp.to_str().unwrap(),
            "--max-epochs",
            "2",
        ]),
        "train-mlp",
    );
    // Occupy a port, then ask serve to bind it.
    let sock = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
    let port = sock.local_addr().unwrap().port();
    let out = run(&[
        "serve",
        "--model",
        mlp.to_str().unwrap(),
        "--bind",
        "127.0.0.1",
        "--port",
        &port.to_string(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn prepare_is_deterministic_and_honors_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_csv(dir.path(), 20, 7);

    let a = dir.path().join("a.tids");
    let b = dir.path().join("b.tids");
    for out_path in [&a, &b] {
        let out = run(&[
            "prepare",
            "--input",
            csv.to_str().unwrap(),
            "--out",
            out_path.to_str().unwrap(),
            "--sample-frac",
            "0.5",
            "--seed",
            "3",
        ]);
        assert_success(&out, "prepare");
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    // TINYIDS_SEED applies when --seed is absent.
    let c = dir.path().join("c.tids");
    let out = bin()
        .args([
            "prepare",
            "--input",
            csv.to_str().unwrap(),
            "--out",
            c.to_str().unwrap(),
            "--sample-frac",
            "0.5",
        ])
        .env("TINYIDS_SEED", "3")
        .output()
        .unwrap();
    assert_success(&out, "prepare with env seed");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn staged_pipeline_produces_working_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_csv(dir.path(), 25, 1);
    let data = prepare_bin(dir.path(), &csv, "corpus.tids");

    let mlp = dir.path().join("mlp.tids");
    let out = run(&[
        "train-mlp",
        "--arch",
        "compact",
        "--data",
        data.to_str().unwrap(),
        "--out",
        mlp.to_str().unwrap(),
        "--seed",
        "0",
        "--max-epochs",
        "5",
    ]);
    assert_success(&out, "train-mlp");

    let quant = dir.path().join("quant.tids");
    let out = run(&[
        "quantize",
        "--in",
        mlp.to_str().unwrap(),
        "--out",
        quant.to_str().unwrap(),
    ]);
    assert_success(&out, "quantize");
    assert!(
        std::fs::metadata(&quant).unwrap().len() < std::fs::metadata(&mlp).unwrap().len()
    );

    let rf = dir.path().join("rf.tids");
    let out = run(&[
        "train-rf",
        "--data",
        data.to_str().unwrap(),
        "--out",
        rf.to_str().unwrap(),
        "--trees",
        "20",
    ]);
    assert_success(&out, "train-rf");

    let compact = dir.path().join("compact.tids");
    let out = run(&[
        "compact-rf",
        "--data",
        data.to_str().unwrap(),
        "--full-model",
        rf.to_str().unwrap(),
        "--out",
        compact.to_str().unwrap(),
    ]);
    assert_success(&out, "compact-rf");
    assert!(
        std::fs::metadata(&compact).unwrap().len() < std::fs::metadata(&rf).unwrap().len()
    );

    // Re-running a stage reproduces the identical artifact.
    let mlp2 = dir.path().join("mlp2.tids");
    let out = run(&[
        "train-mlp",
        "--arch",
        "compact",
        "--data",
        data.to_str().unwrap(),
        "--out",
        mlp2.to_str().unwrap(),
        "--seed",
        "0",
        "--max-epochs",
        "5",
    ]);
    assert_success(&out, "train-mlp rerun");
    assert_eq!(std::fs::read(&mlp).unwrap(), std::fs::read(&mlp2).unwrap());
}

#[test]
fn bench_and_report_replay() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_csv(dir.path(), 25, 2);
    let data = prepare_bin(dir.path(), &csv, "corpus.tids");
    let report_dir = dir.path().join("report");

    let out = run(&[
        "bench",
        "--data",
        data.to_str().unwrap(),
        "--folds",
        "2",
        "--fold-frac",
        "0.3",
        "--out",
        report_dir.to_str().unwrap(),
        "--arch",
        "compact",
        "--max-epochs",
        "4",
        "--warmup",
        "2",
    ]);
    assert_success(&out, "bench");
    for file in ["resources.csv", "metrics.csv", "stats.json", "raw_samples.json"] {
        assert!(report_dir.join(file).exists(), "{file} missing");
    }
    let before = std::fs::read(report_dir.join("metrics.csv")).unwrap();

    let out = run(&["report", "--bench-dir", report_dir.to_str().unwrap()]);
    assert_success(&out, "report");
    let after = std::fs::read(report_dir.join("metrics.csv")).unwrap();
    assert_eq!(before, after);
}

#[test]
fn serve_and_client_loopback() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth_csv(dir.path(), 20, 4);
    let data = prepare_bin(dir.path(), &csv, "corpus.tids");

    let mlp = dir.path().join("mlp.tids");
    assert_success(
        &run(&[
            "train-mlp",
            "--arch",
            "compact",
            "--data",
            data.to_str().unwrap(),
            "--out",
            mlp.to_str().unwrap(),
            "--max-epochs",
            "4",
        ]),
        "train-mlp",
    );
    let quant = dir.path().join("quant.tids");
    assert_success(
        &run(&["quantize", "--in", mlp.to_str().unwrap(), "--out", quant.to_str().unwrap()]),
        "quantize",
    );

    // Pick a free port by binding and releasing it.
    let port = {
        let sock = std::net::UdpSocket::bind("127.0.0.1:0").unwrap();
        sock.local_addr().unwrap().port()
    };
    let mut server = bin()
        .args([
            "serve",
            "--model",
            quant.to_str().unwrap(),
            "--bind",
            "127.0.0.1",
            "--port",
            &port.to_string(),
        ])
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    std::thread::sleep(std::time::Duration::from_millis(300));

    let results = dir.path().join("results.csv");
    let out = run(&[
        "client",
        "--server",
        &format!("127.0.0.1:{port}"),
        "--data",
        data.to_str().unwrap(),
        "--out",
        results.to_str().unwrap(),
        "--model",
        quant.to_str().unwrap(),
    ]);
    server.kill().ok();
    server.wait().ok();
    assert_success(&out, "client");

    let text = std::fs::read_to_string(&results).unwrap();
    assert!(text.lines().last().unwrap().contains("lost=0"), "{text}");

    // Client against a dead server exits with the network code.
    let out = run(&[
        "client",
        "--server",
        &format!("127.0.0.1:{port}"),
        "--data",
        data.to_str().unwrap(),
        "--out",
        dir.path().join("dead.csv").to_str().unwrap(),
        "--timeout-ms",
        "50",
        "--retries",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(4));
    let text = std::fs::read_to_string(dir.path().join("dead.csv")).unwrap();
    assert!(text.contains("lost"));
}

#[test]
fn profile_run_emits_manifest_with_stable_digests() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("study");
    let profile_path = dir.path().join("study.profile");
    std::fs::write(
        &profile_path,
        format!(
            "# desk-scale pipeline\n\
             synth_per_class=25\n\
             out={}\n\
             seed=1\n\
             sample_frac=1.0\n\
             folds=2\n\
             fold_frac=0.3\n\
             arch=compact\n\
             max_epochs=4\n",
            out_dir.display()
        ),
    )
    .unwrap();

    let out = run(&["run", "--profile", profile_path.to_str().unwrap()]);
    assert_success(&out, "run profile");

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    let models = manifest["models"].as_object().unwrap();
    assert_eq!(models.len(), 4, "{manifest}");
    for (_, entry) in models {
        let file = entry["file"].as_str().unwrap();
        assert!(out_dir.join(file).exists());
    }
    assert!(out_dir.join("report/resources.csv").exists());

    // Re-running the profile reproduces identical model digests.
    let digests = |m: &serde_json::Value| -> Vec<String> {
        m["models"]
            .as_object()
            .unwrap()
            .iter()
            .map(|(k, v)| format!("{k}={}", v["digest"].as_str().unwrap()))
            .collect()
    };
    let first = digests(&manifest);
    let out = run(&["run", "--profile", profile_path.to_str().unwrap()]);
    assert_success(&out, "run profile again");
    let manifest2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(first, digests(&manifest2));
}

#[test]
fn profile_without_quantize_stage_trains_three_models() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("study");
    let profile_path = dir.path().join("study.profile");
    std::fs::write(
        &profile_path,
        format!(
            "synth_per_class=25\nout={}\nseed=1\nsample_frac=1.0\nfolds=1\nfold_frac=0.5\n\
             arch=compact\nmax_epochs=4\nscenarios=ml-mlp,ml-rf,tinyml-rf\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let out = run(&["run", "--profile", profile_path.to_str().unwrap()]);
    assert_success(&out, "run profile");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["models"].as_object().unwrap().len(), 3);
    assert!(!out_dir.join("tinyml_mlp.tids").exists());
}
