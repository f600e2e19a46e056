use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jamlab::synth::SampleBuffer;

fn jamlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jamlab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("JAMLAB_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn single_tone_peaks_at_its_frequency() {
    let dir = tempfile::tempdir().unwrap();
    ok(jamlab(dir.path(), &["synth", "single-tone", "--freq", "1000", "--sample-rate", "8000", "--duration", "1", "--spectrum"]));
    let buf = SampleBuffer::load(&dir.path().join("single_tone.jsiq")).unwrap();
    assert_eq!(buf.len(), 8000);
    // Direct DFT at a few candidate bins.
    let power = |k: usize| {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, s) in buf.samples.iter().enumerate() {
            let a = -2.0 * std::f64::consts::PI * (k * n) as f64 / 8000.0;
            re += s.re * a.cos() - s.im * a.sin();
            im += s.re * a.sin() + s.im * a.cos();
        }
        re * re + im * im
    };
    // Real cosine: energy at +f and its mirror bin only.
    let peak = power(1000);
    assert!((power(7000) - peak).abs() < 1e-9 * peak);
    for k in [0, 500, 999, 1001, 2000, 6999] {
        assert!(power(k) < 1e-6 * peak, "bin {k}");
    }
    let spectrum = fs::read_to_string(dir.path().join("single_tone_spectrum.txt")).unwrap();
    let best = spectrum
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((best.0 - 1000.0).abs() < 1e-6, "{best:?}");
    assert!(dir.path().join("single_tone.resolved.json").exists());
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(jamlab(dir.path(), &["synth", "single-tone"]).status.code(), Some(2));
    assert_eq!(jamlab(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(jamlab(dir.path(), &["simulate", "--period", "4"]).status.code(), Some(2));
    assert_eq!(jamlab(dir.path(), &["simulate", "--predictor", "model"]).status.code(), Some(2));
    let o = jamlab(dir.path(), &["dataset", "--count", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("count"));
    assert_eq!(jamlab(dir.path(), &["inspect", "/nonexistent/file.jgrd"]).status.code(), Some(1));
}

#[test]
fn dataset_train_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let d = data.to_str().unwrap();
    let text = ok(jamlab(&data, &["--seed", "3", "dataset", "--count", "20", "--profile", "reduced"]));
    assert!(text.contains("16 train / 4 test"), "{text}");

    let run = dir.path().join("run");
    let r = run.to_str().unwrap();
    ok(jamlab(&run, &["--seed", "3", "train", "--data", d, "--epochs", "1", "--batch-size", "4"]));
    for f in ["model.jnet", "loss.tsv", "run_summary.json", "train.resolved.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let loss = fs::read_to_string(run.join("loss.tsv")).unwrap();
    assert_eq!(loss.lines().count(), 2);

    let model = format!("{r}/model.jnet");
    let table = ok(jamlab(&run, &["eval", "--model", &model, "--data", d, "--split", "test"]));
    for row in ["precision", "accuracy", "macro avg", "weighted avg"] {
        assert!(table.contains(row), "{table}");
    }
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("metrics_test.json")).unwrap()).unwrap();
    assert_eq!(metrics["classes"][0]["support"].as_u64().unwrap() + metrics["classes"][1]["support"].as_u64().unwrap(), 4);

    let info = ok(jamlab(&run, &["inspect", &model]));
    assert!(info.contains("JNET"), "{info}");
    ok(jamlab(&run, &["simulate", "--predictor", "model", "--model", &model, "--data", d, "--slots", "5", "--n-channels", "4"]));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["source"], "trained_model");
    assert_eq!(summary["n_slots"], 5);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = |name: &str| {
        let out = dir.path().join(name);
        let data = out.join("data");
        ok(jamlab(&data, &["--seed", "5", "dataset", "--count", "12", "--profile", "reduced"]));
        let d = data.to_str().unwrap().to_string();
        ok(jamlab(&out, &["--seed", "5", "train", "--data", &d, "--epochs", "1"]));
        ok(jamlab(&out, &["--seed", "5", "simulate", "--jammer", "random", "--count", "2", "--slots", "300"]));
        ["data/manifest.jsonl", "model.jnet", "loss.tsv", "slots.jsonl", "summary.json"]
            .map(|f| fs::read(out.join(f)).unwrap())
    };
    let a = outputs("a");
    let b = outputs("b");
    for (x, y) in a.iter().zip(&b) {
        assert!(x == y);
    }
}

#[test]
fn config_file_and_env_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let target = dir.path().join("from_config");
    fs::write(&cfg, format!("seed = 9\nout = {:?}\n\n[simulate]\nn_slots = 40\n", target.to_str().unwrap())).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_jamlab"))
        .args(["--config", cfg.to_str().unwrap(), "simulate"])
        .output()
        .unwrap();
    ok(o);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(target.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n_slots"], 40);
    assert_eq!(summary["seed"], 9);

    let env_out = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_jamlab"))
        .args(["--quiet", "simulate", "--slots", "10"])
        .env("JAMLAB_OUT", &env_out)
        .output()
        .unwrap();
    assert!(ok(o).is_empty());
    assert!(env_out.join("summary.json").exists());

    fs::write(&cfg, "bogus = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_jamlab")).args(["--config", cfg.to_str().unwrap(), "simulate"]).output().unwrap();
    assert_ne!(o.status.code(), Some(0));
}
