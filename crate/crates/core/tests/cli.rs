use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eeg_homog::formats::{self, DatasetManifest};
use eeg_homog::harness::{self, EncodeManifest};
use eeg_homog::{Dataset, EegSample, Split};
use tempfile::TempDir;

const SPEC: &str = r#"
num_classes = 3
channels = 8
length = 128
frequencies = [0.03125, 0.0625, 0.09375]
noise_std = 0.1
gains = [1.0, 2.0, 5.0, 10.0, 1.0, 0.5, 20.0, 1.0]
samples_per_class = 100
seed = 42
"#;

const CONFIG: &str = r#"
seed = 3

[icwmh]
height = 32
width = 32

[train]
epochs = 15
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eeg-homog"))
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = bin();
    for a in args {
        cmd.arg(a);
    }
    cmd.output().unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("spec.toml"), SPEC).unwrap();
        fs::write(dir.path().join("config.toml"), CONFIG).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn synth(&self, out: &str) -> PathBuf {
        let out_dir = self.path(out);
        ok(run(&[&"synth", &self.path("spec.toml"), &"--out", &out_dir]));
        out_dir
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn synth_is_deterministic_and_balanced() {
    let fx = Fixture::new();
    let a = fx.synth("a");
    let b = fx.synth("b");
    assert_eq!(dir_bytes(&a), dir_bytes(&b));

    let manifest: DatasetManifest = serde_json::from_slice(&fs::read(a.join("dataset.json")).unwrap()).unwrap();
    assert_eq!(manifest.samples.len(), 300);
    assert_eq!((manifest.channels, manifest.length, manifest.num_classes), (8, 128, 3));
    for m in 0..3 {
        assert_eq!(manifest.samples.iter().filter(|e| e.label == Some(m)).count(), 100);
    }
    for entry in &manifest.samples {
        let bytes = fs::read(a.join(&entry.file)).unwrap();
        assert_eq!(formats::sha256_hex(&bytes), entry.sha256);
    }

    // a different seed changes the data
    let c = fx.path("c");
    ok(run(&[&"synth", &fx.path("spec.toml"), &"--seed", &"7", &"--out", &c]));
    assert_ne!(dir_bytes(&a), dir_bytes(&c));
}

#[test]
fn encode_writes_complete_verifiable_manifest() {
    let fx = Fixture::new();
    let data = fx.synth("data");
    let enc = fx.path("enc");
    ok(run(&[
        &"encode",
        &data,
        &"--config",
        &fx.path("config.toml"),
        &"--out",
        &enc,
    ]));

    let manifest: EncodeManifest = harness::read_encode_manifest(&enc).unwrap();
    assert_eq!(manifest.samples.len(), 300);
    assert_eq!((manifest.height, manifest.width), (32, 32));
    assert_eq!(manifest.files.len(), 300 * 4);
    harness::verify_encode_manifest(&enc, &manifest).unwrap();
    for entry in &manifest.samples {
        let (shape, values) = formats::read_raw_f32(&enc.join(&entry.tensor)).unwrap();
        assert_eq!(shape, vec![3, 32, 32]);
        assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    let again = fx.path("enc2");
    ok(run(&[
        &"encode",
        &data,
        &"--config",
        &fx.path("config.toml"),
        &"--out",
        &again,
    ]));
    assert_eq!(dir_bytes(&enc), dir_bytes(&again));

    // tampering is detected
    let victim = enc.join(&manifest.samples[0].edge_pgm);
    let mut bytes = fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    fs::write(&victim, bytes).unwrap();
    let err = harness::verify_encode_manifest(&enc, &manifest).unwrap_err();
    assert!(err.to_string().contains("hash mismatch"));
}

#[test]
fn corrupt_magic_is_a_data_error_naming_file_and_offset() {
    let fx = Fixture::new();
    let data = fx.synth("data");
    let victim = data.join("sample_00005.eegb");
    let mut bytes = fs::read(&victim).unwrap();
    bytes[..4].copy_from_slice(b"JUNK");
    fs::write(&victim, bytes).unwrap();

    let out = run(&[&"encode", &data, &"--out", &fx.path("enc")]);
    assert_eq!(out.status.code(), Some(3));
    let msg = stderr(&out);
    assert!(msg.contains("sample_00005.eegb") && msg.contains("offset 0"), "{msg}");
}

#[test]
fn train_is_deterministic_and_eval_reproduces_validation_accuracy() {
    let fx = Fixture::new();
    let data = fx.synth("data");
    let cfg = fx.path("config.toml");
    let (r1, r2) = (fx.path("run1"), fx.path("run2"));
    ok(run(&[&"train", &data, &"--config", &cfg, &"--out", &r1]));
    ok(run(&[&"train", &data, &"--config", &cfg, &"--out", &r2]));
    assert_eq!(dir_bytes(&r1), dir_bytes(&r2));

    let report: serde_json::Value = serde_json::from_slice(&fs::read(r1.join("train.json")).unwrap()).unwrap();
    let best_val = report["best_val_acc"].as_f64().unwrap();
    assert!(report["test_acc"].as_f64().unwrap() >= 0.9, "{report}");

    let metrics = fs::read_to_string(r1.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().next(), Some("epoch,train_loss,val_acc"));
    assert_eq!(metrics.lines().count(), 16);

    let ckpt = r1.join("checkpoint.eegw");
    let stdout = ok(run(&[&"eval", &ckpt, &data, &"--split", &"val", &"--config", &cfg]));
    assert_eq!(stdout.trim(), format!("val accuracy {best_val:.4} on 30 samples"));

    // training from the encoded directory gives the same model
    let enc = fx.path("enc");
    ok(run(&[&"encode", &data, &"--config", &cfg, &"--out", &enc]));
    let r3 = fx.path("run3");
    ok(run(&[&"train", &enc, &"--config", &cfg, &"--out", &r3]));
    let a = formats::read_checkpoint(&ckpt).unwrap();
    let b = formats::read_checkpoint(&r3.join("checkpoint.eegw")).unwrap();
    let max_diff = a
        .weights()
        .iter()
        .zip(b.weights())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    // tensors are stored as f32, so the match is close rather than exact
    assert!(max_diff < 1e-4, "{max_diff}");

    // a checkpoint trained at 32x32 does not fit 16x16 features
    let small = fx.path("small.toml");
    fs::write(&small, "[icwmh]\nheight = 16\nwidth = 16\n").unwrap();
    let out = run(&[&"eval", &ckpt, &data, &"--config", &small]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("dimension mismatch"), "{}", stderr(&out));
}

#[test]
fn unlabeled_samples_are_rejected_for_training() {
    let fx = Fixture::new();
    let samples: Vec<EegSample> = (0..10)
        .map(|i| {
            let data = (0..4 * 16).map(|t| ((t + i) as f64 * 0.3).sin()).collect();
            EegSample::new(4, 16, data, if i == 4 { None } else { Some(i % 2) }).unwrap()
        })
        .collect();
    let splits = (0..10).map(|i| if i < 8 { Split::Train } else { Split::Val }).collect();
    let dataset = Dataset::with_splits(samples, 2, splits).unwrap();
    let dir = fx.path("unlabeled");
    formats::write_dataset(&dir, &dataset).unwrap();

    let out = run(&[&"train", &dir, &"--out", &fx.path("run")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("unlabeled"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let fx = Fixture::new();
    let data = fx.synth("data");
    let bad = fx.path("bad.toml");
    fs::write(&bad, "[edge]\ncanny_lo = 40\n").unwrap();
    let out = run(&[&"encode", &data, &"--config", &bad, &"--out", &fx.path("enc")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("canny_lo"), "{}", stderr(&out));

    fs::write(&bad, "[edge]\ncanny_low = 130\ncanny_high = 120\n").unwrap();
    let out = run(&[&"encode", &data, &"--config", &bad, &"--out", &fx.path("enc")]);
    assert_eq!(out.status.code(), Some(2));

    let spec = fx.path("badspec.toml");
    fs::write(&spec, SPEC.replace("noise_std", "noise")).unwrap();
    let out = run(&[&"synth", &spec, &"--out", &fx.path("x")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ablate_writes_eleven_row_table() {
    let fx = Fixture::new();
    let spec = fx.path("small.toml");
    fs::write(&spec, SPEC.replace("samples_per_class = 100", "samples_per_class = 10")).unwrap();
    let data = fx.path("data");
    ok(run(&[&"synth", &spec, &"--out", &data]));
    let cfg = fx.path("ablate.toml");
    fs::write(&cfg, "[icwmh]\nheight = 16\nwidth = 16\n\n[train]\nepochs = 3\n").unwrap();
    let out = fx.path("abl");
    let stdout = ok(run(&[
        &"ablate",
        &data,
        &"--config",
        &cfg,
        &"--seeds",
        &"2",
        &"--out",
        &out,
    ]));
    assert!(stdout.contains("Gaussian Threshold"));

    let csv = fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    let resolved = fs::read_to_string(out.join("config.toml")).unwrap();
    let parsed = eeg_homog::PipelineConfig::parse(&resolved).unwrap();
    assert_eq!(parsed.ablation.seeds, 2);
    assert_eq!(parsed.train.epochs, 3);
}

#[test]
fn input_falls_back_to_io_dataset() {
    let fx = Fixture::new();
    let data = fx.synth("data");
    let cfg = fx.path("io.toml");
    fs::write(
        &cfg,
        format!(
            "[icwmh]\nheight = 8\nwidth = 8\n\n[io]\ndataset = {:?}\n",
            data.to_str().unwrap()
        ),
    )
    .unwrap();
    let enc = fx.path("enc");
    ok(run(&[&"encode", &"--config", &cfg, &"--out", &enc]));
    assert_eq!(harness::read_encode_manifest(&enc).unwrap().samples.len(), 300);

    let out = run(&[&"encode", &"--out", &enc]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("[io] dataset"), "{}", stderr(&out));
}
