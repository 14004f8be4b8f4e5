//! Library side of the CLI verbs, plus the one-axis-at-a-time ablation grid.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{evaluate_split, train, ClassifierParams, EpochMetrics, LabeledFeatures};
use crate::config::PipelineConfig;
use crate::edge::{EdgeConfig, EdgeMode};
use crate::error::{Error, Result};
use crate::fevsc::LAYERS;
use crate::formats::{self, DatasetManifest};
use crate::icwmh::{IcwmhConfig, Interpolation};
use crate::pipeline::{encode_sample, featurize};
use crate::signal::{synth_dataset, Split, SynthSpec};

pub const ENCODE_MANIFEST: &str = "encode.json";

/// Parses a synth spec file (same `key = value` syntax as the pipeline
/// config; `[split]` is optional).
pub fn load_synth_spec(path: &Path) -> Result<SynthSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec: SynthSpec =
        toml::from_str(&text).map_err(|e| Error::InvalidSpec(format!("{}: {}", path.display(), e.message())))?;
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<DatasetManifest> {
    let dataset = synth_dataset(spec)?;
    formats::write_dataset(out, &dataset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedEntry {
    pub source: String,
    pub label: Option<usize>,
    pub split: Split,
    pub encoded_pgm: String,
    pub edge_pgm: String,
    pub tensor: String,
}

/// `encode.json`: every artifact written by [`cmd_encode`], with hashes and
/// the resolved config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodeManifest {
    pub config: PipelineConfig,
    pub num_classes: usize,
    pub height: usize,
    pub width: usize,
    pub samples: Vec<EncodedEntry>,
    pub files: Vec<FileRecord>,
}

fn record(out: &Path, name: String, files: &mut Vec<FileRecord>) -> Result<String> {
    let bytes = formats::read_file(&out.join(&name))?;
    files.push(FileRecord {
        path: name.clone(),
        sha256: formats::sha256_hex(&bytes),
    });
    Ok(name)
}

pub fn cmd_encode(dataset_dir: &Path, config: &PipelineConfig, out: &Path) -> Result<EncodeManifest> {
    config.validate()?;
    let source = formats::read_dataset_manifest(dataset_dir)?;
    let dataset = formats::read_dataset(dataset_dir)?;
    let encoded = dataset
        .samples
        .par_iter()
        .map(|s| encode_sample(s, &config.icwmh, &config.edge))
        .collect::<Result<Vec<_>>>()?;

    let mut files = Vec::new();
    let mut samples = Vec::with_capacity(encoded.len());
    for ((enc, entry), split) in encoded.iter().zip(&source.samples).zip(&dataset.splits) {
        let stem = Path::new(&entry.file)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| entry.file.clone());
        let (h, w) = enc.image.shape();
        formats::write_pgm(&out.join(format!("{stem}.encoded.pgm")), h, w, enc.image.as_slice())?;
        formats::write_pgm(&out.join(format!("{stem}.edges.pgm")), h, w, enc.edges.as_slice())?;
        formats::write_raw_f32(
            &out.join(format!("{stem}.tensor.f32")),
            enc.tensor.as_slice(),
            &enc.tensor.shape(),
        )?;

        let encoded_pgm = record(out, format!("{stem}.encoded.pgm"), &mut files)?;
        let edge_pgm = record(out, format!("{stem}.edges.pgm"), &mut files)?;
        let tensor = record(out, format!("{stem}.tensor.f32"), &mut files)?;
        record(out, format!("{stem}.tensor.json"), &mut files)?;
        samples.push(EncodedEntry {
            source: entry.file.clone(),
            label: entry.label,
            split: *split,
            encoded_pgm,
            edge_pgm,
            tensor,
        });
    }
    let manifest = EncodeManifest {
        config: config.clone(),
        num_classes: dataset.num_classes,
        height: config.icwmh.height,
        width: config.icwmh.width,
        samples,
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    formats::write_file(&out.join(ENCODE_MANIFEST), json.as_bytes())?;
    Ok(manifest)
}

/// Checks that every file listed in an encode manifest exists and matches its
/// recorded hash.
pub fn verify_encode_manifest(dir: &Path, manifest: &EncodeManifest) -> Result<()> {
    for f in &manifest.files {
        let path = dir.join(&f.path);
        let actual = formats::sha256_hex(&formats::read_file(&path)?);
        if actual != f.sha256 {
            return Err(Error::format(
                path,
                0,
                format!("hash mismatch: manifest {}, file {actual}", f.sha256),
            ));
        }
    }
    Ok(())
}

pub fn read_encode_manifest(dir: &Path) -> Result<EncodeManifest> {
    let path = dir.join(ENCODE_MANIFEST);
    serde_json::from_slice(&formats::read_file(&path)?)
        .map_err(|e| Error::format(&path, e.line() as u64, e.to_string()))
}

/// Loads classifier features from either an encoded directory (tensors are
/// read back as stored) or a dataset directory (encoded in memory with
/// `config`).
pub fn load_features(input: &Path, config: &PipelineConfig) -> Result<LabeledFeatures> {
    if input.join(ENCODE_MANIFEST).is_file() {
        let manifest = read_encode_manifest(input)?;
        let mut features = Vec::with_capacity(manifest.samples.len());
        let mut labels = Vec::with_capacity(manifest.samples.len());
        let mut splits = Vec::with_capacity(manifest.samples.len());
        for entry in &manifest.samples {
            let path = input.join(&entry.tensor);
            let (shape, values) = formats::read_raw_f32(&path)?;
            if shape.len() != 3 || shape[0] != LAYERS {
                return Err(Error::format(
                    &path,
                    0,
                    format!("expected a [3, H, W] tensor, found {shape:?}"),
                ));
            }
            features.push(values);
            labels.push(entry.label.ok_or(Error::Unlabeled)?);
            splits.push(entry.split);
        }
        let data = LabeledFeatures {
            features,
            labels,
            splits,
            num_classes: manifest.num_classes,
        };
        data.validate()?;
        Ok(data)
    } else {
        config.validate()?;
        let dataset = formats::read_dataset(input)?;
        featurize(&dataset, &config.icwmh, &config.edge)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: PipelineConfig,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: Option<f64>,
    pub dim: usize,
    pub num_classes: usize,
    #[serde(skip)]
    pub metrics: Vec<EpochMetrics>,
    #[serde(skip)]
    pub params: Option<ClassifierParams>,
}

pub const CHECKPOINT_FILE: &str = "checkpoint.eegw";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TRAIN_REPORT_FILE: &str = "train.json";

/// Trains on `input` and writes the checkpoint, the metric trace and a JSON
/// report under `out`.
pub fn cmd_train(input: &Path, config: &PipelineConfig, out: &Path) -> Result<TrainReport> {
    let data = load_features(input, config)?;
    let outcome = train(&data, &config.train)?;
    let test_acc = if data.indices(Split::Test).is_empty() {
        None
    } else {
        Some(evaluate_split(&outcome.params, &data, Split::Test)?)
    };
    formats::write_checkpoint(&out.join(CHECKPOINT_FILE), &outcome.params)?;
    formats::write_file(
        &out.join(METRICS_FILE),
        formats::metrics_csv(&outcome.metrics).as_bytes(),
    )?;
    let report = TrainReport {
        config: config.clone(),
        best_epoch: outcome.best_epoch,
        best_val_acc: outcome.best_val_acc(),
        test_acc,
        dim: data.dim(),
        num_classes: data.num_classes,
        metrics: outcome.metrics,
        params: Some(outcome.params),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    formats::write_file(&out.join(TRAIN_REPORT_FILE), json.as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub samples: usize,
}

pub fn cmd_eval(checkpoint: &Path, input: &Path, split: Split, config: &PipelineConfig) -> Result<EvalReport> {
    let params = formats::read_checkpoint(checkpoint)?;
    let data = load_features(input, config)?;
    if data.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: data.dim(),
        });
    }
    if data.num_classes != params.classes() {
        return Err(Error::ShapeMismatch(format!(
            "checkpoint has {} classes, data has {}",
            params.classes(),
            data.num_classes
        )));
    }
    let accuracy = evaluate_split(&params, &data, split)?;
    Ok(EvalReport {
        accuracy,
        samples: data.indices(split).len(),
    })
}

/// One row of the ablation table: the baseline with a single axis changed.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub method: &'static str,
    pub parameters: String,
    pub icwmh: IcwmhConfig,
    pub edge: EdgeConfig,
}

/// The 11 ablation rows: interpolation (2), Canny thresholds (4), blur
/// kernel (3) and adaptive threshold method (2).
pub fn ablation_grid(icwmh: &IcwmhConfig, edge: &EdgeConfig) -> Vec<AblationCell> {
    let mut cells = Vec::with_capacity(11);
    for interp in [Interpolation::Bilinear, Interpolation::Nearest] {
        cells.push(AblationCell {
            method: "Interpolation Method",
            parameters: format!("'{}'", interp.label()),
            icwmh: IcwmhConfig {
                interpolation: interp,
                ..*icwmh
            },
            edge: *edge,
        });
    }
    for (low, high) in [(40.0, 120.0), (50.0, 100.0), (50.0, 120.0), (50.0, 140.0)] {
        cells.push(AblationCell {
            method: "Canny Edge Threshold",
            parameters: format!("({low},{high})"),
            icwmh: *icwmh,
            edge: EdgeConfig {
                mode: EdgeMode::Canny,
                canny_low: low,
                canny_high: high,
                ..*edge
            },
        });
    }
    for k in [3usize, 5, 7] {
        cells.push(AblationCell {
            method: "Gaussian Blur Kernel",
            parameters: format!("({k},{k})"),
            icwmh: *icwmh,
            edge: EdgeConfig {
                blur_kernel: k,
                ..*edge
            },
        });
    }
    for (mode, label) in [
        (EdgeMode::AdaptiveMean, "Mean Threshold"),
        (EdgeMode::AdaptiveGaussian, "Gaussian Threshold"),
    ] {
        cells.push(AblationCell {
            method: "Adaptive Edge Threshold",
            parameters: label.to_string(),
            icwmh: *icwmh,
            edge: EdgeConfig { mode, ..*edge },
        });
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub method: String,
    pub parameters: String,
    pub mean_acc: f64,
    pub std_acc: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub seeds: Vec<u64>,
    /// Split the accuracies were measured on.
    pub split: Split,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl AblationTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,parameters,mean_acc,std_acc,runs\n");
        for r in &self.rows {
            let runs: Vec<String> = r.accuracies.iter().map(|a| format!("{a:?}")).collect();
            let _ = writeln!(
                out,
                "{},\"{}\",{:?},{:?},{}",
                r.method,
                r.parameters,
                r.mean_acc,
                r.std_acc,
                runs.join(";")
            );
        }
        out
    }

    /// Aligned plain-text table with percentages as `mean ± std`.
    pub fn to_text(&self) -> String {
        let method_w = self
            .rows
            .iter()
            .map(|r| r.method.len())
            .max()
            .unwrap_or(0)
            .max("Method".len());
        let param_w = self
            .rows
            .iter()
            .map(|r| r.parameters.len())
            .max()
            .unwrap_or(0)
            .max("Parameters".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<method_w$}  {:<param_w$}  Accuracy(%) [{} split, {} seeds]",
            "Method",
            "Parameters",
            self.split.as_str(),
            self.seeds.len()
        );
        let mut last = "";
        for r in &self.rows {
            let method = if r.method == last { "" } else { r.method.as_str() };
            last = &r.method;
            let _ = writeln!(
                out,
                "{:<method_w$}  {:<param_w$}  {:.2} ± {:.2}",
                method,
                r.parameters,
                100.0 * r.mean_acc,
                100.0 * r.std_acc
            );
        }
        out
    }
}

pub const ABLATION_CSV: &str = "ablation.csv";
pub const ABLATION_TXT: &str = "ablation.txt";

/// Runs every grid cell for seeds `config.seed .. config.seed + seeds`,
/// scoring on the test split (val when the dataset has no test samples).
pub fn run_ablation(dataset_dir: &Path, config: &PipelineConfig) -> Result<AblationTable> {
    config.validate()?;
    let dataset = formats::read_dataset(dataset_dir)?;
    let split = if dataset.indices(Split::Test).is_empty() {
        Split::Val
    } else {
        Split::Test
    };
    let seeds: Vec<u64> = (0..config.ablation.seeds as u64).map(|i| config.seed + i).collect();
    let grid = ablation_grid(&config.icwmh, &config.edge);

    let rows = grid
        .par_iter()
        .map(|cell| {
            let data = featurize(&dataset, &cell.icwmh, &cell.edge)?;
            let accuracies = seeds
                .iter()
                .map(|&seed| {
                    let outcome = train(&data, &crate::classifier::TrainConfig { seed, ..config.train })?;
                    evaluate_split(&outcome.params, &data, split)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean_acc, std_acc) = mean_std(&accuracies);
            Ok(AblationRow {
                method: cell.method.to_string(),
                parameters: cell.parameters.clone(),
                mean_acc,
                std_acc,
                accuracies,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationTable { rows, seeds, split })
}

/// [`run_ablation`], then writes `ablation.csv`, `ablation.txt` and the
/// resolved config under `out`.
pub fn cmd_ablate(dataset_dir: &Path, config: &PipelineConfig, out: &Path) -> Result<AblationTable> {
    let table = run_ablation(dataset_dir, config)?;
    formats::write_file(&out.join(ABLATION_CSV), table.to_csv().as_bytes())?;
    formats::write_file(&out.join(ABLATION_TXT), table.to_text().as_bytes())?;
    formats::write_file(&out.join("config.toml"), config.to_toml().as_bytes())?;
    Ok(table)
}

/// Output directory helper: `--out` wins over `[io] out`, then `default`.
pub fn resolve_out(flag: Option<PathBuf>, config: &PipelineConfig, default: &str) -> PathBuf {
    flag.or_else(|| config.io.out.clone())
        .unwrap_or_else(|| PathBuf::from(default))
}
