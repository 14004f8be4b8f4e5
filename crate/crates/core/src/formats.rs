//! On-disk formats.
//!
//! * EEGB: `"EEGB"`, u32 version (1), u32 channels, u32 length, u32 label
//!   (`0xFFFF_FFFF` when unlabeled), then `channels * length` f32 values,
//!   channel-major. All integers and floats little-endian.
//! * Sample CSV: one row per channel, optionally preceded by `# label: m`.
//! * PGM: binary P5, maxval 255, `round(v * 255)` per pixel.
//! * Raw tensors: f32 little-endian values plus a `.json` sidecar
//!   `{"shape":[...]}`.
//! * EEGW checkpoints: `"EEGW"`, u32 version (1), u32 dim, u32 classes, then
//!   `dim * classes` weights (row-major) and `classes` biases as f64.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{ClassifierParams, EpochMetrics};
use crate::error::{Error, Result};
use crate::signal::{Dataset, EegSample, Split};

pub const EEGB_MAGIC: &[u8; 4] = b"EEGB";
pub const EEGW_MAGIC: &[u8; 4] = b"EEGW";
pub const FORMAT_VERSION: u32 = 1;
const UNLABELED: u32 = u32::MAX;
const EEGB_HEADER: usize = 20;
const EEGW_HEADER: usize = 16;

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

fn to_u32(path: &Path, what: &str, v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::format(path, 0, format!("{what} {v} does not fit in u32")))
}

/// Serializes a sample as EEGB. Values are narrowed to f32.
pub fn encode_eegb(sample: &EegSample) -> Vec<u8> {
    let mut out = Vec::with_capacity(EEGB_HEADER + 4 * sample.data.len());
    out.extend_from_slice(EEGB_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(sample.channels as u32).to_le_bytes());
    out.extend_from_slice(&(sample.length as u32).to_le_bytes());
    out.extend_from_slice(&sample.label.map_or(UNLABELED, |l| l as u32).to_le_bytes());
    for v in &sample.data {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

/// Parses EEGB bytes; `path` is only used in error messages.
pub fn decode_eegb(bytes: &[u8], path: &Path) -> Result<EegSample> {
    if bytes.len() < EEGB_HEADER {
        return Err(Error::format(path, bytes.len() as u64, "truncated EEGB header"));
    }
    if &bytes[..4] != EEGB_MAGIC {
        return Err(Error::format(
            path,
            0,
            format!(
                "bad magic {:?}, expected \"EEGB\"",
                String::from_utf8_lossy(&bytes[..4])
            ),
        ));
    }
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::format(path, 4, format!("unsupported EEGB version {version}")));
    }
    let channels = u32_at(bytes, 8) as usize;
    let length = u32_at(bytes, 12) as usize;
    let label = match u32_at(bytes, 16) {
        UNLABELED => None,
        l => Some(l as usize),
    };
    let expected = channels
        .checked_mul(length)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(EEGB_HEADER))
        .ok_or_else(|| Error::format(path, 8, "channel/length overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            bytes.len().min(expected) as u64,
            format!(
                "expected {expected} bytes for {channels}x{length}, found {}",
                bytes.len()
            ),
        ));
    }
    let data = bytes[EEGB_HEADER..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    EegSample::new(channels, length, data, label)
}

pub fn write_eegb(path: &Path, sample: &EegSample) -> Result<()> {
    to_u32(path, "channels", sample.channels)?;
    to_u32(path, "length", sample.length)?;
    if let Some(l) = sample.label {
        if l >= UNLABELED as usize {
            return Err(Error::format(path, 16, format!("label {l} not representable")));
        }
    }
    write_file(path, &encode_eegb(sample))
}

pub fn read_eegb(path: &Path) -> Result<EegSample> {
    decode_eegb(&read_file(path)?, path)
}

pub fn read_sample_csv(path: &Path) -> Result<EegSample> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut label = None;
    let mut rows = Vec::new();
    let mut offset = 0u64;
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(value) = rest.trim().strip_prefix("label:") {
                let parsed = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(path, offset, format!("bad label {:?}", value.trim())))?;
                label = Some(parsed);
            }
        } else if !trimmed.is_empty() {
            let row = trimmed
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format(path, offset, e.to_string()))?;
            rows.push(row);
        }
        offset += line.len() as u64 + 1;
    }
    EegSample::from_rows(rows, label)
}

pub fn write_sample_csv(path: &Path, sample: &EegSample) -> Result<()> {
    let mut out = String::new();
    if let Some(l) = sample.label {
        out.push_str(&format!("# label: {l}\n"));
    }
    for row in sample.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// Reads a sample by extension: `.csv` as CSV, anything else as EEGB.
pub fn read_sample(path: &Path) -> Result<EegSample> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_sample_csv(path),
        _ => read_eegb(path),
    }
}

pub fn pgm_level(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(height: usize, width: usize, pixels: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels.iter().map(|&v| pgm_level(v)));
    out
}

/// Returns `(height, width, levels)` for a P5 image with maxval 255.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0usize;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, pos as u64, "truncated PGM header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::format(path, 0, format!("expected P5, found {}", fields[0])));
    }
    let num = |i: usize| {
        fields[i]
            .parse::<usize>()
            .map_err(|_| Error::format(path, 0, format!("bad PGM field {:?}", fields[i])))
    };
    let (width, height, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval != 255 {
        return Err(Error::format(path, 0, format!("unsupported maxval {maxval}")));
    }
    let body = bytes.get(pos..).unwrap_or_default();
    if body.len() != width * height {
        return Err(Error::format(
            path,
            pos as u64,
            format!("expected {} pixels, found {}", width * height, body.len()),
        ));
    }
    Ok((height, width, body.to_vec()))
}

pub fn write_pgm(path: &Path, height: usize, width: usize, pixels: &[f64]) -> Result<()> {
    write_file(path, &encode_pgm(height, width, pixels))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub shape: Vec<usize>,
}

pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

pub fn encode_f32(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| (*v as f32).to_le_bytes()).collect()
}

/// Writes `values` as raw f32 at `path` and the shape sidecar next to it.
/// Returns the sidecar path.
pub fn write_raw_f32(path: &Path, values: &[f64], shape: &[usize]) -> Result<PathBuf> {
    if shape.iter().product::<usize>() != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "shape {shape:?} does not hold {} values",
            values.len()
        )));
    }
    write_file(path, &encode_f32(values))?;
    let side = sidecar_path(path);
    let json = serde_json::to_vec(&Sidecar { shape: shape.to_vec() }).expect("sidecar serializes");
    write_file(&side, &json)?;
    Ok(side)
}

pub fn read_raw_f32(path: &Path) -> Result<(Vec<usize>, Vec<f64>)> {
    let side = sidecar_path(path);
    let meta: Sidecar = serde_json::from_slice(&read_file(&side)?)
        .map_err(|e| Error::format(&side, e.column() as u64, e.to_string()))?;
    let bytes = read_file(path)?;
    let n: usize = meta.shape.iter().product();
    if bytes.len() != 4 * n {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!("expected {} bytes for shape {:?}", 4 * n, meta.shape),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((meta.shape, values))
}

pub fn encode_checkpoint(params: &ClassifierParams) -> Vec<u8> {
    let mut out = Vec::with_capacity(EEGW_HEADER + 8 * (params.weights().len() + params.bias().len()));
    out.extend_from_slice(EEGW_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(params.classes() as u32).to_le_bytes());
    for v in params.weights().iter().chain(params.bias()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<ClassifierParams> {
    if bytes.len() < EEGW_HEADER {
        return Err(Error::format(path, bytes.len() as u64, "truncated EEGW header"));
    }
    if &bytes[..4] != EEGW_MAGIC {
        return Err(Error::format(path, 0, "bad magic, expected \"EEGW\""));
    }
    let version = u32_at(bytes, 4);
    if version != FORMAT_VERSION {
        return Err(Error::format(path, 4, format!("unsupported EEGW version {version}")));
    }
    let dim = u32_at(bytes, 8) as usize;
    let classes = u32_at(bytes, 12) as usize;
    let count = dim * classes + classes;
    if bytes.len() != EEGW_HEADER + 8 * count {
        return Err(Error::format(
            path,
            bytes.len() as u64,
            format!("expected {} parameters", count),
        ));
    }
    let mut values: Vec<f64> = bytes[EEGW_HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let bias = values.split_off(dim * classes);
    ClassifierParams::from_parts(dim, classes, values, bias)
}

pub fn write_checkpoint(path: &Path, params: &ClassifierParams) -> Result<()> {
    to_u32(path, "dim", params.dim())?;
    to_u32(path, "classes", params.classes())?;
    write_file(path, &encode_checkpoint(params))
}

pub fn read_checkpoint(path: &Path) -> Result<ClassifierParams> {
    decode_checkpoint(&read_file(path)?, path)
}

pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,train_loss,val_acc\n");
    for m in metrics {
        out.push_str(&format!("{},{:?},{:?}\n", m.epoch, m.train_loss, m.val_acc));
    }
    out
}

pub const DATASET_MANIFEST: &str = "dataset.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub file: String,
    pub label: Option<usize>,
    pub split: Split,
    pub sha256: String,
}

/// `dataset.json`: the sample files of a dataset directory with their tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub num_classes: usize,
    pub channels: usize,
    pub length: usize,
    pub samples: Vec<DatasetEntry>,
}

/// Writes every sample as `sample_NNNNN.eegb` under `dir` plus the manifest.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<DatasetManifest> {
    let (channels, length) = dataset.shape().unwrap_or((0, 0));
    let width = dataset.len().max(1).to_string().len().max(5);
    let mut samples = Vec::with_capacity(dataset.len());
    for (i, (sample, split)) in dataset.samples.iter().zip(&dataset.splits).enumerate() {
        let file = format!("sample_{i:0width$}.eegb");
        let path = dir.join(&file);
        write_eegb(&path, sample)?;
        samples.push(DatasetEntry {
            file,
            label: sample.label,
            split: *split,
            sha256: sha256_hex(&encode_eegb(sample)),
        });
    }
    let manifest = DatasetManifest {
        num_classes: dataset.num_classes,
        channels,
        length,
        samples,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join(DATASET_MANIFEST), json.as_bytes())?;
    Ok(manifest)
}

pub fn read_dataset_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(DATASET_MANIFEST);
    let bytes = read_file(&path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(&path, e.line() as u64, e.to_string()))
}

/// Loads a dataset directory written by [`write_dataset`] (or hand-written
/// with CSV samples).
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_dataset_manifest(dir)?;
    let mut samples = Vec::with_capacity(manifest.samples.len());
    let mut splits = Vec::with_capacity(manifest.samples.len());
    for entry in &manifest.samples {
        let mut sample = read_sample(&dir.join(&entry.file))?;
        if sample.label.is_none() {
            sample.label = entry.label;
        }
        samples.push(sample);
        splits.push(entry.split);
    }
    Dataset::with_splits(samples, manifest.num_classes, splits)
}
