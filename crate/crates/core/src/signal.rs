//! EEG sample and dataset types, channel power, and seeded synthetic data.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One multi-channel recording: `channels` rows of `length` samples, stored
/// channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EegSample {
    pub channels: usize,
    pub length: usize,
    pub data: Vec<f64>,
    pub label: Option<usize>,
}

impl EegSample {
    pub fn new(channels: usize, length: usize, data: Vec<f64>, label: Option<usize>) -> Result<Self> {
        validate_sample(EegSample {
            channels,
            length,
            data,
            label,
        })
    }

    /// Builds a sample from one `Vec` per channel.
    pub fn from_rows(rows: Vec<Vec<f64>>, label: Option<usize>) -> Result<Self> {
        let channels = rows.len();
        let length = rows.first().map_or(0, Vec::len);
        if let Some((c, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != length) {
            return Err(Error::ShapeMismatch(format!(
                "channel {c} has {} samples, channel 0 has {length}",
                row.len()
            )));
        }
        Self::new(channels, length, rows.concat(), label)
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.length.max(1)).take(self.channels)
    }
}

/// Checks shape and finiteness, returning the sample unchanged when valid.
pub fn validate_sample(sample: EegSample) -> Result<EegSample> {
    if sample.channels == 0 || sample.length == 0 {
        return Err(Error::ShapeMismatch(format!(
            "sample must have at least one channel and one time step, got {}x{}",
            sample.channels, sample.length
        )));
    }
    let expected = sample.channels * sample.length;
    if sample.data.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "declared {}x{} = {expected} values, found {}",
            sample.channels,
            sample.length,
            sample.data.len()
        )));
    }
    if let Some(pos) = sample.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            channel: pos / sample.length,
            index: pos % sample.length,
        });
    }
    Ok(sample)
}

/// Mean of squared amplitudes of channel `c`.
pub fn channel_power(sample: &EegSample, c: usize) -> Result<f64> {
    if c >= sample.channels {
        return Err(Error::IndexOutOfRange {
            index: c,
            len: sample.channels,
        });
    }
    Ok(mean_square(sample.channel(c)))
}

pub(crate) fn mean_square(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|v| v * v).sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !f.is_finite() || *f < 0.0) || ((parts.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split fractions must be non-negative and sum to 1, got {}/{}/{}",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }
}

/// A labeled collection of equally shaped samples with a split tag per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<EegSample>,
    pub num_classes: usize,
    pub splits: Vec<Split>,
}

impl Dataset {
    /// Creates a dataset with every sample tagged `Train`.
    pub fn new(samples: Vec<EegSample>, num_classes: usize) -> Result<Self> {
        let splits = vec![Split::Train; samples.len()];
        Self::with_splits(samples, num_classes, splits)
    }

    pub fn with_splits(samples: Vec<EegSample>, num_classes: usize, splits: Vec<Split>) -> Result<Self> {
        if splits.len() != samples.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} split tags for {} samples",
                splits.len(),
                samples.len()
            )));
        }
        if let Some(first) = samples.first() {
            for (i, s) in samples.iter().enumerate() {
                if s.channels != first.channels || s.length != first.length {
                    return Err(Error::ShapeMismatch(format!(
                        "sample {i} is {}x{}, sample 0 is {}x{}",
                        s.channels, s.length, first.channels, first.length
                    )));
                }
                if let Some(label) = s.label {
                    if label >= num_classes {
                        return Err(Error::LabelOutOfRange { label, num_classes });
                    }
                }
            }
        }
        Ok(Dataset {
            samples,
            num_classes,
            splits,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(channels, length)` shared by all samples, or `None` when empty.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.samples.first().map(|s| (s.channels, s.length))
    }

    /// Re-tags samples: a seeded shuffle, then the first `round(N * train)`
    /// go to train, the next `round(N * val)` to val, and the rest to test.
    pub fn assign_splits(&mut self, fractions: SplitFractions, seed: u64) -> Result<()> {
        fractions.validate()?;
        let n = self.samples.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SPLIT_STREAM);
        order.shuffle(&mut rng);

        let n_train = ((n as f64) * fractions.train).round() as usize;
        let n_val = (((n as f64) * fractions.val).round() as usize).min(n - n_train.min(n));
        for (rank, &idx) in order.iter().enumerate() {
            self.splits[idx] = if rank < n_train {
                Split::Train
            } else if rank < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
        }
        Ok(())
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.samples.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// Empirical label distribution over the labeled samples.
    pub fn label_distribution(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.num_classes];
        let mut total = 0usize;
        for label in self.samples.iter().filter_map(|s| s.label) {
            counts[label] += 1;
            total += 1;
        }
        counts
            .into_iter()
            .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }
}

const SYNTH_STREAM: u64 = 0;
const SPLIT_STREAM: u64 = 1;

/// Parameters for seeded synthetic EEG: class `m` is a sinusoid at
/// `frequencies[m]` cycles per sample on every channel, scaled per channel by
/// `gains`, plus i.i.d. Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub channels: usize,
    pub length: usize,
    pub frequencies: Vec<f64>,
    pub noise_std: f64,
    pub gains: Vec<f64>,
    pub samples_per_class: usize,
    pub seed: u64,
    #[serde(default)]
    pub split: SplitFractions,
}

impl SynthSpec {
    /// Unit gains, noise 0.1 and class frequencies of 4, 8, 12, ... cycles per
    /// `length` samples.
    pub fn balanced(num_classes: usize, channels: usize, length: usize, samples_per_class: usize, seed: u64) -> Self {
        SynthSpec {
            num_classes,
            channels,
            length,
            frequencies: (0..num_classes).map(|m| 4.0 * (m + 1) as f64 / length as f64).collect(),
            noise_std: 0.1,
            gains: vec![1.0; channels],
            samples_per_class,
            seed,
            split: SplitFractions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.num_classes == 0 || self.channels == 0 || self.length == 0 {
            return bad("num_classes, channels and length must be positive".into());
        }
        if self.frequencies.len() != self.num_classes {
            return bad(format!(
                "{} frequencies for {} classes",
                self.frequencies.len(),
                self.num_classes
            ));
        }
        if self.frequencies.iter().any(|f| !f.is_finite()) {
            return bad("frequencies must be finite".into());
        }
        for (i, a) in self.frequencies.iter().enumerate() {
            if self.frequencies[..i].contains(a) {
                return bad(format!("frequency {a} repeated"));
            }
        }
        if self.gains.len() != self.channels {
            return bad(format!("{} gains for {} channels", self.gains.len(), self.channels));
        }
        if self.gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return bad("gains must be finite and > 0".into());
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        self.split.validate().map_err(|e| Error::InvalidSpec(e.to_string()))
    }
}

/// Generates the dataset described by `spec`. Samples are interleaved by
/// class (sample `i` has label `i % M`); the same spec always yields the same
/// dataset bit for bit.
pub fn synth_dataset(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(SYNTH_STREAM);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidSpec(e.to_string()))?;

    let total = spec.num_classes * spec.samples_per_class;
    let mut samples = Vec::with_capacity(total);
    for i in 0..total {
        let label = i % spec.num_classes;
        let freq = spec.frequencies[label];
        let mut data = Vec::with_capacity(spec.channels * spec.length);
        for &gain in &spec.gains {
            for t in 0..spec.length {
                let clean = gain * (2.0 * PI * freq * t as f64).sin();
                let eps = if spec.noise_std > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                data.push(clean + eps);
            }
        }
        samples.push(EegSample::new(spec.channels, spec.length, data, Some(label))?);
    }
    let mut dataset = Dataset::new(samples, spec.num_classes)?;
    dataset.assign_splits(spec.split, spec.seed)?;
    Ok(dataset)
}
