//! Inverted channel-wise magnitude homogenization.
//!
//! Every channel is divided by its RMS so all channels carry unit power, the
//! whole matrix is min-max squeezed into `[0, 1]`, and the resulting `C x L`
//! image is resized to the configured output size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::EncodedImage;
use crate::signal::{mean_square, EegSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Bilinear,
    Nearest,
}

impl Interpolation {
    pub fn label(self) -> &'static str {
        match self {
            Interpolation::Bilinear => "bilinear",
            Interpolation::Nearest => "nearest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcwmhConfig {
    pub height: usize,
    pub width: usize,
    pub interpolation: Interpolation,
}

impl Default for IcwmhConfig {
    fn default() -> Self {
        IcwmhConfig {
            height: 224,
            width: 224,
            interpolation: Interpolation::Bilinear,
        }
    }
}

impl IcwmhConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidConfig(format!(
                "icwmh output size must be positive, got {}x{}",
                self.height, self.width
            )));
        }
        Ok(())
    }
}

/// Output of [`inverse_magnitude_scale`].
#[derive(Debug, Clone, PartialEq)]
pub struct Homogenized {
    pub sample: EegSample,
    /// Channels with zero power, passed through unchanged.
    pub dead_channels: Vec<usize>,
}

/// Divides each channel by its RMS amplitude.
pub fn inverse_magnitude_scale(sample: &EegSample) -> Homogenized {
    let mut out = sample.clone();
    let mut dead_channels = Vec::new();
    for c in 0..out.channels {
        let row = out.channel_mut(c);
        let rms = mean_square(row).sqrt();
        if rms > 0.0 {
            let inv = rms.recip();
            row.iter_mut().for_each(|v| *v *= inv);
        } else {
            dead_channels.push(c);
        }
    }
    if !dead_channels.is_empty() {
        log::warn!("zero-power channels passed through unscaled: {dead_channels:?}");
    }
    Homogenized {
        sample: out,
        dead_channels,
    }
}

/// Per-channel share `P_c / sum(P)` of total power. All zeros for a silent
/// sample.
pub fn power_shares(sample: &EegSample) -> Vec<f64> {
    let powers: Vec<f64> = sample.rows().map(mean_square).collect();
    let total: f64 = powers.iter().sum();
    if total == 0.0 {
        return vec![0.0; powers.len()];
    }
    powers.into_iter().map(|p| p / total).collect()
}

/// Global min-max map of the whole matrix onto `[0, 1]`; a constant matrix
/// maps to 0.5 everywhere.
pub fn squeeze_to_unit(sample: &EegSample) -> EncodedImage {
    let (lo, hi) = sample
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let pixels = if span > 0.0 {
        sample.data.iter().map(|&v| ((v - lo) / span).clamp(0.0, 1.0)).collect()
    } else {
        vec![0.5; sample.data.len()]
    };
    EncodedImage::from_raw(sample.channels, sample.length, pixels)
}

/// Align-corners source coordinate for output index `d` along an axis
/// resized from `src` to `dst` samples.
fn source_coord(d: usize, src: usize, dst: usize) -> f64 {
    if dst <= 1 || src <= 1 {
        0.0
    } else {
        (d * (src - 1)) as f64 / (dst - 1) as f64
    }
}

pub fn resize(image: &EncodedImage, config: &IcwmhConfig) -> EncodedImage {
    let (sh, sw) = image.shape();
    let (dh, dw) = (config.height, config.width);
    if (sh, sw) == (dh, dw) {
        return image.clone();
    }
    let src = image.as_slice();
    let mut out = Vec::with_capacity(dh * dw);
    match config.interpolation {
        Interpolation::Nearest => {
            let cols: Vec<usize> = (0..dw)
                .map(|d| ((source_coord(d, sw, dw) + 0.5).floor() as usize).min(sw - 1))
                .collect();
            for d in 0..dh {
                let r = ((source_coord(d, sh, dh) + 0.5).floor() as usize).min(sh - 1);
                out.extend(cols.iter().map(|&c| src[r * sw + c]));
            }
        }
        Interpolation::Bilinear => {
            // (left index, right index, right weight) per output column
            let cols: Vec<(usize, usize, f64)> = (0..dw).map(|d| blend_taps(source_coord(d, sw, dw), sw)).collect();
            for d in 0..dh {
                let (r0, r1, fr) = blend_taps(source_coord(d, sh, dh), sh);
                let top = &src[r0 * sw..(r0 + 1) * sw];
                let bottom = &src[r1 * sw..(r1 + 1) * sw];
                for &(c0, c1, fc) in &cols {
                    let t = top[c0] + (top[c1] - top[c0]) * fc;
                    let b = bottom[c0] + (bottom[c1] - bottom[c0]) * fc;
                    out.push((t + (b - t) * fr).clamp(0.0, 1.0));
                }
            }
        }
    }
    EncodedImage::from_raw(dh, dw, out)
}

fn blend_taps(s: f64, len: usize) -> (usize, usize, f64) {
    let i0 = (s.floor() as usize).min(len - 1);
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, s - i0 as f64)
}

/// Full homogenization: scale, squeeze, resize.
pub fn icwmh(sample: &EegSample, config: &IcwmhConfig) -> Result<EncodedImage> {
    config.validate()?;
    let scaled = inverse_magnitude_scale(sample);
    Ok(resize(&squeeze_to_unit(&scaled.sample), config))
}
