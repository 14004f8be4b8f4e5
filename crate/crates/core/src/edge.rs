//! Variant feature extraction: Gaussian smoothing, Sobel gradients,
//! non-maximum suppression with hysteresis (Canny mode), and adaptive
//! mean/Gaussian thresholding.
//!
//! All neighborhood operations replicate the border pixel. Canny thresholds
//! are on the 8-bit scale and are compared against `pixel * 255`.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{EdgeMap, EncodedImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    Canny,
    AdaptiveMean,
    AdaptiveGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdaptiveMethod {
    Mean,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdgeConfig {
    pub mode: EdgeMode,
    pub blur_kernel: usize,
    pub canny_low: f64,
    pub canny_high: f64,
    pub adaptive_block: usize,
    pub adaptive_c: f64,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        EdgeConfig {
            mode: EdgeMode::Canny,
            blur_kernel: 3,
            canny_low: 50.0,
            canny_high: 120.0,
            adaptive_block: 11,
            adaptive_c: 2.0,
        }
    }
}

impl EdgeConfig {
    pub fn validate(&self) -> Result<()> {
        check_kernel(self.blur_kernel)?;
        check_thresholds(self.canny_low, self.canny_high)?;
        check_block(self.adaptive_block)?;
        if !self.adaptive_c.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "adaptive_c must be finite, got {}",
                self.adaptive_c
            )));
        }
        Ok(())
    }
}

fn check_kernel(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::InvalidKernel(k));
    }
    Ok(())
}

fn check_block(block: usize) -> Result<()> {
    if block < 3 || block.is_multiple_of(2) {
        return Err(Error::InvalidBlock(block));
    }
    Ok(())
}

fn check_thresholds(low: f64, high: f64) -> Result<()> {
    if !(low >= 0.0 && low < high && high <= 255.0) {
        return Err(Error::InvalidThresholds { low, high });
    }
    Ok(())
}

/// Standard deviation used for a `k`-tap Gaussian kernel.
pub fn sigma_for_kernel(k: usize) -> f64 {
    0.3 * ((k as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian weights of odd length `k`.
pub fn gaussian_kernel(k: usize) -> Result<Vec<f64>> {
    check_kernel(k)?;
    let sigma = sigma_for_kernel(k);
    let half = (k / 2) as f64;
    let raw: Vec<f64> = (0..k)
        .map(|i| {
            let x = i as f64 - half;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / sum).collect())
}

/// Separable convolution with a symmetric odd-length kernel, replicate border.
fn convolve_separable(src: &[f64], height: usize, width: usize, kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut tmp = vec![0.0; src.len()];
    for a in 0..height {
        let row = &src[a * width..(a + 1) * width];
        for b in 0..width {
            let mut acc = 0.0;
            for (t, w) in kernel.iter().enumerate() {
                acc += w * row[clamp(b as isize + t as isize - half, width)];
            }
            tmp[a * width + b] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for a in 0..height {
        for (t, w) in kernel.iter().enumerate() {
            let r = clamp(a as isize + t as isize - half, height);
            let from = &tmp[r * width..(r + 1) * width];
            let to = &mut out[a * width..(a + 1) * width];
            for (o, v) in to.iter_mut().zip(from) {
                *o += w * v;
            }
        }
    }
    out
}

pub fn gaussian_blur(image: &EncodedImage, k: usize) -> Result<EncodedImage> {
    let kernel = gaussian_kernel(k)?;
    if k == 1 {
        return Ok(image.clone());
    }
    let (h, w) = image.shape();
    let mut out = convolve_separable(image.as_slice(), h, w, &kernel);
    out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(EncodedImage::from_raw(h, w, out))
}

/// Per-pixel Sobel gradients with derived magnitude and direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    height: usize,
    width: usize,
    /// Derivative along the row index.
    grad_rows: Vec<f64>,
    /// Derivative along the column index.
    grad_cols: Vec<f64>,
    magnitude: Vec<f64>,
    direction: Vec<f64>,
}

/// `atan(g_rows / g_cols)` folded into `(-pi/2, pi/2]`, with `pi/2` for a pure
/// row gradient and 0 when both components vanish.
pub fn gradient_direction(g_rows: f64, g_cols: f64) -> f64 {
    if g_cols == 0.0 {
        return if g_rows == 0.0 { 0.0 } else { FRAC_PI_2 };
    }
    let theta = (g_rows / g_cols).atan();
    if theta <= -FRAC_PI_2 {
        FRAC_PI_2
    } else {
        theta
    }
}

impl GradientField {
    pub fn from_components(height: usize, width: usize, grad_rows: Vec<f64>, grad_cols: Vec<f64>) -> Result<Self> {
        let n = height * width;
        if grad_rows.len() != n || grad_cols.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width} field needs {n} gradients per axis, found {} and {}",
                grad_rows.len(),
                grad_cols.len()
            )));
        }
        if grad_rows.iter().chain(&grad_cols).any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite gradient component".into()));
        }
        let magnitude = grad_rows.iter().zip(&grad_cols).map(|(ga, gb)| ga.hypot(*gb)).collect();
        let direction = grad_rows
            .iter()
            .zip(&grad_cols)
            .map(|(ga, gb)| gradient_direction(*ga, *gb))
            .collect();
        Ok(GradientField {
            height,
            width,
            grad_rows,
            grad_cols,
            magnitude,
            direction,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn grad_rows(&self) -> &[f64] {
        &self.grad_rows
    }

    pub fn grad_cols(&self) -> &[f64] {
        &self.grad_cols
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }
}

/// 3x3 Sobel gradients along both axes.
pub fn gradient_field(image: &EncodedImage) -> Result<GradientField> {
    let (h, w) = image.shape();
    if h < 3 || w < 3 {
        return Err(Error::ImageTooSmall { height: h, width: w });
    }
    let px = image.as_slice();
    let at = |a: isize, b: isize| px[a.clamp(0, h as isize - 1) as usize * w + b.clamp(0, w as isize - 1) as usize];

    let mut g_rows = Vec::with_capacity(h * w);
    let mut g_cols = Vec::with_capacity(h * w);
    for a in 0..h as isize {
        for b in 0..w as isize {
            let gb = (at(a - 1, b + 1) - at(a - 1, b - 1))
                + 2.0 * (at(a, b + 1) - at(a, b - 1))
                + (at(a + 1, b + 1) - at(a + 1, b - 1));
            let ga = (at(a + 1, b - 1) - at(a - 1, b - 1))
                + 2.0 * (at(a + 1, b) - at(a - 1, b))
                + (at(a + 1, b + 1) - at(a - 1, b + 1));
            g_rows.push(ga);
            g_cols.push(gb);
        }
    }
    GradientField::from_components(h, w, g_rows, g_cols)
}

/// Gradient direction quantized to 45 degree steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionBin {
    /// 0 degrees: gradient along the columns.
    Deg0,
    Deg45,
    /// 90 degrees: gradient along the rows.
    Deg90,
    Deg135,
}

impl DirectionBin {
    /// Bins by rounding `|theta|` to the nearest multiple of 45 degrees (halves
    /// round up); the sign of `theta` separates 45 from 135.
    pub fn quantize(theta: f64) -> Self {
        let step = (theta.abs().to_degrees() / 45.0 + 0.5).floor();
        match step as u32 {
            0 => DirectionBin::Deg0,
            1 if theta > 0.0 => DirectionBin::Deg45,
            1 => DirectionBin::Deg135,
            _ => DirectionBin::Deg90,
        }
    }

    /// `(row, col)` step towards one of the two neighbors compared in NMS;
    /// the other is the negation.
    pub fn offset(self) -> (isize, isize) {
        match self {
            DirectionBin::Deg0 => (0, 1),
            DirectionBin::Deg45 => (1, 1),
            DirectionBin::Deg90 => (1, 0),
            DirectionBin::Deg135 => (1, -1),
        }
    }
}

/// Keeps a pixel's magnitude iff it is `>=` both neighbors along its quantized
/// gradient direction (off-image neighbors count as 0), then rescales so the
/// largest survivor is 1.
pub fn non_max_suppress(field: &GradientField) -> EncodedImage {
    let (h, w) = field.shape();
    let mag = field.magnitude();
    let sample = |a: isize, b: isize| {
        if a < 0 || b < 0 || a >= h as isize || b >= w as isize {
            0.0
        } else {
            mag[a as usize * w + b as usize]
        }
    };

    let mut out = vec![0.0; h * w];
    let mut peak = 0.0f64;
    for a in 0..h {
        for b in 0..w {
            let i = a * w + b;
            let m = mag[i];
            let (da, db) = DirectionBin::quantize(field.direction()[i]).offset();
            let (a, b) = (a as isize, b as isize);
            if m >= sample(a + da, b + db) && m >= sample(a - da, b - db) {
                out[i] = m;
                peak = peak.max(m);
            }
        }
    }
    if peak > 0.0 {
        let inv = peak.recip();
        out.iter_mut().for_each(|v| *v = (*v * inv).min(1.0));
    }
    EncodedImage::from_raw(h, w, out)
}

/// Two-threshold labeling: pixels with `v * 255 >= high` are edges, and pixels
/// with `v * 255 >= low` become edges when 8-connected to one.
pub fn hysteresis(nms: &EncodedImage, low: f64, high: f64) -> Result<EdgeMap> {
    check_thresholds(low, high)?;
    let (h, w) = nms.shape();
    let px = nms.as_slice();
    let mut out = vec![0.0; h * w];
    let mut queue = VecDeque::new();
    for (i, v) in px.iter().enumerate() {
        if v * 255.0 >= high {
            out[i] = 1.0;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (a, b) = ((i / w) as isize, (i % w) as isize);
        for da in -1..=1isize {
            for db in -1..=1isize {
                let (na, nb) = (a + da, b + db);
                if na < 0 || nb < 0 || na >= h as isize || nb >= w as isize {
                    continue;
                }
                let j = na as usize * w + nb as usize;
                if out[j] == 0.0 && px[j] * 255.0 >= low {
                    out[j] = 1.0;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(EdgeMap::from_raw(h, w, out))
}

/// Local-contrast binarization: with `T = local_mean - c / 255`, a pixel is
/// marked 1 iff it lies strictly below `T`. The local mean is a `block x
/// block` box average (`Mean`) or Gaussian-weighted average (`Gaussian`).
pub fn adaptive_threshold(image: &EncodedImage, method: AdaptiveMethod, block: usize, c: f64) -> Result<EdgeMap> {
    check_block(block)?;
    let kernel = match method {
        AdaptiveMethod::Mean => vec![1.0 / block as f64; block],
        AdaptiveMethod::Gaussian => gaussian_kernel(block)?,
    };
    let (h, w) = image.shape();
    let local = convolve_separable(image.as_slice(), h, w, &kernel);
    let offset = c / 255.0;
    let out = image
        .as_slice()
        .iter()
        .zip(&local)
        .map(|(v, m)| if *v < m - offset { 1.0 } else { 0.0 })
        .collect();
    Ok(EdgeMap::from_raw(h, w, out))
}

pub fn detect_edges(image: &EncodedImage, config: &EdgeConfig) -> Result<EdgeMap> {
    config.validate()?;
    let smoothed = gaussian_blur(image, config.blur_kernel)?;
    match config.mode {
        EdgeMode::Canny => {
            let field = gradient_field(&smoothed)?;
            hysteresis(&non_max_suppress(&field), config.canny_low, config.canny_high)
        }
        EdgeMode::AdaptiveMean => adaptive_threshold(
            &smoothed,
            AdaptiveMethod::Mean,
            config.adaptive_block,
            config.adaptive_c,
        ),
        EdgeMode::AdaptiveGaussian => adaptive_threshold(
            &smoothed,
            AdaptiveMethod::Gaussian,
            config.adaptive_block,
            config.adaptive_c,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> EncodedImage {
        let mut v = Vec::with_capacity(h * w);
        for a in 0..h {
            for b in 0..w {
                v.push(f(a, b));
            }
        }
        EncodedImage::new(h, w, v).unwrap()
    }

    #[test]
    fn sigma_convention() {
        assert!((sigma_for_kernel(3) - 0.8).abs() < 1e-15);
        assert!((sigma_for_kernel(5) - 1.1).abs() < 1e-15);
        assert!((sigma_for_kernel(7) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn kernels_sum_to_one() {
        for k in (1..=31).step_by(2) {
            let s: f64 = gaussian_kernel(k).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(matches!(gaussian_kernel(4), Err(Error::InvalidKernel(4))));
        assert!(matches!(gaussian_kernel(0), Err(Error::InvalidKernel(0))));
    }

    #[test]
    fn blur_constant_and_identity() {
        let c = EncodedImage::filled(6, 5, 0.37).unwrap();
        for k in [1, 3, 5, 7] {
            let out = gaussian_blur(&c, k).unwrap();
            assert!(out.as_slice().iter().all(|v| (v - 0.37).abs() < 1e-12));
        }
        let x = img(4, 4, |a, b| ((a * 4 + b) as f64) / 15.0);
        assert_eq!(gaussian_blur(&x, 1).unwrap(), x);
    }

    #[test]
    fn blur_impulse_is_outer_product() {
        let x = img(7, 7, |a, b| if a == 3 && b == 3 { 1.0 } else { 0.0 });
        let out = gaussian_blur(&x, 3).unwrap();
        let k = gaussian_kernel(3).unwrap();
        // direct 2-D convolution at each pixel of the 3x3 neighborhood
        for (i, ki) in k.iter().enumerate() {
            for (j, kj) in k.iter().enumerate() {
                assert!((out.get(2 + i, 2 + j) - ki * kj).abs() < 1e-15);
            }
        }
        assert_eq!(out.get(0, 0), 0.0);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = gradient_field(&EncodedImage::filled(4, 5, 0.2).unwrap()).unwrap();
        assert!(f.magnitude().iter().all(|&m| m == 0.0));
        assert!(f.direction().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn gradient_of_column_ramp() {
        let w = 6;
        let f = gradient_field(&img(5, w, |_, b| b as f64 / (w - 1) as f64)).unwrap();
        for a in 1..4 {
            for b in 1..w - 1 {
                let i = a * w + b;
                assert_eq!(f.direction()[i], 0.0);
                assert!((f.magnitude()[i] - 8.0 / 5.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_rejects_small_images() {
        let x = EncodedImage::filled(2, 5, 0.0).unwrap();
        assert!(matches!(
            gradient_field(&x),
            Err(Error::ImageTooSmall { height: 2, width: 5 })
        ));
    }

    #[test]
    fn direction_conventions() {
        assert_eq!(gradient_direction(0.0, 0.0), 0.0);
        assert_eq!(gradient_direction(1.0, 0.0), FRAC_PI_2);
        assert_eq!(gradient_direction(-1.0, 0.0), FRAC_PI_2);
        assert_eq!(gradient_direction(-1e300, 1e-300), FRAC_PI_2);
        assert!((gradient_direction(1.0, 1.0) - FRAC_PI_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn quantization_bins() {
        let d = |deg: f64| DirectionBin::quantize(deg.to_radians());
        assert_eq!(d(0.0), DirectionBin::Deg0);
        assert_eq!(d(22.4), DirectionBin::Deg0);
        assert_eq!(d(-22.4), DirectionBin::Deg0);
        assert_eq!(d(30.0), DirectionBin::Deg45);
        assert_eq!(d(-30.0), DirectionBin::Deg135);
        assert_eq!(d(80.0), DirectionBin::Deg90);
        assert_eq!(d(-80.0), DirectionBin::Deg90);
        assert_eq!(d(90.0), DirectionBin::Deg90);
    }

    #[test]
    fn nms_zero_and_constant_fields() {
        let zero = GradientField::from_components(3, 3, vec![0.0; 9], vec![0.0; 9]).unwrap();
        assert!(non_max_suppress(&zero).as_slice().iter().all(|&v| v == 0.0));
        let flat = GradientField::from_components(4, 4, vec![0.5; 16], vec![0.5; 16]).unwrap();
        assert!(non_max_suppress(&flat).as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn hysteresis_trivial_cases() {
        let hi = EncodedImage::filled(3, 3, 130.0 / 255.0).unwrap();
        assert_eq!(hysteresis(&hi, 50.0, 120.0).unwrap().count_nonzero(), 9);
        let lo = EncodedImage::filled(3, 3, 40.0 / 255.0).unwrap();
        assert_eq!(hysteresis(&lo, 50.0, 120.0).unwrap().count_nonzero(), 0);
        assert!(matches!(
            hysteresis(&lo, 120.0, 50.0),
            Err(Error::InvalidThresholds { .. })
        ));
        assert!(hysteresis(&lo, 50.0, 256.0).is_err());
        assert!(hysteresis(&lo, -1.0, 20.0).is_err());
    }

    #[test]
    fn hysteresis_keeps_connected_chain_only() {
        let strong = 200.0 / 255.0;
        let weak = 80.0 / 255.0;
        let mut v = vec![0.0; 25];
        v[0] = strong; // (0,0)
        v[6] = weak; // (1,1) diagonal neighbor
        v[12] = weak; // (2,2)
        v[13] = weak; // (2,3)
        v[24] = weak; // (4,4) isolated
        let e = hysteresis(&EncodedImage::new(5, 5, v).unwrap(), 50.0, 120.0).unwrap();
        assert_eq!(e.support(), vec![(0, 0), (1, 1), (2, 2), (2, 3)]);
    }

    #[test]
    fn adaptive_constant_image_is_empty() {
        let x = EncodedImage::filled(8, 8, 0.6).unwrap();
        for method in [AdaptiveMethod::Mean, AdaptiveMethod::Gaussian] {
            assert_eq!(adaptive_threshold(&x, method, 3, 2.0).unwrap().count_nonzero(), 0);
            assert_eq!(adaptive_threshold(&x, method, 3, 0.0).unwrap().count_nonzero(), 0);
        }
        assert!(matches!(
            adaptive_threshold(&x, AdaptiveMethod::Mean, 4, 2.0),
            Err(Error::InvalidBlock(4))
        ));
        assert!(matches!(
            adaptive_threshold(&x, AdaptiveMethod::Mean, 1, 2.0),
            Err(Error::InvalidBlock(1))
        ));
    }

    #[test]
    fn adaptive_marks_dark_side_of_step() {
        let x = img(5, 10, |_, b| if b < 5 { 0.0 } else { 1.0 });
        let e = adaptive_threshold(&x, AdaptiveMethod::Mean, 3, 2.0).unwrap();
        for a in 0..5 {
            for b in 0..10 {
                assert_eq!(e.get(a, b), if b == 4 { 1.0 } else { 0.0 }, "({a},{b})");
            }
        }
    }

    #[test]
    fn uniform_image_has_no_edges_in_any_mode() {
        let x = EncodedImage::filled(16, 16, 0.5).unwrap();
        for mode in [EdgeMode::Canny, EdgeMode::AdaptiveMean, EdgeMode::AdaptiveGaussian] {
            let cfg = EdgeConfig {
                mode,
                ..EdgeConfig::default()
            };
            assert_eq!(detect_edges(&x, &cfg).unwrap().count_nonzero(), 0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(EdgeConfig::default().validate().is_ok());
        let bad = EdgeConfig {
            blur_kernel: 4,
            ..EdgeConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidKernel(4))));
        let bad = EdgeConfig {
            canny_low: 130.0,
            ..EdgeConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = EdgeConfig {
            adaptive_block: 2,
            ..EdgeConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
