//! Independent reference implementations used only by tests.
#![allow(dead_code, clippy::needless_range_loop)]

use eeg_homog::classifier::ClassifierParams;
use eeg_homog::{ce_loss, forward, EncodedImage, GradientField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, h: usize, w: usize) -> EncodedImage {
    EncodedImage::new(h, w, (0..h * w).map(|_| rng.random::<f64>()).collect()).unwrap()
}

pub fn image_from_fn(h: usize, w: usize, f: impl Fn(usize, usize) -> f64) -> EncodedImage {
    let mut v = Vec::with_capacity(h * w);
    for a in 0..h {
        for b in 0..w {
            v.push(f(a, b));
        }
    }
    EncodedImage::new(h, w, v).unwrap()
}

fn px_clamped(img: &EncodedImage, a: isize, b: isize) -> f64 {
    let a = a.clamp(0, img.height() as isize - 1) as usize;
    let b = b.clamp(0, img.width() as isize - 1) as usize;
    img.get(a, b)
}

/// Direct 3x3 Sobel stencils, returning `(g_rows, g_cols)` per pixel.
pub fn sobel_oracle(img: &EncodedImage) -> (Vec<f64>, Vec<f64>) {
    let kc = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let mut ga = Vec::new();
    let mut gb = Vec::new();
    for a in 0..img.height() as isize {
        for b in 0..img.width() as isize {
            let mut sa = 0.0;
            let mut sb = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    let v = px_clamped(img, a + i as isize - 1, b + j as isize - 1);
                    sb += kc[i][j] * v;
                    sa += kc[j][i] * v;
                }
            }
            ga.push(sa);
            gb.push(sb);
        }
    }
    (ga, gb)
}

/// NMS by direct neighbor comparison. The direction is binned by the
/// nearest of 0/45/90/135/180 degrees on the folded `atan2` angle.
pub fn nms_oracle(field: &GradientField) -> Vec<f64> {
    let (h, w) = field.shape();
    let mag = field.magnitude();
    let at = |a: isize, b: isize| -> f64 {
        if a < 0 || b < 0 || a >= h as isize || b >= w as isize {
            0.0
        } else {
            mag[a as usize * w + b as usize]
        }
    };
    let mut kept = vec![0.0; h * w];
    for a in 0..h {
        for b in 0..w {
            let i = a * w + b;
            let mut deg = field.grad_rows()[i].atan2(field.grad_cols()[i]).to_degrees();
            if deg < 0.0 {
                deg += 180.0;
            }
            let centers = [0.0, 45.0, 90.0, 135.0, 180.0];
            let nearest = centers
                .iter()
                .enumerate()
                .min_by(|x, y| (deg - x.1).abs().partial_cmp(&(deg - y.1).abs()).unwrap())
                .unwrap()
                .0;
            let (da, db): (isize, isize) = match nearest {
                0 | 4 => (0, 1),
                1 => (1, 1),
                2 => (1, 0),
                _ => (1, -1),
            };
            let (ai, bi) = (a as isize, b as isize);
            let m = mag[i];
            if m >= at(ai + da, bi + db) && m >= at(ai - da, bi - db) {
                kept[i] = m;
            }
        }
    }
    let max = kept.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        let inv = 1.0 / max;
        kept.iter_mut().for_each(|v| *v = (*v * inv).min(1.0));
    }
    kept
}

/// Hysteresis as a fixed point: grow the strong set by weak 8-neighbors until
/// nothing changes.
pub fn hysteresis_oracle(img: &EncodedImage, low: f64, high: f64) -> Vec<f64> {
    let (h, w) = (img.height(), img.width());
    let mut on: Vec<bool> = img.as_slice().iter().map(|v| v * 255.0 >= high).collect();
    loop {
        let mut changed = false;
        for a in 0..h {
            for b in 0..w {
                if on[a * w + b] || img.get(a, b) * 255.0 < low {
                    continue;
                }
                let touches = (a.saturating_sub(1)..=(a + 1).min(h - 1))
                    .any(|x| (b.saturating_sub(1)..=(b + 1).min(w - 1)).any(|y| on[x * w + y]));
                if touches {
                    on[a * w + b] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    on.into_iter().map(|x| if x { 1.0 } else { 0.0 }).collect()
}

/// Adaptive mean threshold from an explicit `block x block` window sum.
pub fn adaptive_mean_oracle(img: &EncodedImage, block: usize, c: f64) -> Vec<f64> {
    let half = (block / 2) as isize;
    let mut out = Vec::new();
    for a in 0..img.height() as isize {
        for b in 0..img.width() as isize {
            let mut sum = 0.0;
            for i in -half..=half {
                for j in -half..=half {
                    sum += px_clamped(img, a + i, b + j);
                }
            }
            let t = sum / (block * block) as f64 - c / 255.0;
            out.push(if img.get(a as usize, b as usize) < t { 1.0 } else { 0.0 });
        }
    }
    out
}

/// Mean loss over a batch, evaluated directly.
pub fn mean_loss(params: &ClassifierParams, batch: &[(Vec<f64>, usize)]) -> f64 {
    batch
        .iter()
        .map(|(x, y)| ce_loss(&forward(params, x).unwrap(), *y).unwrap())
        .sum::<f64>()
        / batch.len() as f64
}

/// Central finite differences of [`mean_loss`] over weights then biases.
pub fn fd_gradient(params: &ClassifierParams, batch: &[(Vec<f64>, usize)], h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let nw = params.weights().len();
    for k in 0..nw + params.bias().len() {
        let mut plus = params.clone();
        let mut minus = params.clone();
        if k < nw {
            plus.weights_mut()[k] += h;
            minus.weights_mut()[k] -= h;
        } else {
            plus.bias_mut()[k - nw] += h;
            minus.bias_mut()[k - nw] -= h;
        }
        out.push((mean_loss(&plus, batch) - mean_loss(&minus, batch)) / (2.0 * h));
    }
    out
}

pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
