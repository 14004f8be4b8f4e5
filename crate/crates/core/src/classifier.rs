//! Linear softmax head trained with cross-entropy and Adam.
//!
//! Weights are stored row-major as a `dim x classes` matrix so that
//! `weights[i * classes + m]` connects feature `i` to class `m`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{EegSample, Split};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    dim: usize,
    classes: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ClassifierParams {
    pub fn zeros(dim: usize, classes: usize) -> Self {
        ClassifierParams {
            dim,
            classes,
            weights: vec![0.0; dim * classes],
            bias: vec![0.0; classes],
        }
    }

    /// Weights and biases drawn uniformly from `[-scale, scale)`.
    pub fn uniform(dim: usize, classes: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| scale * (2.0 * rng.random::<f64>() - 1.0)).collect() };
        let weights = draw(dim * classes);
        let bias = draw(classes);
        ClassifierParams {
            dim,
            classes,
            weights,
            bias,
        }
    }

    pub fn from_parts(dim: usize, classes: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if classes == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if weights.len() != dim * classes {
            return Err(Error::DimensionMismatch {
                expected: dim * classes,
                found: weights.len(),
            });
        }
        if bias.len() != classes {
            return Err(Error::DimensionMismatch {
                expected: classes,
                found: bias.len(),
            });
        }
        if let Some(pos) = weights.iter().chain(&bias).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { channel: 0, index: pos });
        }
        Ok(ClassifierParams {
            dim,
            classes,
            weights,
            bias,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }
}

fn check_dim(params: &ClassifierParams, features: &[f64]) -> Result<()> {
    if features.len() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            found: features.len(),
        });
    }
    Ok(())
}

/// `logits = W^T x + b`
pub fn forward(params: &ClassifierParams, features: &[f64]) -> Result<Vec<f64>> {
    check_dim(params, features)?;
    let m = params.classes;
    let mut logits = params.bias.clone();
    for (x, row) in features.iter().zip(params.weights.chunks_exact(m)) {
        if *x == 0.0 {
            continue;
        }
        for (z, w) in logits.iter_mut().zip(row) {
            *z += w * x;
        }
    }
    Ok(logits)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[label]`, evaluated as `logsumexp(logits) - logits[label]`.
pub fn ce_loss(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            num_classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    Ok((lse - logits[label]).max(0.0))
}

/// Index of the largest logit; ties go to the lowest index.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, z) in logits.iter().enumerate() {
        if *z > logits[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Mean loss over the batch at the evaluated parameters.
    pub loss: f64,
}

/// Gradient of the mean cross-entropy over `batch` with respect to weights
/// and bias. Samples are accumulated in batch order.
pub fn grad(params: &ClassifierParams, batch: &[(&[f64], usize)]) -> Result<Gradient> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let m = params.classes;
    let mut gw = vec![0.0; params.weights.len()];
    let mut gb = vec![0.0; m];
    let mut loss = 0.0;
    let mut delta = vec![0.0; m];
    for &(x, label) in batch {
        let logits = forward(params, x)?;
        loss += ce_loss(&logits, label)?;
        for (d, p) in delta.iter_mut().zip(softmax(&logits)) {
            *d = p;
        }
        delta[label] -= 1.0;
        for (g, d) in gb.iter_mut().zip(&delta) {
            *g += d;
        }
        for (xi, row) in x.iter().zip(gw.chunks_exact_mut(m)) {
            if *xi == 0.0 {
                continue;
            }
            for (g, d) in row.iter_mut().zip(&delta) {
                *g += xi * d;
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    gw.iter_mut().for_each(|g| *g *= inv);
    gb.iter_mut().for_each(|g| *g *= inv);
    Ok(Gradient {
        weights: gw,
        bias: gb,
        loss: loss * inv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 9e-4,
            batch_size: 64,
            epochs: 100,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        // A zero rate is accepted: it freezes the parameters.
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad(format!("learning_rate must be >= 0, got {}", self.learning_rate));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be >= 1".into());
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("Adam epsilon must be > 0".into());
        }
        Ok(())
    }
}

/// Feature vectors with labels and split tags, ready for training.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub splits: Vec<Split>,
    pub num_classes: usize,
}

impl LabeledFeatures {
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.features.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.len();
        if self.labels.len() != n || self.splits.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n} feature vectors, {} labels, {} split tags",
                self.labels.len(),
                self.splits.len()
            )));
        }
        let d = self.dim();
        if let Some(bad) = self.features.iter().find(|f| f.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        if let Some(&label) = self.labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: self.num_classes,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Parameters after the epoch with the best validation accuracy (earliest
    /// on ties).
    pub params: ClassifierParams,
    pub best_epoch: usize,
    pub metrics: Vec<EpochMetrics>,
}

impl TrainOutcome {
    pub fn best_val_acc(&self) -> f64 {
        self.metrics[self.best_epoch - 1].val_acc
    }
}

struct Adam {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(config: &TrainConfig, len: usize) -> Self {
        Adam {
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            lr: config.learning_rate,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    /// `params` and `grads` are walked in lockstep with the moment buffers.
    fn update<'a>(&mut self, params: impl Iterator<Item = &'a mut f64>, grads: impl Iterator<Item = &'a f64>) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, g), m), v) in params.zip(grads).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Mini-batch Adam from zero-initialized parameters. The train split is
/// reshuffled every epoch from a generator seeded with `config.seed`, so
/// identical inputs give identical trajectories.
pub fn train(data: &LabeledFeatures, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    data.validate()?;
    let train_idx = data.indices(Split::Train);
    let val_idx = data.indices(Split::Val);
    if train_idx.is_empty() {
        return Err(Error::EmptySplit("train".into()));
    }
    if val_idx.is_empty() {
        return Err(Error::EmptySplit("val".into()));
    }

    let mut params = ClassifierParams::zeros(data.dim(), data.num_classes);
    let mut adam = Adam::new(config, params.weights.len() + params.bias.len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order = train_idx;
    let mut metrics = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, ClassifierParams)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk
                .iter()
                .map(|&i| (data.features[i].as_slice(), data.labels[i]))
                .collect();
            let g = grad(&params, &batch)?;
            loss_sum += g.loss * chunk.len() as f64;
            let ClassifierParams { weights, bias, .. } = &mut params;
            adam.update(
                weights.iter_mut().chain(bias.iter_mut()),
                g.weights.iter().chain(&g.bias),
            );
        }
        let val_acc = accuracy_on(&params, data, &val_idx)?;
        metrics.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            val_acc,
        });
        if best.as_ref().is_none_or(|(_, acc, _)| val_acc > *acc) {
            best = Some((epoch, val_acc, params.clone()));
        }
    }

    let (best_epoch, _, params) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        params,
        best_epoch,
        metrics,
    })
}

pub fn predict(params: &ClassifierParams, features: &[f64]) -> Result<usize> {
    Ok(argmax(&forward(params, features)?))
}

/// Fraction of `(features, label)` pairs whose predicted class equals the
/// label.
pub fn evaluate<'a>(params: &ClassifierParams, samples: impl IntoIterator<Item = (&'a [f64], usize)>) -> Result<f64> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for (x, label) in samples {
        if predict(params, x)? == label {
            correct += 1;
        }
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptySplit("no samples to evaluate".into()));
    }
    Ok(correct as f64 / total as f64)
}

fn accuracy_on(params: &ClassifierParams, data: &LabeledFeatures, idx: &[usize]) -> Result<f64> {
    evaluate(
        params,
        idx.iter().map(|&i| (data.features[i].as_slice(), data.labels[i])),
    )
}

/// Accuracy on one split of `data`.
pub fn evaluate_split(params: &ClassifierParams, data: &LabeledFeatures, split: Split) -> Result<f64> {
    let idx = data.indices(split);
    if idx.is_empty() {
        return Err(Error::EmptySplit(split.as_str().into()));
    }
    accuracy_on(params, data, &idx)
}

/// Largest pairwise L2 distance between per-channel blocks of the loss
/// gradient, with the raw channel-major signal as the feature vector.
pub fn gradient_dispersion(params: &ClassifierParams, sample: &EegSample) -> Result<f64> {
    let label = sample.label.ok_or(Error::Unlabeled)?;
    if params.dim != sample.channels * sample.length {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            found: sample.channels * sample.length,
        });
    }
    let g = grad(params, &[(sample.data.as_slice(), label)])?;
    let block = sample.length * params.classes;
    let blocks: Vec<&[f64]> = g.weights.chunks_exact(block).collect();
    let mut worst = 0.0f64;
    for (h, gh) in blocks.iter().enumerate() {
        for gk in &blocks[h + 1..] {
            let d2: f64 = gh.iter().zip(gk.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            worst = worst.max(d2.sqrt());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_give_zero_logits() {
        let p = ClassifierParams::zeros(4, 3);
        assert_eq!(forward(&p, &[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.0; 3]);
        assert!(matches!(
            forward(&p, &[1.0]),
            Err(Error::DimensionMismatch { expected: 4, found: 1 })
        ));
    }

    #[test]
    fn identity_weights_pick_feature() {
        let mut w = vec![0.0; 9];
        for i in 0..3 {
            w[i * 3 + i] = 1.0;
        }
        let p = ClassifierParams::from_parts(3, 3, w, vec![0.0; 3]).unwrap();
        assert_eq!(forward(&p, &[0.0, 1.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn forward_matches_scalar_loop() {
        let p = ClassifierParams::uniform(7, 3, 1.0, 9);
        let x: Vec<f64> = (0..7).map(|i| (i as f64 * 0.37).sin()).collect();
        let z = forward(&p, &x).unwrap();
        for m in 0..3 {
            let mut acc = p.bias()[m];
            for i in 0..7 {
                acc += p.weights()[i * 3 + m] * x[i];
            }
            assert!((z[m] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_values() {
        assert!((ce_loss(&[0.0; 40], 7).unwrap() - 40f64.ln()).abs() < 1e-12);
        let l = ce_loss(&[1000.0, 0.0], 0).unwrap();
        assert!(l.is_finite() && l < 1e-12);
        // log(1 + e^-1 + e^-2), evaluated separately
        let expected = 0.407_605_964_444_380_3;
        assert!((ce_loss(&[1.0, 2.0, 3.0], 2).unwrap() - expected).abs() < 1e-12);
        assert!(matches!(ce_loss(&[0.0, 0.0], 2), Err(Error::LabelOutOfRange { .. })));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn confident_predictions_have_vanishing_gradient() {
        let mut p = ClassifierParams::zeros(2, 2);
        p.bias_mut()[1] = 200.0;
        let g = grad(&p, &[(&[0.5, -0.5][..], 1)]).unwrap();
        assert!(g.weights.iter().chain(&g.bias).all(|v| v.abs() < 1e-80));
    }

    #[test]
    fn batch_gradient_is_mean() {
        let p = ClassifierParams::uniform(3, 2, 0.5, 4);
        let xs = [vec![0.1, 0.2, -0.3], vec![1.0, -1.0, 0.5], vec![0.0, 0.7, 0.2]];
        let labels = [0, 1, 1];
        let batch: Vec<(&[f64], usize)> = xs.iter().map(|x| x.as_slice()).zip(labels).collect();
        let full = grad(&p, &batch).unwrap();
        let parts: Vec<Gradient> = batch
            .iter()
            .map(|b| grad(&p, std::slice::from_ref(b)).unwrap())
            .collect();
        for i in 0..full.weights.len() {
            let mean = parts.iter().map(|g| g.weights[i]).sum::<f64>() / 3.0;
            assert!((full.weights[i] - mean).abs() < 1e-12);
        }
        assert!(matches!(grad(&p, &[]), Err(Error::EmptyBatch)));
    }

    #[test]
    fn evaluate_counts_hits() {
        let p = ClassifierParams::from_parts(1, 2, vec![1.0, -1.0], vec![0.0, 0.0]).unwrap();
        let xs = [[1.0], [-1.0], [2.0]];
        let acc = evaluate(&p, xs.iter().map(|x| x.as_slice()).zip([0, 1, 1])).unwrap();
        assert!((acc - 2.0 / 3.0).abs() < 1e-15);
        assert!(evaluate(&p, std::iter::empty()).is_err());
    }

    fn toy_data() -> LabeledFeatures {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut splits = Vec::new();
        for i in 0..40 {
            let label = i % 2;
            let sign = if label == 0 { 1.0 } else { -1.0 };
            features.push(vec![sign * (1.0 + i as f64 * 0.01), 0.3]);
            labels.push(label);
            splits.push(if i < 30 { Split::Train } else { Split::Val });
        }
        LabeledFeatures {
            features,
            labels,
            splits,
            num_classes: 2,
        }
    }

    #[test]
    fn zero_learning_rate_freezes_params() {
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 5,
            ..TrainConfig::default()
        };
        let out = train(&toy_data(), &cfg).unwrap();
        assert_eq!(out.params, ClassifierParams::zeros(2, 2));
    }

    #[test]
    fn training_is_reproducible_and_learns() {
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 8,
            epochs: 20,
            seed: 3,
            ..TrainConfig::default()
        };
        let a = train(&toy_data(), &cfg).unwrap();
        let b = train(&toy_data(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.best_val_acc(), 1.0);
    }

    #[test]
    fn training_requires_splits() {
        let mut d = toy_data();
        d.splits = vec![Split::Train; 40];
        assert!(matches!(train(&d, &TrainConfig::default()), Err(Error::EmptySplit(_))));
        let bad = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&toy_data(), &bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn dispersion_edge_cases() {
        let same = EegSample::from_rows(vec![vec![0.5, -0.2, 0.1]; 2], Some(1)).unwrap();
        let p = ClassifierParams::uniform(6, 2, 0.1, 1);
        assert_eq!(gradient_dispersion(&p, &same).unwrap(), 0.0);

        let single = EegSample::from_rows(vec![vec![0.5, -0.2, 0.1]], Some(0)).unwrap();
        let p1 = ClassifierParams::uniform(3, 2, 0.1, 1);
        assert_eq!(gradient_dispersion(&p1, &single).unwrap(), 0.0);

        assert!(matches!(
            gradient_dispersion(&p1, &same),
            Err(Error::DimensionMismatch { .. })
        ));
        let unlabeled = EegSample::from_rows(vec![vec![0.5, -0.2, 0.1]], None).unwrap();
        assert!(matches!(gradient_dispersion(&p1, &unlabeled), Err(Error::Unlabeled)));
    }
}
