//! Per-sample preprocessing chain and dataset featurization.

use rayon::prelude::*;

use crate::classifier::LabeledFeatures;
use crate::edge::{detect_edges, EdgeConfig};
use crate::error::{Error, Result};
use crate::fevsc::{assemble, EnrichedTensor};
use crate::icwmh::{icwmh, IcwmhConfig};
use crate::image::{EdgeMap, EncodedImage};
use crate::signal::{Dataset, EegSample};

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub image: EncodedImage,
    pub edges: EdgeMap,
    pub tensor: EnrichedTensor,
}

/// homogenize -> detect edges -> stack.
pub fn encode_sample(sample: &EegSample, icwmh_cfg: &IcwmhConfig, edge_cfg: &EdgeConfig) -> Result<Encoded> {
    let image = icwmh(sample, icwmh_cfg)?;
    let edges = detect_edges(&image, edge_cfg)?;
    let tensor = assemble(&image, &edges)?;
    Ok(Encoded { image, edges, tensor })
}

fn labels(dataset: &Dataset) -> Result<Vec<usize>> {
    dataset
        .samples
        .iter()
        .map(|s| s.label.ok_or(Error::Unlabeled))
        .collect()
}

/// Encodes every sample (in parallel, order preserved) into flattened
/// three-layer tensors.
pub fn featurize(dataset: &Dataset, icwmh_cfg: &IcwmhConfig, edge_cfg: &EdgeConfig) -> Result<LabeledFeatures> {
    let labels = labels(dataset)?;
    let features = dataset
        .samples
        .par_iter()
        .map(|s| encode_sample(s, icwmh_cfg, edge_cfg).map(|e| e.tensor.into_vec()))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledFeatures {
        features,
        labels,
        splits: dataset.splits.clone(),
        num_classes: dataset.num_classes,
    })
}

/// Raw channel-major signals as features, for diagnostics.
pub fn raw_features(dataset: &Dataset) -> Result<LabeledFeatures> {
    Ok(LabeledFeatures {
        features: dataset.samples.iter().map(|s| s.data.clone()).collect(),
        labels: labels(dataset)?,
        splits: dataset.splits.clone(),
        num_classes: dataset.num_classes,
    })
}
