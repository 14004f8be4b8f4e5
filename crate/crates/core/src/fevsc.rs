//! Skip-connection enrichment: the edge map is added back onto the encoded
//! image and the three planes are stacked for the classifier.

use crate::error::{Error, Result};
use crate::image::{EdgeMap, EncodedImage};

/// `[encoded, edge, clamp(encoded + edge)]`, each `height x width`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedTensor {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

pub const LAYERS: usize = 3;

impl EnrichedTensor {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `[3, height, width]`
    pub fn shape(&self) -> [usize; 3] {
        [LAYERS, self.height, self.width]
    }

    pub fn layer(&self, i: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[i * n..(i + 1) * n]
    }

    /// Layer-major flattening, the classifier's feature vector.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Rebuilds a tensor from its flattened layers, checking shape and range.
    pub fn from_layers(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != LAYERS * height * width {
            return Err(Error::ShapeMismatch(format!(
                "tensor [3, {height}, {width}] needs {} values, found {}",
                LAYERS * height * width,
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::ShapeMismatch("tensor value outside [0, 1]".into()));
        }
        Ok(EnrichedTensor { height, width, data })
    }
}

fn check_shapes(encoded: &EncodedImage, edge: &EdgeMap) -> Result<()> {
    if encoded.shape() != edge.shape() {
        return Err(Error::ShapeMismatch(format!(
            "encoded image is {:?}, edge map is {:?}",
            encoded.shape(),
            edge.shape()
        )));
    }
    Ok(())
}

/// Saturating elementwise sum `min(encoded + edge, 1)`.
pub fn enrich(encoded: &EncodedImage, edge: &EdgeMap) -> Result<EncodedImage> {
    check_shapes(encoded, edge)?;
    let (h, w) = encoded.shape();
    let px = encoded
        .as_slice()
        .iter()
        .zip(edge.as_slice())
        .map(|(x, e)| (x + e).clamp(0.0, 1.0))
        .collect();
    Ok(EncodedImage::from_raw(h, w, px))
}

pub fn assemble(encoded: &EncodedImage, edge: &EdgeMap) -> Result<EnrichedTensor> {
    let sum = enrich(encoded, edge)?;
    let (h, w) = encoded.shape();
    let mut data = Vec::with_capacity(LAYERS * h * w);
    data.extend_from_slice(encoded.as_slice());
    data.extend_from_slice(edge.as_slice());
    data.extend_from_slice(sum.as_slice());
    EnrichedTensor::from_layers(h, w, data)
}
