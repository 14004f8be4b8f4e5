//! Unit-range grayscale planes.

use crate::error::{Error, Result};

/// An `height x width` grayscale image with every pixel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

/// Per-pixel edge intensity in `[0, 1]`; binary after hysteresis or adaptive
/// thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

fn check_plane(height: usize, width: usize, values: &[f64]) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::ShapeMismatch(format!("empty image {height}x{width}")));
    }
    if values.len() != height * width {
        return Err(Error::ShapeMismatch(format!(
            "{height}x{width} image needs {} pixels, found {}",
            height * width,
            values.len()
        )));
    }
    if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::ShapeMismatch(format!(
            "pixel ({}, {}) = {} outside [0, 1]",
            pos / width,
            pos % width,
            values[pos]
        )));
    }
    Ok(())
}

macro_rules! plane_accessors {
    ($ty:ident, $field:ident) => {
        impl $ty {
            pub fn new(height: usize, width: usize, $field: Vec<f64>) -> Result<Self> {
                check_plane(height, width, &$field)?;
                Ok($ty {
                    height,
                    width,
                    $field,
                })
            }

            /// Constant-valued plane. `value` must lie in `[0, 1]`.
            pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
                Self::new(height, width, vec![value; height * width])
            }

            pub(crate) fn from_raw(height: usize, width: usize, $field: Vec<f64>) -> Self {
                debug_assert!(check_plane(height, width, &$field).is_ok());
                $ty {
                    height,
                    width,
                    $field,
                }
            }

            pub fn height(&self) -> usize {
                self.height
            }

            pub fn width(&self) -> usize {
                self.width
            }

            pub fn shape(&self) -> (usize, usize) {
                (self.height, self.width)
            }

            pub fn get(&self, a: usize, b: usize) -> f64 {
                self.$field[a * self.width + b]
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.$field
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.$field
            }
        }
    };
}

plane_accessors!(EncodedImage, pixels);
plane_accessors!(EdgeMap, values);

impl EdgeMap {
    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    /// Positions `(row, col)` of nonzero pixels in raster order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| (i / self.width, i % self.width))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(EncodedImage::new(1, 2, vec![0.0, 1.5]).is_err());
        assert!(EncodedImage::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(EncodedImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(EncodedImage::new(0, 2, vec![]).is_err());
        assert!(EdgeMap::new(1, 1, vec![1.0]).is_ok());
    }

    #[test]
    fn edge_support_in_raster_order() {
        let e = EdgeMap::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(e.support(), vec![(0, 1), (1, 0)]);
        assert_eq!(e.count_nonzero(), 2);
    }
}
