//! EEG-to-image preprocessing: channel-magnitude homogenization, Canny and
//! adaptive edge features, skip-connection enrichment, and a linear softmax
//! head for desk-scale verification.

pub mod classifier;
pub mod config;
pub mod edge;
pub mod error;
pub mod fevsc;
pub mod formats;
pub mod harness;
pub mod icwmh;
pub mod image;
pub mod pipeline;
pub mod signal;

pub use classifier::{ce_loss, forward, grad, gradient_dispersion, train, ClassifierParams, TrainConfig};
pub use config::PipelineConfig;
pub use edge::{detect_edges, EdgeConfig, EdgeMode, GradientField};
pub use error::{Error, Result};
pub use fevsc::{assemble, enrich, EnrichedTensor};
pub use icwmh::{icwmh, inverse_magnitude_scale, resize, squeeze_to_unit, IcwmhConfig, Interpolation};
pub use image::{EdgeMap, EncodedImage};
pub use signal::{channel_power, synth_dataset, validate_sample, Dataset, EegSample, Split, SynthSpec};
