//! Staged encoders.
//!
//! Every stage halves the cloud with farthest point sampling, groups each
//! sampled point's K nearest neighbours from the stage input, computes the
//! configured descriptor on that grouping, and turns it into graph features.
//! Classification concatenates one united-block vector per stage;
//! segmentation keeps per-point empowered-block features for the decoder.

mod config;
mod decoder;
mod encoder;

pub use config::PipelineConfig;
pub use decoder::{decode_segmentation, interpolation_weights, propagate_features, PROPAGATION_EPS};
pub use encoder::{
    encode_batch, encode_classification, encode_classification_detailed, encode_segmentation,
    prepare_cloud, stage_groups, stage_sizes, ClassificationFeature, SegmentationEncoding, StageGroup,
    StageOutput,
};
