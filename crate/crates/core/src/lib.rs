//! Non-parametric point cloud analysis built on transposed fully-connected
//! weighted graphs (t-FCW).
//!
//! A point cloud is turned into surface descriptors, the descriptor
//! dimensions are compared pairwise, and the resulting compact matrices are
//! used as features for a similarity memory bank. Nothing is trained.
//!
//! Module map:
//!
//! * [`geometry`]: clouds, farthest point sampling, k-NN, rotations.
//! * [`descriptors`]: xyz+neighbour, GeoPCSD and RISP surface descriptors.
//! * [`tfcw`]: dimension-pairwise distance graphs and the encoder blocks.
//! * [`pipeline`]: staged classification/segmentation encoders and decoder.
//! * [`bank`]: memory bank prediction and metrics.
//! * [`robustness`]: corruptions, rotation scenarios, stability and scaling.
//! * [`io`], [`experiment`]: file formats, configs and experiment runners.
//!
//! Per-point and per-sample loops run on rayon when the default `parallel`
//! feature is enabled and fall back to plain iterators otherwise. Results are
//! bit-identical either way.

pub mod alloc;
pub mod bank;
pub mod descriptors;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod robustness;
pub mod synthetic;
pub mod tfcw;

mod par;

pub use error::{Result, TfcwError};
pub use geometry::{Point3, PointCloud};
