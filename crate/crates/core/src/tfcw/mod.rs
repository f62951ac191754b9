//! Transposed fully-connected weighted graphs.
//!
//! A descriptor matrix is read dimension-wise: each of its C channels is a
//! vector over points (or neighbours), and the graph holds the Euclidean
//! distances between those channel vectors. [`pairwise_dim_distance`] computes
//! them directly, [`gram_form`] through the Gram matrix; the two must agree.

mod blocks;
mod distance;

use serde::{Deserialize, Serialize};

pub use blocks::{
    empowered_block, empowered_block_with, hybrid_pool, tfcw_empowered, tfcw_empowered_with, tfcw_global,
    tfcw_global_with, united_block, united_block_with, TfcwParams, DEFAULT_EPS,
};
pub use distance::{dimension_graph, gram_form, gram_variant, pairwise_dim_distance, scale_upper_block};

/// Reduction over the neighbour axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Max,
    Avg,
}

/// Diagonal-element formulations of the dimension graph. With
/// `d = diag(G)` as a column and `1` a ones column:
///
/// * `TfcwFull`: `sqrt(d1ᵀ + 1dᵀ − 2G)`, the distance matrix itself.
/// * `OneG`: `sqrt(d1ᵀ + 1dᵀ − G)`.
/// * `NoG`: `sqrt(d1ᵀ + 1dᵀ)`.
/// * `GramOnly`: `G`.
/// * `GramMinusDiag`: `G` with its diagonal zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramVariant {
    #[default]
    TfcwFull,
    OneG,
    NoG,
    GramOnly,
    GramMinusDiag,
}

impl GramVariant {
    pub const ALL: [GramVariant; 5] = [
        GramVariant::TfcwFull,
        GramVariant::OneG,
        GramVariant::NoG,
        GramVariant::GramOnly,
        GramVariant::GramMinusDiag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GramVariant::TfcwFull => "tfcw_full",
            GramVariant::OneG => "one_g",
            GramVariant::NoG => "no_g",
            GramVariant::GramOnly => "gram_only",
            GramVariant::GramMinusDiag => "gram_minus_diag",
        }
    }

    /// Human-readable formula.
    pub fn formula(self) -> &'static str {
        match self {
            GramVariant::TfcwFull => "sqrt(diag(G)1^T+1diag(G)^T-2G)",
            GramVariant::OneG => "sqrt(diag(G)1^T+1diag(G)^T-G)",
            GramVariant::NoG => "sqrt(diag(G)1^T+1diag(G)^T)",
            GramVariant::GramOnly => "G",
            GramVariant::GramMinusDiag => "G-diag(G)",
        }
    }
}
