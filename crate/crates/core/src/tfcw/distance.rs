use ndarray::{Array2, ArrayView2};

use super::GramVariant;
use crate::error::{Result, TfcwError};

/// Sum that does not depend on the order of `values`.
fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    values.iter().sum()
}

/// Euclidean distances between the rows of a D×N matrix.
///
/// Each squared distance is summed in sorted order, so permuting the columns
/// leaves the result bit-identical.
pub fn pairwise_dim_distance(features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (d, n) = features.dim();
    if d == 0 || n == 0 {
        return Err(TfcwError::arg(format!("feature matrix must be non-empty, got {d}x{n}")));
    }
    if !features.iter().all(|v| v.is_finite()) {
        return Err(TfcwError::input("feature matrix has non-finite entries"));
    }
    Ok(pairwise_unchecked(features))
}

pub(crate) fn pairwise_unchecked(features: ArrayView2<'_, f64>) -> Array2<f64> {
    let (d, n) = features.dim();
    let mut out = Array2::zeros((d, d));
    let mut buf = vec![0.0; n];
    for i in 0..d {
        for j in (i + 1)..d {
            for (t, slot) in buf.iter_mut().enumerate() {
                let diff = features[[i, t]] - features[[j, t]];
                *slot = diff * diff;
            }
            let v = ordered_sum(&mut buf).sqrt();
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    out
}

/// Gram matrix `X Xᵀ` with order-independent entry sums.
fn gram(features: ArrayView2<'_, f64>) -> Array2<f64> {
    let (d, n) = features.dim();
    let mut g = Array2::zeros((d, d));
    let mut buf = vec![0.0; n];
    for i in 0..d {
        for j in i..d {
            for (t, slot) in buf.iter_mut().enumerate() {
                *slot = features[[i, t]] * features[[j, t]];
            }
            let v = ordered_sum(&mut buf);
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    g
}

/// Distance matrix through the Gram matrix:
/// `sqrt(max(0, diag(G)1ᵀ + 1diag(G)ᵀ − 2G))`.
pub fn gram_form(features: ArrayView2<'_, f64>) -> Array2<f64> {
    gram_variant(features, GramVariant::TfcwFull)
}

pub fn gram_variant(features: ArrayView2<'_, f64>, variant: GramVariant) -> Array2<f64> {
    let g = gram(features);
    let d = g.nrows();
    let lifted = |coef: f64| {
        Array2::from_shape_fn((d, d), |(i, j)| {
            (g[[i, i]] + g[[j, j]] - coef * g[[i, j]]).max(0.0).sqrt()
        })
    };
    match variant {
        GramVariant::TfcwFull => lifted(2.0),
        GramVariant::OneG => lifted(1.0),
        GramVariant::NoG => lifted(0.0),
        GramVariant::GramOnly => g,
        GramVariant::GramMinusDiag => {
            let mut g = g;
            for i in 0..d {
                g[[i, i]] = 0.0;
            }
            g
        }
    }
}

/// The dimension graph used by the encoders: the direct distance matrix for
/// [`GramVariant::TfcwFull`], the Gram-based formulation otherwise.
pub fn dimension_graph(features: ArrayView2<'_, f64>, variant: GramVariant) -> Array2<f64> {
    match variant {
        GramVariant::TfcwFull => pairwise_unchecked(features),
        other => gram_variant(features, other),
    }
}

/// Multiplies the block rows `0..C-1`, columns `1..C` by `alpha`
/// (`x[:-1, 1:] *= alpha`). Entries outside the block are untouched.
pub fn scale_upper_block(m: &mut Array2<f64>, alpha: f64) {
    if alpha == 1.0 {
        return;
    }
    let (r, c) = m.dim();
    for i in 0..r.saturating_sub(1) {
        for j in 1..c {
            m[[i, j]] *= alpha;
        }
    }
}
