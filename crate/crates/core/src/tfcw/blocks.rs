//! Global and empowered graphs, and the two encoder blocks built from them.
//!
//! Grouped inputs are N×K×C tensors: N centres, K neighbours, C channels.

use ndarray::{Array1, Array2, Array3, ArrayView2, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use super::distance::{dimension_graph, scale_upper_block};
use super::{GramVariant, Pooling};
use crate::par;

/// Added to the per-neighbour standard deviation before dividing.
pub const DEFAULT_EPS: f64 = 1e-5;

/// Knobs shared by the graph builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfcwParams {
    pub alpha: f64,
    pub pooling: Pooling,
    pub variant: GramVariant,
    /// Divide each neighbour column by its channel standard deviation before
    /// building the empowered graph.
    pub std_normalize: bool,
    pub eps: f64,
}

impl Default for TfcwParams {
    fn default() -> Self {
        TfcwParams {
            alpha: 1.0,
            pooling: Pooling::Max,
            variant: GramVariant::TfcwFull,
            std_normalize: true,
            eps: DEFAULT_EPS,
        }
    }
}

impl TfcwParams {
    pub fn with_alpha(alpha: f64) -> Self {
        TfcwParams {
            alpha,
            ..Default::default()
        }
    }
}

/// One C×C graph for the whole grouped tensor: pool over K to get C×N, take
/// row distances, scale the upper block by alpha.
pub fn tfcw_global(grouped: ArrayView3<'_, f64>, alpha: f64, pool: Pooling) -> Array2<f64> {
    tfcw_global_with(
        grouped,
        &TfcwParams {
            alpha,
            pooling: pool,
            ..Default::default()
        },
    )
}

pub fn tfcw_global_with(grouped: ArrayView3<'_, f64>, params: &TfcwParams) -> Array2<f64> {
    let (n, k, c) = grouped.dim();
    let mut pooled = Array2::zeros((c, n));
    for i in 0..n {
        for ch in 0..c {
            let col = grouped.slice(ndarray::s![i, .., ch]);
            pooled[[ch, i]] = match params.pooling {
                Pooling::Max => col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Pooling::Avg => col.iter().sum::<f64>() / k as f64,
            };
        }
    }
    let mut m = dimension_graph(pooled.view(), params.variant);
    scale_upper_block(&mut m, params.alpha);
    m
}

/// Per-centre C×C graphs over the K neighbour columns, stacked to N×C×C.
pub fn tfcw_empowered(grouped: ArrayView3<'_, f64>, alpha: f64, eps: f64) -> Array3<f64> {
    tfcw_empowered_with(
        grouped,
        &TfcwParams {
            alpha,
            eps,
            ..Default::default()
        },
    )
}

pub fn tfcw_empowered_with(grouped: ArrayView3<'_, f64>, params: &TfcwParams) -> Array3<f64> {
    let (n, _, c) = grouped.dim();
    let mats: Vec<Array2<f64>> = par::map_range(n, |i| {
        let mut block = grouped.index_axis(Axis(0), i).t().to_owned(); // C×K
        if params.std_normalize {
            normalize_columns(&mut block, params.eps);
        }
        let mut m = dimension_graph(block.view(), params.variant);
        scale_upper_block(&mut m, params.alpha);
        m
    });
    let mut out = Array3::zeros((n, c, c));
    for (i, m) in mats.into_iter().enumerate() {
        out.index_axis_mut(Axis(0), i).assign(&m);
    }
    out
}

/// Divides each column by its unbiased standard deviation over the rows plus
/// `eps`.
fn normalize_columns(block: &mut Array2<f64>, eps: f64) {
    let (c, k) = block.dim();
    for j in 0..k {
        let mut col = block.column_mut(j);
        let std = if c > 1 {
            let mean = col.sum() / c as f64;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (c - 1) as f64).sqrt()
        } else {
            f64::NAN
        };
        // a single channel has no spread; leave it at eps scaling
        let denom = if std.is_finite() { std + eps } else { eps };
        col.mapv_inplace(|v| v / denom);
    }
}

/// Column-wise max followed by column-wise mean. The mean is summed in sorted
/// order so row order never matters.
pub fn hybrid_pool(stack: ArrayView2<'_, f64>) -> Array1<f64> {
    let (n, f) = stack.dim();
    let mut out = Array1::zeros(2 * f);
    let mut buf = Vec::with_capacity(n);
    for j in 0..f {
        let col = stack.column(j);
        out[j] = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        buf.clear();
        buf.extend(col.iter().copied());
        buf.sort_unstable_by(|a, b| a.total_cmp(b));
        out[f + j] = buf.iter().sum::<f64>() / n as f64;
    }
    out
}

/// Classification block: the flattened global graph followed by the hybrid
/// pool of the flattened per-centre graphs. Length 3·C².
pub fn united_block(grouped: ArrayView3<'_, f64>, alpha: f64) -> Array1<f64> {
    united_block_with(grouped, &TfcwParams::with_alpha(alpha))
}

pub fn united_block_with(grouped: ArrayView3<'_, f64>, params: &TfcwParams) -> Array1<f64> {
    let (n, _, c) = grouped.dim();
    let global = tfcw_global_with(grouped, params);
    let local = tfcw_empowered_with(grouped, params);
    let local = local
        .into_shape_with_order((n, c * c))
        .expect("contiguous stack");
    let pooled = hybrid_pool(local.view());
    global.into_iter().chain(pooled).collect()
}

/// Segmentation block: per centre, the mean of its K descriptor rows followed
/// by its flattened empowered graph. Shape N×(C + C²).
pub fn empowered_block(grouped: ArrayView3<'_, f64>, alpha: f64) -> Array2<f64> {
    empowered_block_with(grouped, &TfcwParams::with_alpha(alpha))
}

pub fn empowered_block_with(grouped: ArrayView3<'_, f64>, params: &TfcwParams) -> Array2<f64> {
    let (n, k, c) = grouped.dim();
    let local = tfcw_empowered_with(grouped, params);
    let mut out = Array2::zeros((n, c + c * c));
    for i in 0..n {
        let mut row = out.row_mut(i);
        for ch in 0..c {
            let mut s = 0.0;
            for j in 0..k {
                s += grouped[[i, j, ch]];
            }
            row[ch] = s / k as f64;
        }
        for (t, v) in local.index_axis(Axis(0), i).iter().enumerate() {
            row[c + t] = *v;
        }
    }
    out
}
