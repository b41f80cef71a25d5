//! Bilinear co-attention.
//!
//! Each target row `h_i` is scored against a context summary `c̄` (the mean
//! of the context rows) as `tanh(h_iᵀ W c̄ + b)`. Softmax over the scores gives
//! the attention weights and the attended vector is `Σ α_i h_i`. Swapping the
//! roles of target and context uses `Wᵀ`, so both directions share one
//! bilinear form.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::linalg::softmax;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Attended {
    pub alpha: Array1<f64>,
    pub pooled: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct AttentionTrace {
    /// `W c̄`
    q: Array1<f64>,
    /// `tanh` scores
    scores: Vec<f64>,
    alpha: Vec<f64>,
}

impl AttentionTrace {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

#[derive(Debug, Clone)]
pub struct AttentionGrad {
    pub d_target: Array2<f64>,
    pub d_summary: Array1<f64>,
    /// Same shape as the `w` passed to [`attend`].
    pub d_w: Array2<f64>,
    pub d_b: f64,
}

/// Attends over `target` (`T × w`, `T ≥ 1`) with summary `c̄` (`w_c`) and
/// `w` of shape `w × w_c`.
pub fn attend(
    target: ArrayView2<'_, f64>,
    summary: ArrayView1<'_, f64>,
    w: ArrayView2<'_, f64>,
    b: f64,
) -> (Array1<f64>, AttentionTrace) {
    debug_assert!(target.nrows() > 0);
    let q = w.dot(&summary);
    let scores: Vec<f64> = target.outer_iter().map(|h| (h.dot(&q) + b).tanh()).collect();
    let alpha = softmax(&scores);
    let pooled = Array1::from(alpha.clone()).dot(&target);
    (pooled, AttentionTrace { q, scores, alpha })
}

pub fn attend_backward(
    target: ArrayView2<'_, f64>,
    summary: ArrayView1<'_, f64>,
    w: ArrayView2<'_, f64>,
    trace: &AttentionTrace,
    d_pooled: ArrayView1<'_, f64>,
) -> AttentionGrad {
    let t_len = target.nrows();
    let mut d_target = Array2::zeros(target.raw_dim());
    let d_alpha: Vec<f64> = target.outer_iter().map(|h| h.dot(&d_pooled)).collect();
    let weighted: f64 = trace.alpha.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
    let mut d_q = Array1::zeros(trace.q.len());
    let mut d_b = 0.0;
    for i in 0..t_len {
        let a = trace.alpha[i];
        let d_score = a * (d_alpha[i] - weighted);
        let d_pre = d_score * (1.0 - trace.scores[i] * trace.scores[i]);
        d_b += d_pre;
        let h = target.row(i);
        d_q.scaled_add(d_pre, &h);
        let mut row = d_target.row_mut(i);
        row.scaled_add(a, &d_pooled);
        row.scaled_add(d_pre, &trace.q);
    }
    let d_w = d_q
        .view()
        .insert_axis(Axis(1))
        .dot(&summary.insert_axis(Axis(0)));
    let d_summary = w.t().dot(&d_q);
    AttentionGrad {
        d_target,
        d_summary,
        d_w,
        d_b,
    }
}

/// Unattended pooling: the mean of the target rows.
pub fn uniform_pool(target: ArrayView2<'_, f64>) -> Array1<f64> {
    target.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(target.ncols()))
}

/// Mean of `rows`, or zeros of width `width` when there are none.
pub fn summary(rows: ArrayView2<'_, f64>) -> Array1<f64> {
    rows.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(rows.ncols()))
}

/// Co-attention of `target` (`T × w`) against `context` (`C × w_c`).
///
/// Errors when `T = 0` or the shapes disagree with `w`. An empty context
/// summarizes to zeros, which makes every score `tanh(b)` and the weights
/// uniform.
pub fn co_attention(
    target: ArrayView2<'_, f64>,
    context: ArrayView2<'_, f64>,
    w: ArrayView2<'_, f64>,
    b: f64,
) -> Result<Attended> {
    if target.nrows() == 0 {
        return Err(Error::Shape("co-attention needs at least one target row".into()));
    }
    if w.dim() != (target.ncols(), context.ncols()) {
        return Err(Error::Shape(format!(
            "co-attention weight {:?} does not match target width {} and context width {}",
            w.dim(),
            target.ncols(),
            context.ncols()
        )));
    }
    let c = summary(context);
    let (pooled, trace) = attend(target, c.view(), w, b);
    Ok(Attended {
        alpha: Array1::from(trace.alpha),
        pooled,
    })
}
