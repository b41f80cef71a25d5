//! The full detector: encoders, co-attention, fusion and the softmax head,
//! with a hand-written backward pass.
//!
//! Embeddings and emotion features are inputs, not parameters, so the
//! backward pass stops at the recurrent encoders.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};

use super::attention::{attend, attend_backward, summary, uniform_pool, AttentionTrace};
use super::gru::BiGruTrace;
use super::input::RecordInput;
use super::linalg::softmax2;
use super::params::{ModelConfig, ModelParams};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::resources::EmbeddingTable;

/// Probability clamp used by both loss paths.
pub const PROB_EPS: f64 = 1e-7;

/// Fused features of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBundle {
    pub v_sn: Array1<f64>,
    pub v_sc: Array1<f64>,
    pub a_en: Array1<f64>,
    pub a_ec: Array1<f64>,
    pub e_tc: Array1<f64>,
    pub e_dual: Array1<f64>,
    /// `v_sn ⊕ v_sc ⊕ a_en ⊕ a_ec ⊕ e_tc ⊕ e_dual`
    pub x_nc: Array1<f64>,
}

/// Softmax over `W x + b`. Errors if a logit is not finite.
pub fn classify(x: ArrayView1<'_, f64>, w: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>) -> Result<[f64; 2]> {
    if w.dim() != (2, x.len()) || b.len() != 2 {
        return Err(Error::Shape(format!(
            "classifier {:?} cannot take features of width {}",
            w.dim(),
            x.len()
        )));
    }
    let z = w.dot(&x) + b;
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(format!("logits {z}")));
    }
    Ok(softmax2([z[0], z[1]]))
}

/// Binary cross-entropy on the clamped class-1 probability.
pub fn supervised_loss(label: Label, p_fake: f64) -> f64 {
    let p = p_fake.clamp(PROB_EPS, 1.0 - PROB_EPS);
    match label {
        Label::Fake => -p.ln(),
        Label::True => -(1.0 - p).ln(),
    }
}

/// Gradient of [`supervised_loss`] w.r.t. the two logits. Zero where the
/// clamp is active.
pub fn supervised_loss_logit_grad(label: Label, probs: [f64; 2]) -> [f64; 2] {
    let p = probs[1];
    if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
        return [0.0, 0.0];
    }
    let d1 = p - label.index() as f64;
    [-d1, d1]
}

struct CommentCache {
    x: Array2<f64>,
    h: Array2<f64>,
    trace: BiGruTrace,
    /// Attention over this comment's tokens, when co-attention is on.
    att: Option<AttentionTrace>,
    pooled: Array1<f64>,
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache {
    news_x: Array2<f64>,
    news_h: Array2<f64>,
    news_trace: Option<BiGruTrace>,
    /// Comments with at least one token, in time order.
    comments: Vec<CommentCache>,
    n_bar: Array1<f64>,
    c_bar: Array1<f64>,
    sn_att: Option<AttentionTrace>,
    /// For each V_SC component, the comment that supplied the max.
    sc_argmax: Vec<Option<usize>>,
    e_news: Array2<f64>,
    ec_rows: Array2<f64>,
    ec_mean: Array1<f64>,
    en_att: Option<AttentionTrace>,
    ec_att: Option<AttentionTrace>,
    temporal: Option<BiGruTrace>,
    pub bundle: EncodedBundle,
    pub probs: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

/// One term of a batch objective: `weight × cross-entropy(label, p)`.
#[derive(Debug, Clone, Copy)]
pub struct WeightedExample<'a> {
    pub input: &'a RecordInput,
    pub label: Label,
    pub weight: f64,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::init(&config, seed);
        Ok(Model { config, params })
    }

    pub fn from_params(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        let expected = ModelParams::zeros(&config);
        for (a, b) in params.blocks().iter().zip(expected.blocks()) {
            if a.shape != b.shape {
                return Err(Error::Shape(format!("{} has shape {:?}, expected {:?}", a.name, a.shape, b.shape)));
            }
        }
        Ok(Model { config, params })
    }

    pub fn encode(&self, input: &RecordInput, table: &EmbeddingTable) -> Result<EncodedBundle> {
        Ok(self.forward(input, table)?.bundle)
    }

    /// `(P[true], P[fake])`
    pub fn predict(&self, input: &RecordInput, table: &EmbeddingTable) -> Result<[f64; 2]> {
        Ok(self.forward(input, table)?.probs)
    }

    fn check_input(&self, input: &RecordInput, table: &EmbeddingTable) -> Result<usize> {
        let d = self.config.emotion_dim;
        if table.dim() != self.config.embedding_dim {
            return Err(Error::Shape(format!(
                "embedding width {} but model expects {}",
                table.dim(),
                self.config.embedding_dim
            )));
        }
        if input.news_emotion.len() != d || input.comment_emotion.ncols() != d || input.dual_emotion.len() != 5 * d {
            return Err(Error::Shape(format!("emotion inputs do not match width {d}")));
        }
        let finite = input.news_emotion.iter().chain(&input.comment_emotion).chain(&input.dual_emotion);
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("emotion input".into()));
        }
        input.n_comments()
    }

    pub fn forward(&self, input: &RecordInput, table: &EmbeddingTable) -> Result<ForwardCache> {
        let m = self.check_input(input, table)?;
        let cfg = &self.config;
        let p = &self.params;
        let (h, d) = (cfg.hidden_dim, cfg.emotion_dim);

        let news_x = input.news.embedded(table)?;
        let (news_h, news_trace) = if news_x.nrows() > 0 {
            let (out, tr) = p.semantic.forward(news_x.view());
            (out, Some(tr))
        } else {
            (Array2::zeros((0, 2 * h)), None)
        };
        let mut comments = Vec::with_capacity(m);
        for seq in &input.comments[..m] {
            let x = seq.embedded(table)?;
            if x.nrows() == 0 {
                continue;
            }
            let (hs, trace) = p.semantic.forward(x.view());
            comments.push(CommentCache {
                x,
                h: hs,
                trace,
                att: None,
                pooled: Array1::zeros(0),
            });
        }
        let n_bar = summary(news_h.view());
        let mut c_bar = Array1::zeros(2 * h);
        if !comments.is_empty() {
            for c in &comments {
                c_bar += &summary(c.h.view());
            }
            c_bar /= comments.len() as f64;
        }

        let w_s = p.semantic_attention.w.view();
        let b_s = p.semantic_attention.b[0];
        let (v_sn, sn_att) = if news_h.nrows() == 0 {
            (Array1::zeros(2 * h), None)
        } else if cfg.co_attention {
            let (v, tr) = attend(news_h.view(), c_bar.view(), w_s, b_s);
            (v, Some(tr))
        } else {
            (uniform_pool(news_h.view()), None)
        };
        for c in comments.iter_mut() {
            if cfg.co_attention {
                let (v, tr) = attend(c.h.view(), n_bar.view(), w_s.t(), b_s);
                c.pooled = v;
                c.att = Some(tr);
            } else {
                c.pooled = uniform_pool(c.h.view());
            }
        }
        let mut v_sc = Array1::zeros(2 * h);
        let mut sc_argmax = vec![None; 2 * h];
        for k in 0..2 * h {
            for (j, c) in comments.iter().enumerate() {
                if sc_argmax[k].is_none() || c.pooled[k] > v_sc[k] {
                    v_sc[k] = c.pooled[k];
                    sc_argmax[k] = Some(j);
                }
            }
        }

        let e_news = input.news_emotion.view().insert_axis(ndarray::Axis(0)).to_owned();
        let ec_rows = input.emotion_rows(m).to_owned();
        let ec_mean = summary(ec_rows.view());
        let w_e = p.emotion_attention.w.view();
        let b_e = p.emotion_attention.b[0];
        let (a_en, en_att, a_ec, ec_att) = if cfg.co_attention {
            let (a_en, en) = attend(e_news.view(), ec_mean.view(), w_e, b_e);
            let (a_ec, ec) = if m > 0 {
                let (v, tr) = attend(ec_rows.view(), input.news_emotion.view(), w_e.t(), b_e);
                (v, Some(tr))
            } else {
                (Array1::zeros(d), None)
            };
            (a_en, Some(en), a_ec, ec)
        } else {
            (input.news_emotion.clone(), None, ec_mean.clone(), None)
        };

        let (e_tc, temporal) = if cfg.temporal && m > 0 {
            let (out, tr) = p.temporal.forward(ec_rows.view());
            (summary(out.view()), Some(tr))
        } else {
            (Array1::zeros(2 * h), None)
        };

        let e_dual = input.dual_emotion.clone();
        let x_nc = ndarray::concatenate![
            ndarray::Axis(0),
            v_sn.view(),
            v_sc.view(),
            a_en.view(),
            a_ec.view(),
            e_tc.view(),
            e_dual.view()
        ];
        let probs = classify(x_nc.view(), p.classifier.w.view(), p.classifier.b.view())?;
        Ok(ForwardCache {
            news_x,
            news_h,
            news_trace,
            comments,
            n_bar,
            c_bar,
            sn_att,
            sc_argmax,
            e_news,
            ec_rows,
            ec_mean,
            en_att,
            ec_att,
            temporal,
            bundle: EncodedBundle {
                v_sn,
                v_sc,
                a_en,
                a_ec,
                e_tc,
                e_dual,
                x_nc,
            },
            probs,
        })
    }

    /// Accumulates parameter gradients for upstream logit gradient `d_logits`.
    pub fn backward(&self, cache: &ForwardCache, d_logits: [f64; 2], grad: &mut ModelParams) {
        let cfg = &self.config;
        let p = &self.params;
        let (h, d) = (cfg.hidden_dim, cfg.emotion_dim);
        let dz = Array1::from(d_logits.to_vec());
        let x = &cache.bundle.x_nc;
        for k in 0..2 {
            grad.classifier.b[k] += dz[k];
            grad.classifier.w.row_mut(k).scaled_add(dz[k], x);
        }
        let dx = p.classifier.w.t().dot(&dz);
        let mut off = 0;
        let mut take = |n: usize| {
            let v = dx.slice(s![off..off + n]).to_owned();
            off += n;
            v
        };
        let d_vsn = take(2 * h);
        let d_vsc = take(2 * h);
        let d_aen = take(d);
        let d_aec = take(d);
        let d_etc = take(2 * h);

        let mut d_news_h = Array2::zeros(cache.news_h.raw_dim());
        let mut d_comment_h: Vec<Array2<f64>> = cache.comments.iter().map(|c| Array2::zeros(c.h.raw_dim())).collect();
        let w_s = p.semantic_attention.w.view();

        if cache.news_h.nrows() > 0 {
            match &cache.sn_att {
                Some(tr) => {
                    let g = attend_backward(cache.news_h.view(), cache.c_bar.view(), w_s, tr, d_vsn.view());
                    d_news_h += &g.d_target;
                    grad.semantic_attention.w += &g.d_w;
                    grad.semantic_attention.b[0] += g.d_b;
                    let n_c = cache.comments.len() as f64;
                    for (c, dh) in cache.comments.iter().zip(d_comment_h.iter_mut()) {
                        let share = &g.d_summary / (n_c * c.h.nrows() as f64);
                        for mut row in dh.rows_mut() {
                            row += &share;
                        }
                    }
                }
                None => {
                    let share = &d_vsn / cache.news_h.nrows() as f64;
                    for mut row in d_news_h.rows_mut() {
                        row += &share;
                    }
                }
            }
        }

        let mut d_pooled: Vec<Array1<f64>> = cache.comments.iter().map(|_| Array1::zeros(2 * h)).collect();
        for (k, j) in cache.sc_argmax.iter().enumerate() {
            if let Some(j) = j {
                d_pooled[*j][k] += d_vsc[k];
            }
        }
        let mut d_n_bar = Array1::<f64>::zeros(2 * h);
        for ((c, dp), dh) in cache.comments.iter().zip(&d_pooled).zip(d_comment_h.iter_mut()) {
            if dp.iter().all(|&v| v == 0.0) {
                continue;
            }
            match &c.att {
                Some(tr) => {
                    let g = attend_backward(c.h.view(), cache.n_bar.view(), w_s.t(), tr, dp.view());
                    *dh += &g.d_target;
                    grad.semantic_attention.w += &g.d_w.t();
                    grad.semantic_attention.b[0] += g.d_b;
                    d_n_bar += &g.d_summary;
                }
                None => {
                    let share = dp / c.h.nrows() as f64;
                    for mut row in dh.rows_mut() {
                        row += &share;
                    }
                }
            }
        }
        if cache.news_h.nrows() > 0 {
            let share = &d_n_bar / cache.news_h.nrows() as f64;
            for mut row in d_news_h.rows_mut() {
                row += &share;
            }
        }

        if let Some(tr) = &cache.news_trace {
            p.semantic.backward(cache.news_x.view(), tr, d_news_h.view(), &mut grad.semantic);
        }
        for (c, dh) in cache.comments.iter().zip(&d_comment_h) {
            p.semantic.backward(c.x.view(), &c.trace, dh.view(), &mut grad.semantic);
        }

        let w_e = p.emotion_attention.w.view();
        if let Some(tr) = &cache.en_att {
            let g = attend_backward(cache.e_news.view(), cache.ec_mean.view(), w_e, tr, d_aen.view());
            grad.emotion_attention.w += &g.d_w;
            grad.emotion_attention.b[0] += g.d_b;
        }
        if let Some(tr) = &cache.ec_att {
            let g = attend_backward(cache.ec_rows.view(), cache.e_news.row(0), w_e.t(), tr, d_aec.view());
            grad.emotion_attention.w += &g.d_w.t();
            grad.emotion_attention.b[0] += g.d_b;
        }

        if let Some(tr) = &cache.temporal {
            let m = cache.ec_rows.nrows();
            let share = &d_etc / m as f64;
            let mut d_out = Array2::zeros((m, 2 * h));
            for mut row in d_out.rows_mut() {
                row += &share;
            }
            p.temporal.backward(cache.ec_rows.view(), tr, d_out.view(), &mut grad.temporal);
        }
    }

    /// Objective `Σ weight·CE + l2·Σw²` over `batch` and its gradient.
    pub fn loss_and_grad(
        &self,
        batch: &[WeightedExample<'_>],
        table: &EmbeddingTable,
        l2: f64,
    ) -> Result<(f64, ModelParams)> {
        let mut grad = ModelParams::zeros(&self.config);
        let mut loss = 0.0;
        for ex in batch {
            if ex.weight == 0.0 {
                continue;
            }
            let cache = self.forward(ex.input, table)?;
            loss += ex.weight * supervised_loss(ex.label, cache.probs[1]);
            let [d0, d1] = supervised_loss_logit_grad(ex.label, cache.probs);
            self.backward(&cache, [ex.weight * d0, ex.weight * d1], &mut grad);
        }
        if l2 != 0.0 {
            loss += l2 * self.params.weight_sq_norm();
            for (g, w) in grad.blocks_mut().into_iter().zip(self.params.blocks()) {
                if w.is_weight {
                    for (gv, wv) in g.data.iter_mut().zip(w.data) {
                        *gv += 2.0 * l2 * wv;
                    }
                }
            }
        }
        if let Err(name) = grad.all_finite() {
            return Err(Error::NonFinite(format!("gradient of {name}")));
        }
        Ok((loss, grad))
    }

    /// Objective value only; used by gradient checks.
    pub fn loss(&self, batch: &[WeightedExample<'_>], table: &EmbeddingTable, l2: f64) -> Result<f64> {
        let mut loss = 0.0;
        for ex in batch {
            if ex.weight == 0.0 {
                continue;
            }
            let probs = self.predict(ex.input, table)?;
            loss += ex.weight * supervised_loss(ex.label, probs[1]);
        }
        Ok(loss + l2 * self.params.weight_sq_norm())
    }
}
