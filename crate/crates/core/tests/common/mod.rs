//! Independent reference implementations and fixtures shared by the
//! integration tests and the acceptance report.
#![allow(dead_code)]

use dida::corpus::Label;
use dida::network::{
    attention::co_attention, bigru, BiGru, GruCell, Model, ModelConfig, PaddedSequence, RecordInput, WeightedExample,
};
use dida::pseudolabel::Thresholds;
use dida::resources::EmbeddingTable;
use dida::training::compute_metrics;
use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows).map(|_| uniform(rng, cols, scale)).collect()
}

fn to_array2(m: &[Vec<f64>], cols: usize) -> Array2<f64> {
    Array2::from_shape_vec((m.len(), cols), m.iter().flatten().copied().collect()).unwrap()
}

// ---------------------------------------------------------------- GRU

pub struct ScalarGru {
    /// Rows grouped as reset, update, candidate; each `h` rows.
    pub w_i: Vec<Vec<f64>>,
    pub w_h: Vec<Vec<f64>>,
    pub b_i: Vec<f64>,
    pub b_h: Vec<f64>,
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ScalarGru {
    fn random(rng: &mut ChaCha8Rng, d_in: usize, h: usize) -> Self {
        ScalarGru {
            w_i: matrix(rng, 3 * h, d_in, 1.0),
            w_h: matrix(rng, 3 * h, h, 1.0),
            b_i: uniform(rng, 3 * h, 0.5),
            b_h: uniform(rng, 3 * h, 0.5),
        }
    }

    /// Hidden state after each input, in input order.
    pub fn run(&self, xs: &[Vec<f64>], reverse: bool) -> Vec<Vec<f64>> {
        let h = self.b_h.len() / 3;
        let mut state = vec![0.0; h];
        let mut out = vec![vec![]; xs.len()];
        let order: Vec<usize> = if reverse { (0..xs.len()).rev().collect() } else { (0..xs.len()).collect() };
        for t in order {
            let x = &xs[t];
            let mut next = vec![0.0; h];
            for j in 0..h {
                let r = sig(dot(&self.w_i[j], x) + self.b_i[j] + dot(&self.w_h[j], &state) + self.b_h[j]);
                let z = sig(dot(&self.w_i[h + j], x) + self.b_i[h + j] + dot(&self.w_h[h + j], &state) + self.b_h[h + j]);
                let n = (dot(&self.w_i[2 * h + j], x)
                    + self.b_i[2 * h + j]
                    + r * (dot(&self.w_h[2 * h + j], &state) + self.b_h[2 * h + j]))
                    .tanh();
                next[j] = (1.0 - z) * n + z * state[j];
            }
            state = next;
            out[t] = state.clone();
        }
        out
    }

    fn cell(&self, d_in: usize) -> GruCell {
        let h = self.b_h.len() / 3;
        GruCell {
            w_input: to_array2(&self.w_i, d_in),
            w_hidden: to_array2(&self.w_h, h),
            b_input: Array1::from(self.b_i.clone()),
            b_hidden: Array1::from(self.b_h.clone()),
        }
    }
}

/// Largest deviation between the batched BiGRU and the scalar recurrence
/// over `n` random instances with `L, d_in, d_h ≤ 3`.
pub fn gru_oracle(n: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let d_in = rng.gen_range(1..=3);
        let h = rng.gen_range(1..=3);
        let l = rng.gen_range(1..=3);
        let fwd = ScalarGru::random(&mut rng, d_in, h);
        let bwd = ScalarGru::random(&mut rng, d_in, h);
        let weights = BiGru {
            forward: fwd.cell(d_in),
            backward: bwd.cell(d_in),
        };
        // Two sequences: one full, one with a random prefix.
        let lens = [l, rng.gen_range(0..=l)];
        let mut seq = Array3::zeros((2, l, d_in));
        let mut mask = Array2::from_elem((2, l), false);
        let mut xs = vec![];
        for (b, &len) in lens.iter().enumerate() {
            let x = matrix(&mut rng, l, d_in, 2.0);
            for t in 0..l {
                for k in 0..d_in {
                    seq[[b, t, k]] = x[t][k];
                }
                mask[[b, t]] = t < len;
            }
            xs.push(x[..len].to_vec());
        }
        let out = bigru(seq.view(), mask.view(), &weights).unwrap();
        for (b, x) in xs.iter().enumerate() {
            let f = fwd.run(x, false);
            let r = bwd.run(x, true);
            for t in 0..l {
                for j in 0..h {
                    let (ef, eb) = if t < x.len() { (f[t][j], r[t][j]) } else { (0.0, 0.0) };
                    worst = worst.max((out[[b, t, j]] - ef).abs());
                    worst = worst.max((out[[b, t, h + j]] - eb).abs());
                }
            }
        }
    }
    worst
}

// ---------------------------------------------------------- co-attention

/// `score_i = tanh(h_iᵀ W c̄ + b)`, softmax, weighted sum; loops only.
pub fn scalar_attention(target: &[Vec<f64>], context: &[Vec<f64>], w: &[Vec<f64>], b: f64) -> (Vec<f64>, Vec<f64>) {
    let wc = w[0].len();
    let mut c_bar = vec![0.0; wc];
    for row in context {
        for k in 0..wc {
            c_bar[k] += row[k] / context.len() as f64;
        }
    }
    let mut scores = vec![];
    for h in target {
        let mut s = b;
        for a in 0..h.len() {
            for k in 0..wc {
                s += h[a] * w[a][k] * c_bar[k];
            }
        }
        scores.push(s.tanh());
    }
    let m = scores.iter().cloned().fold(f64::MIN, f64::max);
    let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
    let alpha: Vec<f64> = scores.iter().map(|s| (s - m).exp() / z).collect();
    let mut pooled = vec![0.0; target[0].len()];
    for (a, h) in alpha.iter().zip(target) {
        for k in 0..h.len() {
            pooled[k] += a * h[k];
        }
    }
    (alpha, pooled)
}

/// `(max deviation from the scalar version, max |Σα − 1|)` over `n` random
/// instances with `T ≤ 4`, `w ≤ 3`.
pub fn attention_oracle(n: usize, seed: u64) -> (f64, f64) {
    let mut rng = rng(seed);
    let (mut worst, mut worst_sum) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let t = rng.gen_range(1..=4);
        let w_t = rng.gen_range(1..=3);
        let c = rng.gen_range(1..=4);
        let w_c = rng.gen_range(1..=3);
        let target = matrix(&mut rng, t, w_t, 2.0);
        let context = matrix(&mut rng, c, w_c, 2.0);
        let w = matrix(&mut rng, w_t, w_c, 2.0);
        let b = rng.gen_range(-1.0..1.0);
        let got = co_attention(
            to_array2(&target, w_t).view(),
            to_array2(&context, w_c).view(),
            to_array2(&w, w_c).view(),
            b,
        )
        .unwrap();
        let (alpha, pooled) = scalar_attention(&target, &context, &w, b);
        for (x, y) in got.alpha.iter().zip(&alpha) {
            worst = worst.max((x - y).abs());
        }
        for (x, y) in got.pooled.iter().zip(&pooled) {
            worst = worst.max((x - y).abs());
        }
        worst_sum = worst_sum.max((got.alpha.sum() - 1.0).abs());
    }
    (worst, worst_sum)
}

// ------------------------------------------------------------ fixtures

pub fn random_table(rng: &mut ChaCha8Rng, vocab: usize, dim: usize) -> EmbeddingTable {
    EmbeddingTable::from_entries(dim, (0..vocab).map(|i| (format!("t{i}"), uniform(rng, dim, 1.0)))).unwrap()
}

/// A record with news length `news_len`, `comment_lens.len()` real comments
/// and `slots` comment slots, everything padded to `l`. Padding carries
/// random ids and emotion rows so that mask handling is exercised.
pub fn random_input(
    rng: &mut ChaCha8Rng,
    vocab: usize,
    d: usize,
    l: usize,
    news_len: usize,
    comment_lens: &[usize],
    slots: usize,
) -> RecordInput {
    let seq = |len: usize, rng: &mut ChaCha8Rng| PaddedSequence {
        ids: (0..l).map(|_| rng.gen_range(0..vocab)).collect(),
        mask: (0..l).map(|t| t < len).collect(),
    };
    let news = seq(news_len, rng);
    let m = comment_lens.len();
    let comments = (0..slots)
        .map(|j| seq(if j < m { comment_lens[j] } else { 0 }, rng))
        .collect();
    RecordInput {
        news,
        comments,
        comment_mask: (0..slots).map(|j| j < m).collect(),
        news_emotion: Array1::from(uniform(rng, d, 1.0)),
        comment_emotion: to_array2(&matrix(rng, slots, d, 1.0), d),
        dual_emotion: Array1::from(uniform(rng, 5 * d, 1.0)),
    }
}

pub fn tiny_model(rng: &mut ChaCha8Rng, config: ModelConfig, seed: u64) -> Model {
    let mut model = Model::new(config, seed).unwrap();
    for block in model.params.blocks_mut() {
        if !block.is_weight {
            for v in block.data.iter_mut() {
                *v = rng.gen_range(-0.5..0.5);
            }
        }
    }
    model
}

// ------------------------------------------------------ gradient check

/// Gradient magnitude below which the relative error is taken against this
/// floor instead, so round-off on near-zero entries does not dominate.
pub const REL_FLOOR: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-5;

/// Worst relative error between analytic and central-difference gradients,
/// per parameter block, for a two-record batch (`d_h = 3`, `d = 7`, `L = 4`,
/// `M = 3`).
pub fn gradient_check(seed: u64, co_attention: bool) -> Vec<(String, f64)> {
    let mut rng = rng(seed);
    let (vocab, d_g, d, l) = (6, 5, 7, 4);
    let table = random_table(&mut rng, vocab, d_g);
    let config = ModelConfig {
        vocab_size: table.len(),
        embedding_dim: d_g,
        hidden_dim: 3,
        emotion_dim: d,
        co_attention,
        temporal: true,
    };
    let model = tiny_model(&mut rng, config, seed);
    let inputs = [
        random_input(&mut rng, table.len(), d, l, 4, &[4, 2, 3], 3),
        random_input(&mut rng, table.len(), d, l, 3, &[1, 4, 2], 3),
    ];
    let batch = [
        WeightedExample {
            input: &inputs[0],
            label: Label::Fake,
            weight: 0.5,
        },
        WeightedExample {
            input: &inputs[1],
            label: Label::True,
            weight: 0.5,
        },
    ];
    let l2 = 0.01;
    let (_, grad) = model.loss_and_grad(&batch, &table, l2).unwrap();
    let analytic: Vec<(String, Vec<f64>)> =
        grad.blocks().into_iter().map(|b| (b.name, b.data.to_vec())).collect();
    let mut report = vec![];
    for (bi, (name, g)) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for k in 0..g.len() {
            let mut plus = model.clone();
            plus.params.blocks_mut()[bi].data[k] += FD_STEP;
            let mut minus = model.clone();
            minus.params.blocks_mut()[bi].data[k] -= FD_STEP;
            let num = (plus.loss(&batch, &table, l2).unwrap() - minus.loss(&batch, &table, l2).unwrap()) / (2.0 * FD_STEP);
            let err = (g[k] - num).abs() / g[k].abs().max(num.abs()).max(REL_FLOOR);
            worst = worst.max(err);
        }
        report.push((name.clone(), worst));
    }
    report
}

// ------------------------------------------------------ mask soundness

/// Mutates every padded token id (to every vocabulary id) and every padded
/// emotion row, for all news lengths and real comment counts up to `L = 4`,
/// and counts outputs that changed. Returns `(cases, changed)`.
pub fn mask_soundness(seed: u64) -> (usize, usize) {
    let mut rng = rng(seed);
    let (vocab, d_g, d, l, slots) = (4, 3, 7, 4, 3);
    let table = random_table(&mut rng, vocab, d_g);
    let mut cases = 0;
    let mut changed = 0;
    for co_attention in [true, false] {
        let config = ModelConfig {
            vocab_size: table.len(),
            embedding_dim: d_g,
            hidden_dim: 2,
            emotion_dim: d,
            co_attention,
            temporal: true,
        };
        let model = tiny_model(&mut rng, config, seed);
        for news_len in 0..=l {
            for m in 0..=slots {
                let lens: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=l)).collect();
                let base = random_input(&mut rng, table.len(), d, l, news_len, &lens, slots);
                let reference = model.forward(&base, &table).unwrap();
                let mut check = |input: &RecordInput| {
                    let out = model.forward(input, &table).unwrap();
                    cases += 1;
                    if out.bundle != reference.bundle || out.probs != reference.probs {
                        changed += 1;
                    }
                };
                for t in news_len..l {
                    for id in 0..table.len() {
                        let mut x = base.clone();
                        x.news.ids[t] = id;
                        check(&x);
                    }
                }
                for j in 0..slots {
                    let len = if j < m { lens[j] } else { 0 };
                    for t in len..l {
                        for id in 0..table.len() {
                            let mut x = base.clone();
                            x.comments[j].ids[t] = id;
                            check(&x);
                        }
                    }
                    if j >= m {
                        let mut x = base.clone();
                        for k in 0..d {
                            x.comment_emotion[[j, k]] = rng.gen_range(-5.0..5.0);
                        }
                        check(&x);
                    }
                }
            }
        }
    }
    (cases, changed)
}

// ----------------------------------------------------------- metrics

pub struct MetricCase {
    pub labels: Vec<u8>,
    pub probs: Vec<f64>,
    /// (correct, total)
    pub accuracy: (usize, usize),
    pub macro_f1: f64,
    pub rmse: f64,
}

fn case(labels: &[u8], probs: &[f64], accuracy: (usize, usize), macro_f1: f64, rmse: f64) -> MetricCase {
    MetricCase {
        labels: labels.to_vec(),
        probs: probs.to_vec(),
        accuracy,
        macro_f1,
        rmse,
    }
}

/// Hand-worked confusion matrices. Per-class F1 is `2tp / (2tp + fp + fn)`,
/// 0 when the class is absent from labels and predictions; RMSE is written
/// as the square root of the summed squared errors over n.
pub fn metric_cases() -> Vec<MetricCase> {
    vec![
        case(&[0, 1], &[0.0, 1.0], (2, 2), 1.0, 0.0),
        // class 0: tp1 fp1 -> 2/3; class 1: tp0 fn1 -> 0
        case(&[0, 1], &[0.2, 0.2], (1, 2), (2.0 / 3.0) / 2.0, (0.68f64 / 2.0).sqrt()),
        // all predicted 0: class 0 2/(2+2) = 1/2, class 1 0
        case(&[0, 1, 1], &[0.5, 0.5, 0.5], (1, 3), 0.25, 0.5),
        // only class 1 present and predicted: F1 1 and 0
        case(&[1, 1, 1, 1], &[0.9, 0.8, 0.7, 0.6], (4, 4), 0.5, (0.30f64 / 4.0).sqrt()),
        case(&[1, 1, 1, 1], &[0.1, 0.2, 0.3, 0.4], (0, 4), 0.0, (2.30f64 / 4.0).sqrt()),
        case(&[0, 0, 0], &[0.1, 0.2, 0.3], (3, 3), 0.5, (0.14f64 / 3.0).sqrt()),
        case(&[0, 0, 0], &[0.6, 0.7, 0.9], (0, 3), 0.0, (1.66f64 / 3.0).sqrt()),
        // one of each cell: both F1 = 2/4
        case(&[0, 1, 0, 1], &[0.4, 0.6, 0.6, 0.4], (2, 4), 0.5, (1.04f64 / 4.0).sqrt()),
        // class 0: tp2 fp1 -> 4/5; class 1: tp2 fn1 -> 4/5
        case(&[0, 1, 0, 1, 1], &[0.1, 0.9, 0.2, 0.8, 0.3], (4, 5), 0.8, (0.59f64 / 5.0).sqrt()),
        case(
            &[1, 0, 1, 0, 1, 0],
            &[0.55, 0.45, 0.51, 0.49, 0.95, 0.05],
            (6, 6),
            1.0,
            (0.8902f64 / 6.0).sqrt(),
        ),
        // class 0: tp5 fp1 fn1 -> 10/12; class 1: tp1 fp1 fn1 -> 2/4
        case(
            &[1, 1, 0, 0, 0, 0, 0, 0],
            &[0.7, 0.3, 0.2, 0.6, 0.1, 0.1, 0.4, 0.0],
            (6, 8),
            (10.0 / 12.0 + 0.5) / 2.0,
            (1.16f64 / 8.0).sqrt(),
        ),
        case(&[0], &[0.5], (1, 1), 0.5, 0.5),
        case(&[1], &[0.5], (0, 1), 0.0, 0.5),
        case(&[1], &[1.0], (1, 1), 0.5, 0.0),
        // class 0: fn2 -> 0; class 1: tp1 fp2 -> 2/4
        case(&[0, 0, 1], &[1.0, 1.0, 1.0], (1, 3), 0.25, (2.0f64 / 3.0).sqrt()),
        // class 0: tp2 fp1 fn1 -> 4/6; class 1: tp3 fp1 fn1 -> 6/8
        case(
            &[1, 0, 0, 1, 1, 0, 1],
            &[0.81, 0.19, 0.52, 0.48, 0.99, 0.01, 0.75],
            (5, 7),
            (4.0 / 6.0 + 6.0 / 8.0) / 2.0,
            (0.6757f64 / 7.0).sqrt(),
        ),
        // 3/2/2/3 confusion: both F1 = 6/10
        case(
            &[0, 1, 1, 0, 1, 0, 0, 1, 1, 0],
            &[0.3, 0.7, 0.2, 0.8, 0.9, 0.1, 0.6, 0.4, 0.95, 0.05],
            (6, 10),
            0.6,
            (2.205f64 / 10.0).sqrt(),
        ),
        // 0.4999999 falls on the class-0 side
        case(
            &[1, 1, 1, 0],
            &[0.5000001, 0.4999999, 0.75, 0.25],
            (3, 4),
            (2.0 / 3.0 + 4.0 / 5.0) / 2.0,
            (0.62500000000002f64 / 4.0).sqrt(),
        ),
        case(&[0, 0, 1, 1], &[0.0, 0.0, 0.0, 0.0], (2, 4), (2.0 / 3.0) / 2.0, (2.0f64 / 4.0).sqrt()),
        // p = 0.5 predicts class 0. class 0: tp1 fp2 fn1 -> 2/5; class 1: tp2 fp1 fn2 -> 4/7
        case(
            &[1, 0, 1, 1, 0, 1],
            &[0.33, 0.66, 0.66, 0.99, 0.01, 0.5],
            (3, 6),
            (2.0 / 5.0 + 4.0 / 7.0) / 2.0,
            (1.2503f64 / 6.0).sqrt(),
        ),
    ]
}

/// `(cases, accuracy mismatches, worst macro-F1 error, worst RMSE error)`.
pub fn metric_oracle() -> (usize, usize, f64, f64) {
    let cases = metric_cases();
    let mut acc_bad = 0;
    let (mut f1_err, mut rmse_err) = (0.0f64, 0.0f64);
    for c in &cases {
        let labels: Vec<Label> = c.labels.iter().map(|&y| Label::from_index(y as usize).unwrap()).collect();
        let r = compute_metrics(&labels, &c.probs).unwrap();
        if r.accuracy != c.accuracy.0 as f64 / c.accuracy.1 as f64 {
            acc_bad += 1;
        }
        f1_err = f1_err.max((r.macro_f1 - c.macro_f1).abs());
        rmse_err = rmse_err.max((r.rmse - c.rmse).abs());
    }
    (cases.len(), acc_bad, f1_err, rmse_err)
}

// ------------------------------------------------------- pseudo-labels

/// Brute-force selection rule in integer percent units.
fn brute_admit(p_pct: u32, tau_p_pct: u32, tau_n_pct: u32) -> Option<Label> {
    if p_pct >= tau_p_pct {
        Some(Label::Fake)
    } else if 100 - p_pct >= tau_n_pct {
        Some(Label::True)
    } else {
        None
    }
}

/// `(comparisons, disagreements, monotonicity violations)` over
/// `p ∈ {0, 0.01, …, 1}` and `τ_p, τ_n ∈ {0.60, 0.65, …, 0.95}`.
pub fn pseudolabel_oracle() -> (usize, usize, usize) {
    let taus: Vec<u32> = (60..=95).step_by(5).collect();
    let (mut n, mut bad, mut mono) = (0, 0, 0);
    for &tp in &taus {
        for &tn in &taus {
            let th = Thresholds::new(tp as f64 / 100.0, tn as f64 / 100.0).unwrap();
            for i in 0..=100u32 {
                let p = i as f64 / 100.0;
                n += 1;
                if th.admit(p) != brute_admit(i, tp, tn) {
                    bad += 1;
                }
                // Raising either threshold must never admit something new.
                for &tp2 in taus.iter().filter(|&&t| t >= tp) {
                    for &tn2 in taus.iter().filter(|&&t| t >= tn) {
                        let hi = Thresholds::new(tp2 as f64 / 100.0, tn2 as f64 / 100.0).unwrap();
                        if let Some(label) = hi.admit(p) {
                            if th.admit(p) != Some(label) {
                                mono += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    (n, bad, mono)
}
