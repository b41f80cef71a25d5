//! Lexicon-based emotion features: per-text emotion vectors, the comment
//! emotion matrix, pooled crowd emotion, the publisher/crowd gap and the
//! concatenated dual-emotion feature.
//!
//! An emotion vector is five spans laid end to end:
//!
//! | span    | width  | value                                                     |
//! |---------|--------|-----------------------------------------------------------|
//! | `cate`  | n_cate | category hit counts normalized to sum 1 (zeros if no hit) |
//! | `lex`   | n_cate | category hit counts divided by token count                |
//! | `int`   | 1      | mean intensity over intensity-lexicon hits                |
//! | `score` | 1      | negation-aware polarity sum divided by token count        |
//! | `aux`   | 5      | token fractions: `!`, `?`, emoticons, pronouns, negations |

use std::ops::Range;

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::NewsRecord;
use crate::error::{Error, Result};
use crate::resources::{EmotionLexicon, Tokenizer};

pub const AUX_WIDTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmotionConfig {
    /// How many preceding tokens a negation word reaches.
    pub negation_window: usize,
}

impl Default for EmotionConfig {
    fn default() -> Self {
        EmotionConfig { negation_window: 2 }
    }
}

/// Span layout of an emotion vector for a lexicon with `n_cate` categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmotionLayout {
    pub n_cate: usize,
}

impl EmotionLayout {
    pub fn width(&self) -> usize {
        2 * self.n_cate + 2 + AUX_WIDTH
    }
    pub fn cate(&self) -> Range<usize> {
        0..self.n_cate
    }
    pub fn lex(&self) -> Range<usize> {
        self.n_cate..2 * self.n_cate
    }
    pub fn int(&self) -> usize {
        2 * self.n_cate
    }
    pub fn score(&self) -> usize {
        2 * self.n_cate + 1
    }
    pub fn aux(&self) -> Range<usize> {
        2 * self.n_cate + 2..self.width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionVector {
    pub values: Array1<f64>,
    pub layout: EmotionLayout,
}

impl EmotionVector {
    pub fn cate(&self) -> ArrayView1<'_, f64> {
        self.values.slice(s![self.layout.cate()])
    }
    pub fn lex(&self) -> ArrayView1<'_, f64> {
        self.values.slice(s![self.layout.lex()])
    }
    pub fn intensity(&self) -> f64 {
        self.values[self.layout.int()]
    }
    pub fn score(&self) -> f64 {
        self.values[self.layout.score()]
    }
    pub fn aux(&self) -> ArrayView1<'_, f64> {
        self.values.slice(s![self.layout.aux()])
    }
}

/// Rows are comment emotion vectors in comment time order.
#[derive(Debug, Clone, PartialEq)]
pub struct CommentEmotionMatrix {
    pub rows: Array2<f64>,
}

impl CommentEmotionMatrix {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }
    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }
}

/// Computes emotion features with one lexicon/tokenizer pair.
#[derive(Debug, Clone, Copy)]
pub struct EmotionExtractor<'a> {
    pub lexicon: &'a EmotionLexicon,
    pub tokenizer: &'a Tokenizer,
    pub config: EmotionConfig,
}

impl<'a> EmotionExtractor<'a> {
    pub fn new(lexicon: &'a EmotionLexicon, tokenizer: &'a Tokenizer, config: EmotionConfig) -> Self {
        EmotionExtractor {
            lexicon,
            tokenizer,
            config,
        }
    }

    pub fn layout(&self) -> EmotionLayout {
        EmotionLayout {
            n_cate: self.lexicon.n_categories(),
        }
    }

    pub fn width(&self) -> usize {
        self.layout().width()
    }

    pub fn vector(&self, text: &str) -> EmotionVector {
        self.vector_from_tokens(&self.tokenizer.tokenize(text))
    }

    pub fn vector_from_tokens(&self, tokens: &[String]) -> EmotionVector {
        let layout = self.layout();
        let lex = self.lexicon;
        let mut values = Array1::zeros(layout.width());
        if tokens.is_empty() {
            return EmotionVector { values, layout };
        }
        let n = tokens.len() as f64;
        let mut cate_counts = vec![0.0; layout.n_cate];
        let (mut int_sum, mut int_hits) = (0.0, 0usize);
        let mut score = 0.0;
        let mut aux = [0.0; AUX_WIDTH];

        for (i, tok) in tokens.iter().enumerate() {
            for &c in lex.categories_of(tok) {
                cate_counts[c] += 1.0;
            }
            if let Some(&v) = lex.intensity.get(tok) {
                int_sum += v;
                int_hits += 1;
            }
            if let Some(&p) = lex.polarity.get(tok) {
                let lo = i.saturating_sub(self.config.negation_window);
                let negated = tokens[lo..i].iter().any(|t| lex.negation_words.contains(t));
                score += if negated { -p } else { p };
            }
            match tok.as_str() {
                "!" | "！" => aux[0] += 1.0,
                "?" | "？" => aux[1] += 1.0,
                _ => {}
            }
            if self.tokenizer.is_emoticon(tok) || lex.emoticons.contains(tok) {
                aux[2] += 1.0;
            }
            if lex.pronouns.contains(tok) {
                aux[3] += 1.0;
            }
            if lex.negation_words.contains(tok) {
                aux[4] += 1.0;
            }
        }

        let hits: f64 = cate_counts.iter().sum();
        for (c, &count) in cate_counts.iter().enumerate() {
            if hits > 0.0 {
                values[layout.cate().start + c] = count / hits;
            }
            values[layout.lex().start + c] = count / n;
        }
        if int_hits > 0 {
            values[layout.int()] = int_sum / int_hits as f64;
        }
        values[layout.score()] = score / n;
        for (k, &a) in aux.iter().enumerate() {
            values[layout.aux().start + k] = a / n;
        }
        EmotionVector { values, layout }
    }

    /// One row per comment, in the record's comment order.
    pub fn comment_matrix(&self, record: &NewsRecord) -> CommentEmotionMatrix {
        self.comment_matrix_capped(record, usize::MAX)
    }

    /// Like [`comment_matrix`](Self::comment_matrix) but keeps only the
    /// earliest `max_comments` comments.
    pub fn comment_matrix_capped(&self, record: &NewsRecord, max_comments: usize) -> CommentEmotionMatrix {
        let m = record.comments.len().min(max_comments);
        let mut rows = Array2::zeros((m, self.width()));
        for (i, c) in record.comments.iter().take(m).enumerate() {
            rows.row_mut(i).assign(&self.vector(&c.text).values);
        }
        CommentEmotionMatrix { rows }
    }
}

/// Crowd emotion pools: column-wise mean, column-wise max, and their
/// concatenation. Both pools are zero when there are no comments.
pub fn pooled_comment_emotion(rows: ArrayView2<'_, f64>) -> (Array1<f64>, Array1<f64>, Array1<f64>) {
    let d = rows.ncols();
    if rows.nrows() == 0 {
        return (Array1::zeros(d), Array1::zeros(d), Array1::zeros(2 * d));
    }
    let mean = rows.mean_axis(Axis(0)).expect("non-empty");
    let max = rows.fold_axis(Axis(0), f64::NEG_INFINITY, |&a, &b| a.max(b));
    let both = concatenate![Axis(0), mean, max];
    (mean, max, both)
}

/// `(news - mean) ⊕ (news - max)`.
pub fn gap_emotion(
    news: ArrayView1<'_, f64>,
    comment_mean: ArrayView1<'_, f64>,
    comment_max: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    if news.len() != comment_mean.len() || news.len() != comment_max.len() {
        return Err(Error::Shape(format!(
            "gap inputs have widths {}, {}, {}",
            news.len(),
            comment_mean.len(),
            comment_max.len()
        )));
    }
    Ok(concatenate![Axis(0), &news - &comment_mean, &news - &comment_max])
}

/// `news ⊕ comment ⊕ gap`, width `5d`.
pub fn dual_emotion(
    news: ArrayView1<'_, f64>,
    comment: ArrayView1<'_, f64>,
    gap: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    let d = news.len();
    if comment.len() != 2 * d || gap.len() != 2 * d {
        return Err(Error::Shape(format!(
            "dual emotion expects widths (d, 2d, 2d), got ({d}, {}, {})",
            comment.len(),
            gap.len()
        )));
    }
    Ok(concatenate![Axis(0), news, comment, gap])
}

/// Full dual-emotion feature for a news vector and its comment matrix.
pub fn dual_emotion_for(news: ArrayView1<'_, f64>, comments: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    let (mean, max, pooled) = pooled_comment_emotion(comments);
    let gap = gap_emotion(news, mean.view(), max.view())?;
    dual_emotion(news, pooled.view(), gap.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

    fn lexicon() -> EmotionLexicon {
        let mut cats = BTreeMap::new();
        cats.insert("joy".to_string(), BTreeSet::from(["w".to_string(), "glad".to_string()]));
        cats.insert("sorrow".to_string(), BTreeSet::from(["sad".to_string()]));
        EmotionLexicon::new(
            cats,
            HashMap::from([("w".to_string(), 0.8), ("sad".to_string(), 0.4)]),
            HashMap::from([("w".to_string(), 0.6), ("sad".to_string(), -0.5)]),
            HashSet::from(["not".to_string()]),
            HashSet::from(["i".to_string(), "you".to_string()]),
            HashSet::from([":)".to_string()]),
        )
        .unwrap()
    }

    fn with<R>(f: impl FnOnce(EmotionExtractor<'_>) -> R) -> R {
        let lex = lexicon();
        let tok = Tokenizer::new(lex.emoticons.iter().cloned());
        f(EmotionExtractor::new(&lex, &tok, EmotionConfig::default()))
    }

    #[test]
    fn empty_text_is_zero() {
        with(|ex| {
            let v = ex.vector("");
            assert_eq!(v.values.len(), 11);
            assert!(v.values.iter().all(|&x| x == 0.0));
        });
    }

    #[test]
    fn single_joy_word() {
        with(|ex| {
            let v = ex.vector("w");
            assert_eq!(v.cate().to_vec(), vec![1.0, 0.0]);
            assert_eq!(v.lex().to_vec(), vec![1.0, 0.0]);
            assert_eq!(v.intensity(), 0.8);
            assert_eq!(v.score(), 0.6);
            assert!(v.aux().iter().all(|&x| x == 0.0));
        });
    }

    #[test]
    fn duplicated_word_keeps_normalized_spans() {
        with(|ex| {
            let one = ex.vector("w");
            let two = ex.vector("w w");
            assert_eq!(one.cate(), two.cate());
            assert_eq!(one.lex(), two.lex());
            assert_eq!(one.intensity(), two.intensity());
            assert_eq!(one.score(), two.score());
        });
    }

    #[test]
    fn negation_flips_polarity_within_window() {
        with(|ex| {
            // "not" two tokens before "sad" is inside the default window.
            let v = ex.vector("not very sad");
            assert!((v.score() - 0.5 / 3.0).abs() < 1e-15);
            let far = ex.vector("not so very sad");
            assert!((far.score() + 0.5 / 4.0).abs() < 1e-15);
        });
    }

    #[test]
    fn aux_fractions() {
        with(|ex| {
            let v = ex.vector("you ! ? :) not");
            assert_eq!(v.aux().to_vec(), vec![0.2; 5]);
        });
    }

    #[test]
    fn comment_matrix_rows_follow_comments() {
        use crate::corpus::{Comment, NewsRecord};
        with(|ex| {
            let c = |t: &str, ts| Comment { text: t.into(), timestamp: ts, source_order: 0 };
            let r = NewsRecord::new("r", "n", vec![c("sad", 2), c("w", 1), c("glad day", 3)], None);
            let m = ex.comment_matrix(&r);
            assert_eq!(m.len(), 3);
            assert_eq!(m.rows.row(0), ex.vector("w").values);
            assert_eq!(m.rows.row(1), ex.vector("sad").values);
            assert_eq!(m.rows.row(2), ex.vector("glad day").values);
            let empty = ex.comment_matrix(&NewsRecord::new("e", "n", vec![], None));
            assert_eq!(empty.rows.dim(), (0, 11));
        });
    }

    #[test]
    fn pooling_arithmetic() {
        let rows = array![[0.0, 1.0], [2.0, 3.0]];
        let (mean, max, both) = pooled_comment_emotion(rows.view());
        assert_eq!(mean, array![1.0, 2.0]);
        assert_eq!(max, array![2.0, 3.0]);
        assert_eq!(both, array![1.0, 2.0, 2.0, 3.0]);
    }

    #[test]
    fn pooling_constant_and_empty() {
        let v = array![0.3, -0.2, 0.5];
        let rows = ndarray::stack![Axis(0), v, v, v];
        let (mean, max, _) = pooled_comment_emotion(rows.view());
        assert!((&mean - &v).iter().all(|d| d.abs() < 1e-15));
        assert_eq!(max, v);
        let (mean, max, both) = pooled_comment_emotion(Array2::<f64>::zeros((0, 3)).view());
        assert_eq!(mean, Array1::<f64>::zeros(3));
        assert_eq!(max, Array1::<f64>::zeros(3));
        assert_eq!(both.len(), 6);
    }

    #[test]
    fn gap_arithmetic() {
        let g = gap_emotion(array![1.0, 0.0].view(), array![0.0, 0.0].view(), array![1.0, 1.0].view()).unwrap();
        assert_eq!(g, array![1.0, 0.0, 0.0, -1.0]);
        let v = array![0.4, -1.0, 2.0];
        let zero = gap_emotion(v.view(), v.view(), v.view()).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        assert!(gap_emotion(v.view(), array![1.0].view(), v.view()).is_err());
    }

    #[test]
    fn gap_is_antisymmetric_in_first_half() {
        let a = array![0.1, 0.7];
        let b = array![0.5, -0.2];
        let max = array![0.9, 0.9];
        let g1 = gap_emotion(a.view(), b.view(), max.view()).unwrap();
        let g2 = gap_emotion(b.view(), a.view(), max.view()).unwrap();
        assert_eq!(g1.slice(s![..2]), -&g2.slice(s![..2]));
    }

    #[test]
    fn dual_width_and_slices() {
        let news = array![1.0, 2.0];
        let comment = array![3.0, 4.0, 5.0, 6.0];
        let gap = array![7.0, 8.0, 9.0, 10.0];
        let dual = dual_emotion(news.view(), comment.view(), gap.view()).unwrap();
        assert_eq!(dual.len(), 10);
        assert_eq!(dual.slice(s![0..2]), news);
        assert_eq!(dual.slice(s![2..6]), comment);
        assert_eq!(dual.slice(s![6..10]), gap);
        assert!(dual_emotion(news.view(), gap.slice(s![..3]), gap.view()).is_err());
        let zeros = dual_emotion(
            Array1::zeros(2).view(),
            Array1::zeros(4).view(),
            Array1::zeros(4).view(),
        )
        .unwrap();
        assert!(zeros.iter().all(|&x| x == 0.0));
    }
}
