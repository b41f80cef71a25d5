//! Model inputs: token id sequences with prefix masks and precomputed emotion
//! features.

use ndarray::{Array1, Array2, Array3, ArrayView2};

use crate::corpus::NewsRecord;
use crate::emotion::{dual_emotion_for, EmotionConfig, EmotionExtractor};
use crate::error::{Error, Result};
use crate::resources::{EmbeddingTable, Resources, OOV_ID};

/// Number of leading `true` entries; errors if a `true` follows a `false`.
pub fn prefix_len(mask: impl IntoIterator<Item = bool>) -> Result<usize> {
    let mut len = 0;
    let mut ended = false;
    for m in mask {
        match (m, ended) {
            (true, false) => len += 1,
            (true, true) => return Err(Error::Shape("mask is not a prefix".into())),
            (false, _) => ended = true,
        }
    }
    Ok(len)
}

/// `B × L` token ids with a prefix mask (true = real token).
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBatch {
    pub token_ids: Array2<usize>,
    pub mask: Array2<bool>,
}

/// Looks up `B × L × d_g` vectors. Masked positions are zero regardless of id.
pub fn embed(batch: &SequenceBatch, table: &EmbeddingTable) -> Result<Array3<f64>> {
    let (b, l) = batch.token_ids.dim();
    if batch.mask.dim() != (b, l) {
        return Err(Error::Shape("mask does not match token ids".into()));
    }
    let mut out = Array3::zeros((b, l, table.dim()));
    for ((i, j), &id) in batch.token_ids.indexed_iter() {
        if !batch.mask[[i, j]] {
            continue;
        }
        if id >= table.len() {
            return Err(Error::Shape(format!("token id {id} outside table of {} rows", table.len())));
        }
        out.slice_mut(ndarray::s![i, j, ..]).assign(&table.row(id));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PaddedSequence {
    pub ids: Vec<usize>,
    pub mask: Vec<bool>,
}

impl PaddedSequence {
    pub fn new(ids: Vec<usize>, pad_to: Option<usize>) -> Self {
        let n = ids.len();
        let mut seq = PaddedSequence {
            mask: vec![true; n],
            ids,
        };
        if let Some(l) = pad_to {
            if l > n {
                seq.ids.resize(l, OOV_ID);
                seq.mask.resize(l, false);
            }
        }
        seq
    }

    pub fn len(&self) -> Result<usize> {
        if self.ids.len() != self.mask.len() {
            return Err(Error::Shape("ids and mask lengths differ".into()));
        }
        prefix_len(self.mask.iter().copied())
    }

    pub fn is_empty(&self) -> bool {
        self.mask.first() != Some(&true)
    }

    /// `len × d_g` embeddings of the unmasked prefix.
    pub fn embedded(&self, table: &EmbeddingTable) -> Result<Array2<f64>> {
        let len = self.len()?;
        let mut out = Array2::zeros((len, table.dim()));
        for (i, &id) in self.ids[..len].iter().enumerate() {
            if id >= table.len() {
                return Err(Error::Shape(format!("token id {id} outside table of {} rows", table.len())));
            }
            out.row_mut(i).assign(&table.row(id));
        }
        Ok(out)
    }
}

/// Everything the network reads for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordInput {
    pub news: PaddedSequence,
    /// One slot per comment, padded slots have all-false masks.
    pub comments: Vec<PaddedSequence>,
    /// Prefix mask over comment slots.
    pub comment_mask: Vec<bool>,
    /// `d`
    pub news_emotion: Array1<f64>,
    /// One row per comment slot, `slots × d`.
    pub comment_emotion: Array2<f64>,
    /// `5d`, computed from the real comments only.
    pub dual_emotion: Array1<f64>,
}

impl RecordInput {
    /// Number of real comments.
    pub fn n_comments(&self) -> Result<usize> {
        if self.comments.len() != self.comment_mask.len() || self.comment_emotion.nrows() != self.comment_mask.len() {
            return Err(Error::Shape(format!(
                "{} comment slots, {} mask entries, {} emotion rows",
                self.comments.len(),
                self.comment_mask.len(),
                self.comment_emotion.nrows()
            )));
        }
        prefix_len(self.comment_mask.iter().copied())
    }

    pub fn emotion_rows(&self, m: usize) -> ArrayView2<'_, f64> {
        self.comment_emotion.slice(ndarray::s![..m, ..])
    }
}

/// Turns records into [`RecordInput`]s: tokenization, truncation to the
/// configured text length and comment count (earliest comments kept), and
/// emotion features.
#[derive(Debug, Clone, Copy)]
pub struct Featurizer<'a> {
    pub resources: &'a Resources,
    pub emotion: EmotionConfig,
    pub max_text_len: usize,
    pub max_comments: usize,
    /// Pad texts to `max_text_len` and comment slots to `max_comments`.
    pub pad: bool,
}

impl<'a> Featurizer<'a> {
    pub fn new(resources: &'a Resources, emotion: EmotionConfig, max_text_len: usize, max_comments: usize) -> Self {
        Featurizer {
            resources,
            emotion,
            max_text_len,
            max_comments,
            pad: false,
        }
    }

    pub fn extractor(&self) -> EmotionExtractor<'a> {
        EmotionExtractor::new(&self.resources.lexicon, &self.resources.tokenizer, self.emotion)
    }

    pub fn emotion_dim(&self) -> usize {
        self.extractor().width()
    }

    fn sequence(&self, text: &str) -> PaddedSequence {
        let table = &self.resources.embeddings;
        let ids: Vec<usize> = self
            .resources
            .tokenizer
            .tokenize(text)
            .iter()
            .take(self.max_text_len)
            .map(|t| table.id(t))
            .collect();
        PaddedSequence::new(ids, self.pad.then_some(self.max_text_len))
    }

    pub fn prepare(&self, record: &NewsRecord) -> Result<RecordInput> {
        let ex = self.extractor();
        let d = ex.width();
        let news_emotion = ex.vector(&record.news_text).values;
        let m = record.comments.len().min(self.max_comments);
        let slots = if self.pad { self.max_comments.max(m) } else { m };
        let real = ex.comment_matrix_capped(record, m).rows;
        let mut comment_emotion = Array2::zeros((slots, d));
        comment_emotion.slice_mut(ndarray::s![..m, ..]).assign(&real);
        let mut comments: Vec<PaddedSequence> = record.comments[..m].iter().map(|c| self.sequence(&c.text)).collect();
        let pad_seq = PaddedSequence::new(Vec::new(), self.pad.then_some(self.max_text_len));
        comments.resize(slots, pad_seq);
        let mut comment_mask = vec![true; m];
        comment_mask.resize(slots, false);
        let dual_emotion = dual_emotion_for(news_emotion.view(), real.view())?;
        Ok(RecordInput {
            news: self.sequence(&record.news_text),
            comments,
            comment_mask,
            news_emotion,
            comment_emotion,
            dual_emotion,
        })
    }

    pub fn prepare_all(&self, records: &[NewsRecord]) -> Result<Vec<RecordInput>> {
        records.iter().map(|r| self.prepare(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_entries(
            2,
            vec![
                ("a".to_string(), vec![1.0, 2.0]),
                ("b".to_string(), vec![3.0, 4.0]),
                ("c".to_string(), vec![5.0, 6.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn embed_stacks_rows() {
        let t = table();
        let batch = SequenceBatch {
            token_ids: ndarray::array![[1, 2, 3]],
            mask: ndarray::array![[true, true, true]],
        };
        let e = embed(&batch, &t).unwrap();
        assert_eq!(e.shape(), &[1, 3, 2]);
        assert_eq!(e[[0, 2, 1]], 6.0);
    }

    #[test]
    fn embed_oov_and_masked_are_zero() {
        let t = table();
        let batch = SequenceBatch {
            token_ids: ndarray::array![[OOV_ID, OOV_ID, 2]],
            mask: ndarray::array![[true, true, false]],
        };
        let e = embed(&batch, &t).unwrap();
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embed_rejects_out_of_range_ids() {
        let batch = SequenceBatch {
            token_ids: ndarray::array![[9]],
            mask: ndarray::array![[true]],
        };
        assert!(embed(&batch, &table()).is_err());
    }

    #[test]
    fn prefix_masks() {
        assert_eq!(prefix_len([true, true, false]).unwrap(), 2);
        assert_eq!(prefix_len([false, false]).unwrap(), 0);
        assert!(prefix_len([true, false, true]).is_err());
    }
}
