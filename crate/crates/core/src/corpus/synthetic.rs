//! Synthetic corpus in which the only class signal is the temporal order of
//! comment emotions.
//!
//! Every temporal record carries `comments_per_record` comments, half with a
//! positive emotion word and half with a negative one, drawn from the same
//! word pools for both classes. Fake records alternate polarity
//! (`+ - + - ...`); true records keep one polarity for the first half and the
//! other for the second half (a single mood shift). Per-record multisets of
//! comment emotions therefore have the same distribution in both classes and
//! any order-invariant pooling sees no difference.
//!
//! With `interaction_fraction > 0`, that share of records instead carries an
//! emotion word in the news text and constant-polarity comments, and is fake
//! exactly when the comment polarity conflicts with the news polarity. Any
//! classifier that is additive over separately encoded news and comment
//! features is capped at 3/4 accuracy on these records; news/comment
//! interaction is needed to go further.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Comment, Label, NewsRecord};
use crate::augment::SynonymDictionary;
use crate::error::{Error, Result};
use crate::resources::{EmbeddingTable, EmotionLexicon};

pub const POSITIVE_WORDS: [&str; 6] = ["happy", "glad", "joyful", "delighted", "cheerful", "hopeful"];
pub const NEGATIVE_WORDS: [&str; 6] = ["sad", "angry", "upset", "gloomy", "furious", "miserable"];
const WORD_STRENGTH: [f64; 6] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    /// Even, at least 2.
    pub comments_per_record: usize,
    pub filler_vocab: usize,
    pub news_len_min: usize,
    pub news_len_max: usize,
    pub comment_filler_min: usize,
    pub comment_filler_max: usize,
    pub embedding_dim: usize,
    /// Share of records whose label is news/comment emotion conflict.
    pub interaction_fraction: f64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            comments_per_record: 8,
            filler_vocab: 40,
            news_len_min: 5,
            news_len_max: 8,
            comment_filler_min: 2,
            comment_filler_max: 4,
            embedding_dim: 16,
            interaction_fraction: 0.0,
        }
    }
}

fn filler(i: usize) -> String {
    format!("w{i:03}")
}

#[derive(Clone, Copy)]
enum Kind {
    Temporal,
    Interaction,
}

pub fn generate_synthetic(n_records: usize, seed: u64, params: &SyntheticParams) -> Result<Vec<NewsRecord>> {
    if n_records < 20 || n_records % 2 != 0 {
        return Err(Error::Config(format!(
            "synthetic corpus needs an even record count >= 20, got {n_records}"
        )));
    }
    let m = params.comments_per_record;
    if m < 2 || m % 2 != 0 {
        return Err(Error::Config(format!("comments_per_record must be even and >= 2, got {m}")));
    }
    if !(0.0..=1.0).contains(&params.interaction_fraction)
        || params.filler_vocab == 0
        || params.news_len_min == 0
        || params.news_len_min > params.news_len_max
        || params.comment_filler_min > params.comment_filler_max
    {
        return Err(Error::Config("inconsistent synthetic parameters".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n_records / 2;
    let n_interaction = (params.interaction_fraction * half as f64).round() as usize;
    let mut plan: Vec<(Label, Kind)> = Vec::with_capacity(n_records);
    for label in [Label::Fake, Label::True] {
        for i in 0..half {
            let kind = if i < n_interaction { Kind::Interaction } else { Kind::Temporal };
            plan.push((label, kind));
        }
    }
    plan.shuffle(&mut rng);

    let mut records = Vec::with_capacity(n_records);
    for (idx, (label, kind)) in plan.into_iter().enumerate() {
        let (news_sign, signs): (Option<bool>, Vec<bool>) = match (kind, label) {
            (Kind::Temporal, Label::Fake) => (None, (0..m).map(|k| k % 2 == 0).collect()),
            (Kind::Temporal, Label::True) => {
                let first = rng.gen_bool(0.5);
                (None, (0..m).map(|k| if k < m / 2 { first } else { !first }).collect())
            }
            (Kind::Interaction, _) => {
                let news = rng.gen_bool(0.5);
                let comments = if label == Label::Fake { !news } else { news };
                (Some(news), vec![comments; m])
            }
        };

        let news_len = rng.gen_range(params.news_len_min..=params.news_len_max);
        let mut news: Vec<String> = (0..news_len)
            .map(|_| filler(rng.gen_range(0..params.filler_vocab)))
            .collect();
        if let Some(sign) = news_sign {
            let pos = rng.gen_range(0..=news.len());
            news.insert(pos, emotion_word(&mut rng, sign));
        }

        let mut ts = 1_600_000_000 + rng.gen_range(0..1_000_000i64);
        let mut comments = Vec::with_capacity(m);
        for (k, &positive) in signs.iter().enumerate() {
            let n_fill = rng.gen_range(params.comment_filler_min..=params.comment_filler_max);
            let mut words: Vec<String> = (0..n_fill)
                .map(|_| filler(rng.gen_range(0..params.filler_vocab)))
                .collect();
            let pos = rng.gen_range(0..=words.len());
            words.insert(pos, emotion_word(&mut rng, positive));
            ts += rng.gen_range(1..600i64);
            comments.push(Comment {
                text: words.join(" "),
                timestamp: ts,
                source_order: k,
            });
        }
        records.push(NewsRecord::new(format!("syn{idx:05}"), news.join(" "), comments, Some(label)));
    }
    Ok(records)
}

fn emotion_word(rng: &mut ChaCha8Rng, positive: bool) -> String {
    let pool = if positive { &POSITIVE_WORDS } else { &NEGATIVE_WORDS };
    pool[rng.gen_range(0..pool.len())].to_string()
}

/// Lexicon matching the synthetic emotion words: `joy` for positive words,
/// `sorrow` for negative ones.
pub fn synthetic_lexicon() -> EmotionLexicon {
    let mut cats = BTreeMap::new();
    cats.insert("joy".to_string(), POSITIVE_WORDS.iter().map(|w| w.to_string()).collect::<BTreeSet<_>>());
    cats.insert("sorrow".to_string(), NEGATIVE_WORDS.iter().map(|w| w.to_string()).collect::<BTreeSet<_>>());
    let mut intensity = HashMap::new();
    let mut polarity = HashMap::new();
    for (i, &s) in WORD_STRENGTH.iter().enumerate() {
        intensity.insert(POSITIVE_WORDS[i].to_string(), s);
        intensity.insert(NEGATIVE_WORDS[i].to_string(), s);
        polarity.insert(POSITIVE_WORDS[i].to_string(), s);
        polarity.insert(NEGATIVE_WORDS[i].to_string(), -s);
    }
    let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<HashSet<_>>();
    EmotionLexicon::new(
        cats,
        intensity,
        polarity,
        set(&["not", "never", "no"]),
        set(&["i", "you", "we", "me", "us"]),
        set(&[":)", ":("]),
    )
    .expect("synthetic lexicon is consistent")
}

/// Random word vectors for the synthetic vocabulary.
pub fn synthetic_embeddings(params: &SyntheticParams, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0e3b);
    let words = (0..params.filler_vocab)
        .map(filler)
        .chain(POSITIVE_WORDS.iter().chain(NEGATIVE_WORDS.iter()).map(|w| w.to_string()));
    let entries: Vec<(String, Vec<f64>)> = words
        .map(|w| {
            let v = (0..params.embedding_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (w, v)
        })
        .collect();
    EmbeddingTable::from_entries(params.embedding_dim, entries).expect("consistent widths")
}

/// Filler words paired as mutual synonyms (`w000` <-> `w001`, ...).
pub fn synthetic_synonyms(params: &SyntheticParams) -> SynonymDictionary {
    let mut map = HashMap::new();
    for i in (0..params.filler_vocab.saturating_sub(1)).step_by(2) {
        map.insert(filler(i), vec![filler(i + 1)]);
        map.insert(filler(i + 1), vec![filler(i)]);
    }
    SynonymDictionary::new(map)
}
