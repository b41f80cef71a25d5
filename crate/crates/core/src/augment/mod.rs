//! Unlabeled text variants by token substitution and back-translation.
//!
//! Variants never carry a label. Labels are assigned later, either by
//! confidence-gated pseudo-labeling or, for the label-inheriting ablation, by
//! looking up the parent record.

mod translate;

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use translate::{
    back_translate, default_pivot, HttpTranslator, RetryPolicy, StubTranslator, Translator, API_KEY_VAR,
};

use crate::corpus::{Comment, NewsRecord};
use crate::error::{Error, Result};
use crate::resources::{EmbeddingTable, EmotionLexicon, Tokenizer};

/// Neighbors considered by the embedding strategy.
pub const NEIGHBOR_POOL: usize = 10;
/// Largest allowed substitution rate.
pub const MAX_RATE: f64 = 0.3;

pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "if", "of", "to", "in", "on", "at", "by", "for", "with", "from", "as",
    "is", "are", "was", "were", "be", "been", "am", "it", "its", "this", "that", "these", "those", "there", "here",
    "do", "does", "did", "has", "have", "had", "so", "than", "then", "too", "very", "can", "will", "just", "what",
    "which", "who", "whom", "how", "when", "where", "why", "all", "any", "some", "such", "only", "own", "same",
    "的", "了", "是", "在", "和", "也", "就", "都", "而", "及", "与",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Synonym,
    Embedding,
    MaskedLm,
    BackTranslation,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synonym" => Ok(Strategy::Synonym),
            "embedding" => Ok(Strategy::Embedding),
            "masked_lm" => Ok(Strategy::MaskedLm),
            "back_translation" => Ok(Strategy::BackTranslation),
            other => Err(Error::Config(format!("unknown augmentation strategy `{other}`"))),
        }
    }
}

/// Word → synonyms, all lowercased.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymDictionary {
    map: HashMap<String, Vec<String>>,
}

impl SynonymDictionary {
    pub fn new(map: HashMap<String, Vec<String>>) -> Self {
        let map = map
            .into_iter()
            .map(|(k, v)| {
                let k = k.trim().to_lowercase();
                let v: Vec<String> = v
                    .into_iter()
                    .map(|s| s.trim().to_lowercase())
                    .filter(|s| !s.is_empty() && *s != k)
                    .collect();
                (k, v)
            })
            .filter(|(_, v)| !v.is_empty())
            .collect();
        SynonymDictionary { map }
    }

    /// Reads `word<TAB>syn1,syn2,...` lines (synonyms may also be tab
    /// separated). Blank and `#` lines are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut map: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, i + 1, "expected word<TAB>synonyms"))?;
            map.entry(word.to_string())
                .or_default()
                .extend(rest.split(['\t', ',']).map(str::to_string));
        }
        Ok(SynonymDictionary::new(map))
    }

    /// Writes the dictionary in the format [`load`](Self::load) reads, sorted.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut words: Vec<&String> = self.map.keys().collect();
        words.sort();
        let text: String = words
            .into_iter()
            .map(|w| format!("{w}\t{}\n", self.map[w].join(",")))
            .collect();
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn synonyms(&self, word: &str) -> &[String] {
        self.map.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Source of masked-token predictions.
pub trait MaskedLmProvider: Send + Sync {
    /// Best replacement for `tokens[position]`, or `None`.
    fn predict(&self, tokens: &[String], position: usize) -> Option<String>;
}

/// Resources the substitution strategies draw on.
#[derive(Clone, Copy)]
pub struct Substituter<'a> {
    pub tokenizer: &'a Tokenizer,
    pub lexicon: &'a EmotionLexicon,
    pub stopwords: &'a HashSet<String>,
    pub synonyms: Option<&'a SynonymDictionary>,
    pub embeddings: Option<&'a EmbeddingTable>,
    pub masked_lm: Option<&'a dyn MaskedLmProvider>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substitution {
    pub text: String,
    pub edit_count: usize,
}

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

impl<'a> Substituter<'a> {
    fn eligible(&self, token: &str) -> bool {
        !is_punctuation(token)
            && !self.stopwords.contains(token)
            && !self.lexicon.is_emotion_word(token)
            && !self.lexicon.negation_words.contains(token)
            && !self.tokenizer.is_emoticon(token)
    }

    fn embedding_candidate(&self, token: &str) -> Option<String> {
        let table = self.embeddings?;
        table
            .nearest_neighbors(token, NEIGHBOR_POOL)
            .into_iter()
            .filter_map(|(id, _)| table.token(id))
            .find(|t| self.eligible(t))
            .map(str::to_string)
    }

    fn candidate(&self, strategy: Strategy, tokens: &[String], pos: usize, rng: &mut ChaCha8Rng) -> Option<String> {
        let token = &tokens[pos];
        match strategy {
            Strategy::Synonym => self.synonyms?.synonyms(token).choose(rng).cloned(),
            Strategy::Embedding => self.embedding_candidate(token),
            Strategy::MaskedLm => match self.masked_lm {
                Some(lm) => lm.predict(tokens, pos).filter(|t| t != token),
                None => self.embedding_candidate(token),
            },
            Strategy::BackTranslation => None,
        }
    }

    /// Replaces up to `⌈rate · eligible⌉` tokens one-for-one. Eligible tokens
    /// are visited in a seeded random order; those without a candidate are
    /// passed over. The result is the token sequence joined by spaces.
    pub fn substitute(&self, text: &str, strategy: Strategy, rate: f64, seed: u64) -> Result<Substitution> {
        if !(rate > 0.0 && rate <= MAX_RATE) {
            return Err(Error::Config(format!("substitution rate {rate} outside (0, {MAX_RATE}]")));
        }
        self.check_resources(strategy)?;
        let mut tokens = self.tokenizer.tokenize(text);
        if tokens.is_empty() {
            return Ok(Substitution {
                text: text.to_string(),
                edit_count: 0,
            });
        }
        let mut positions: Vec<usize> = (0..tokens.len()).filter(|&i| self.eligible(&tokens[i])).collect();
        let quota = (rate * positions.len() as f64).ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        positions.shuffle(&mut rng);
        let mut edits = 0;
        for pos in positions {
            if edits == quota {
                break;
            }
            if let Some(new) = self.candidate(strategy, &tokens, pos, &mut rng) {
                tokens[pos] = new;
                edits += 1;
            }
        }
        Ok(Substitution {
            text: tokens.join(" "),
            edit_count: edits,
        })
    }

    fn check_resources(&self, strategy: Strategy) -> Result<()> {
        match strategy {
            Strategy::Synonym if self.synonyms.is_none() => {
                Err(Error::Config("synonym strategy needs a synonym dictionary".into()))
            }
            Strategy::Embedding if self.embeddings.is_none() => {
                Err(Error::Config("embedding strategy needs an embedding table".into()))
            }
            Strategy::MaskedLm if self.masked_lm.is_none() && self.embeddings.is_none() => Err(Error::Config(
                "masked_lm strategy needs a provider or an embedding table to fall back on".into(),
            )),
            Strategy::BackTranslation => Err(Error::Config("back-translation is not a substitution strategy".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentScope {
    News,
    Comments,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub strategy: Strategy,
    pub multiplier: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentPlan {
    pub entries: Vec<PlanEntry>,
    pub rate: f64,
    pub scope: AugmentScope,
    pub source_lang: String,
    pub pivot_lang: Option<String>,
}

impl Default for AugmentPlan {
    fn default() -> Self {
        AugmentPlan {
            entries: vec![
                PlanEntry {
                    strategy: Strategy::Synonym,
                    multiplier: 2,
                },
                PlanEntry {
                    strategy: Strategy::Embedding,
                    multiplier: 2,
                },
            ],
            rate: 0.1,
            scope: AugmentScope::Both,
            source_lang: "en".into(),
            pivot_lang: None,
        }
    }
}

impl AugmentPlan {
    pub fn pivot(&self) -> &str {
        self.pivot_lang.as_deref().unwrap_or_else(|| default_pivot(&self.source_lang))
    }
}

/// An unlabeled variant of a labeled record.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedRecord {
    pub parent_id: String,
    /// Variant texts with `label: None`; the id is derived from the parent.
    pub record: NewsRecord,
    pub strategy: Strategy,
    pub edit_count: usize,
    /// Pivot language for back-translated variants.
    pub pivot: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AugmentOutput {
    pub variants: Vec<AugmentedRecord>,
    /// Variants abandoned after translation failures.
    pub skipped: usize,
}

/// Stream-splitting mix for per-text seeds.
fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut x = seed;
    for &p in parts {
        x ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(x << 6).wrapping_add(x >> 2);
        x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x ^= x >> 31;
    }
    x
}

/// Emits up to `multiplier` variants per labeled record and plan entry.
pub fn augment_corpus(
    records: &[NewsRecord],
    plan: &AugmentPlan,
    seed: u64,
    substituter: &Substituter<'_>,
    translator: Option<&dyn Translator>,
    retry: RetryPolicy,
) -> Result<AugmentOutput> {
    for e in &plan.entries {
        match e.strategy {
            Strategy::BackTranslation if translator.is_none() => {
                return Err(Error::Config("back-translation needs a translator".into()))
            }
            Strategy::BackTranslation => {}
            s => substituter.check_resources(s)?,
        }
    }
    let mut out = AugmentOutput::default();
    let news_on = plan.scope != AugmentScope::Comments;
    let comments_on = plan.scope != AugmentScope::News;
    for (ri, record) in records.iter().enumerate().filter(|(_, r)| r.label.is_some()) {
        for (ei, entry) in plan.entries.iter().enumerate() {
            'variant: for k in 0..entry.multiplier {
                let mut edits = 0;
                let mut rewrite = |text: &str, slot: u64| -> Result<Option<String>> {
                    match entry.strategy {
                        Strategy::BackTranslation => {
                            let t = translator.expect("checked above");
                            match back_translate(text, t, &plan.source_lang, plan.pivot(), retry) {
                                Ok(s) => Ok(Some(s)),
                                Err(e) => {
                                    log::warn!("record {}: back-translation skipped: {e}", record.id);
                                    Ok(None)
                                }
                            }
                        }
                        s => {
                            let text_seed = mix(seed, &[ri as u64, ei as u64, k as u64, slot]);
                            let sub = substituter.substitute(text, s, plan.rate, text_seed)?;
                            edits += sub.edit_count;
                            Ok(Some(sub.text))
                        }
                    }
                };
                let news = if news_on {
                    match rewrite(&record.news_text, 0)? {
                        Some(t) => t,
                        None => {
                            out.skipped += 1;
                            continue 'variant;
                        }
                    }
                } else {
                    record.news_text.clone()
                };
                let mut comments = Vec::with_capacity(record.comments.len());
                for (ci, c) in record.comments.iter().enumerate() {
                    let text = if comments_on {
                        match rewrite(&c.text, ci as u64 + 1)? {
                            Some(t) => t,
                            None => {
                                out.skipped += 1;
                                continue 'variant;
                            }
                        }
                    } else {
                        c.text.clone()
                    };
                    comments.push(Comment {
                        text,
                        timestamp: c.timestamp,
                        source_order: c.source_order,
                    });
                }
                let id = format!("{}#{}-{}", record.id, ei, k);
                out.variants.push(AugmentedRecord {
                    parent_id: record.id.clone(),
                    record: NewsRecord::new(id, news, comments, None),
                    strategy: entry.strategy,
                    edit_count: edits,
                    pivot: (entry.strategy == Strategy::BackTranslation).then(|| plan.pivot().to_string()),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::corpus::synthetic::synthetic_lexicon;

    struct Fixture {
        tokenizer: Tokenizer,
        lexicon: EmotionLexicon,
        stopwords: HashSet<String>,
        synonyms: SynonymDictionary,
        embeddings: EmbeddingTable,
    }

    impl Fixture {
        fn new() -> Self {
            let lexicon = synthetic_lexicon();
            Fixture {
                tokenizer: Tokenizer::new(lexicon.emoticons.iter().cloned()),
                lexicon,
                stopwords: default_stopwords(),
                synonyms: SynonymDictionary::new(HashMap::from([("good".to_string(), vec!["fine".to_string()])])),
                embeddings: EmbeddingTable::from_entries(
                    2,
                    vec![
                        ("cat".to_string(), vec![1.0, 0.1]),
                        ("dog".to_string(), vec![0.9, 0.2]),
                        ("car".to_string(), vec![-0.2, 1.0]),
                    ],
                )
                .unwrap(),
            }
        }

        fn substituter(&self) -> Substituter<'_> {
            Substituter {
                tokenizer: &self.tokenizer,
                lexicon: &self.lexicon,
                stopwords: &self.stopwords,
                synonyms: Some(&self.synonyms),
                embeddings: Some(&self.embeddings),
                masked_lm: None,
            }
        }
    }

    #[test]
    fn synonym_replacement() {
        let f = Fixture::new();
        let s = f.substituter().substitute("a good day", Strategy::Synonym, 0.3, 4).unwrap();
        assert_eq!(s, Substitution { text: "a fine day".into(), edit_count: 1 });
    }

    #[test]
    fn no_hits_means_no_edits() {
        let f = Fixture::new();
        let s = f.substituter().substitute("a bad day", Strategy::Synonym, 0.3, 4).unwrap();
        assert_eq!(s, Substitution { text: "a bad day".into(), edit_count: 0 });
    }

    #[test]
    fn embedding_and_masked_fallback() {
        let f = Fixture::new();
        let sub = f.substituter();
        assert_eq!(sub.substitute("cat", Strategy::Embedding, 0.3, 1).unwrap().text, "dog");
        assert_eq!(sub.substitute("cat", Strategy::MaskedLm, 0.3, 1).unwrap().text, "dog");
    }

    #[test]
    fn rate_is_validated_and_empty_text_passes_through() {
        let f = Fixture::new();
        let sub = f.substituter();
        assert!(sub.substitute("cat", Strategy::Embedding, 0.0, 1).is_err());
        assert!(sub.substitute("cat", Strategy::Embedding, 0.31, 1).is_err());
        let s = sub.substitute("", Strategy::Embedding, 0.1, 1).unwrap();
        assert_eq!(s.edit_count, 0);
    }

    fn records(n: usize) -> Vec<NewsRecord> {
        (0..n)
            .map(|i| {
                NewsRecord::new(
                    format!("r{i}"),
                    "a good cat",
                    vec![Comment {
                        text: "good dog".into(),
                        timestamp: 1,
                        source_order: 0,
                    }],
                    Some(if i % 2 == 0 { Label::Fake } else { Label::True }),
                )
            })
            .collect()
    }

    #[test]
    fn corpus_multiplicity_and_determinism() {
        let f = Fixture::new();
        let plan = AugmentPlan {
            entries: vec![PlanEntry {
                strategy: Strategy::Synonym,
                multiplier: 2,
            }],
            ..AugmentPlan::default()
        };
        let recs = records(10);
        let a = augment_corpus(&recs, &plan, 3, &f.substituter(), None, RetryPolicy::default()).unwrap();
        assert_eq!(a.variants.len(), 20);
        assert!(a.variants.iter().all(|v| v.record.label.is_none() && v.parent_id.starts_with('r')));
        let b = augment_corpus(&recs, &plan, 3, &f.substituter(), None, RetryPolicy::default()).unwrap();
        assert_eq!(a, b);
        let empty = AugmentPlan {
            entries: vec![],
            ..plan
        };
        let c = augment_corpus(&recs, &empty, 3, &f.substituter(), None, RetryPolicy::default()).unwrap();
        assert!(c.variants.is_empty());
    }

    #[test]
    fn back_translation_requires_translator() {
        let f = Fixture::new();
        let plan = AugmentPlan {
            entries: vec![PlanEntry {
                strategy: Strategy::BackTranslation,
                multiplier: 1,
            }],
            ..AugmentPlan::default()
        };
        assert!(augment_corpus(&records(2), &plan, 0, &f.substituter(), None, RetryPolicy::default()).is_err());
        let out = augment_corpus(
            &records(2),
            &plan,
            0,
            &f.substituter(),
            Some(&StubTranslator),
            RetryPolicy::default(),
        )
        .unwrap();
        assert_eq!(out.variants.len(), 2);
        assert_eq!(out.variants[0].pivot.as_deref(), Some("fr"));
    }
}
