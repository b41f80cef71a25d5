use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::tokenize::normalize_word;
use crate::error::{Error, Result};

/// Emotion word lists and scores behind the five emotion sub-features.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmotionLexicon {
    /// Sorted, unique.
    pub categories: Vec<String>,
    pub category_words: BTreeMap<String, BTreeSet<String>>,
    /// word -> score in [0, 1]
    pub intensity: HashMap<String, f64>,
    /// word -> score in [-1, 1]
    pub polarity: HashMap<String, f64>,
    pub negation_words: HashSet<String>,
    pub pronouns: HashSet<String>,
    pub emoticons: HashSet<String>,
    word_categories: HashMap<String, Vec<usize>>,
}

pub const CATEGORIES_FILE: &str = "categories.tsv";
pub const INTENSITY_FILE: &str = "intensity.tsv";
pub const POLARITY_FILE: &str = "polarity.tsv";
pub const NEGATION_FILE: &str = "negation.txt";
pub const PRONOUNS_FILE: &str = "pronouns.txt";
pub const EMOTICONS_FILE: &str = "emoticons.txt";

impl EmotionLexicon {
    /// Builds and validates a lexicon from in-memory tables.
    pub fn new(
        category_words: BTreeMap<String, BTreeSet<String>>,
        intensity: HashMap<String, f64>,
        polarity: HashMap<String, f64>,
        negation_words: HashSet<String>,
        pronouns: HashSet<String>,
        emoticons: HashSet<String>,
    ) -> Result<Self> {
        for (w, &v) in &intensity {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("intensity of `{w}` is {v}, outside [0, 1]")));
            }
        }
        for (w, &v) in &polarity {
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::Invalid(format!("polarity of `{w}` is {v}, outside [-1, 1]")));
            }
        }
        let mut lex = EmotionLexicon {
            categories: category_words.keys().cloned().collect(),
            category_words,
            intensity,
            polarity,
            negation_words,
            pronouns,
            emoticons,
            word_categories: HashMap::new(),
        };
        lex.index_categories();
        for w in lex.intensity.keys() {
            if !lex.word_categories.contains_key(w) {
                return Err(Error::Invalid(format!(
                    "intensity word `{w}` belongs to no category"
                )));
            }
        }
        Ok(lex)
    }

    fn index_categories(&mut self) {
        self.word_categories.clear();
        for (ci, cat) in self.categories.iter().enumerate() {
            for w in &self.category_words[cat] {
                self.word_categories.entry(w.clone()).or_default().push(ci);
            }
        }
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    /// Category indices a word belongs to (empty for non-emotion words).
    pub fn categories_of(&self, word: &str) -> &[usize] {
        self.word_categories.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    /// True for any word carrying category, intensity or polarity information.
    pub fn is_emotion_word(&self, word: &str) -> bool {
        self.word_categories.contains_key(word)
            || self.intensity.contains_key(word)
            || self.polarity.contains_key(word)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut cats = String::new();
        for (cat, words) in &self.category_words {
            for w in words {
                cats.push_str(&format!("{w}\t{cat}\n"));
            }
        }
        let scores = |m: &HashMap<String, f64>| {
            let sorted: BTreeMap<_, _> = m.iter().collect();
            sorted.iter().map(|(w, v)| format!("{w}\t{v}\n")).collect::<String>()
        };
        let list = |s: &HashSet<String>| {
            let sorted: BTreeSet<_> = s.iter().collect();
            sorted.iter().map(|w| format!("{w}\n")).collect::<String>()
        };
        let files = [
            (CATEGORIES_FILE, cats),
            (INTENSITY_FILE, scores(&self.intensity)),
            (POLARITY_FILE, scores(&self.polarity)),
            (NEGATION_FILE, list(&self.negation_words)),
            (PRONOUNS_FILE, list(&self.pronouns)),
            (EMOTICONS_FILE, list(&self.emoticons)),
        ];
        for (name, content) in files {
            let path = dir.join(name);
            fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn read_required(dir: &Path, name: &str) -> Result<(std::path::PathBuf, String)> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, text))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn read_pairs(dir: &Path, name: &str) -> Result<Vec<(usize, String, String)>> {
    let (path, text) = read_required(dir, name)?;
    content_lines(&text)
        .map(|(no, line)| {
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&path, no, "expected word<TAB>value"))?;
            Ok((no, normalize_word(a), b.trim().to_string()))
        })
        .collect()
}

fn read_scores(dir: &Path, name: &str, range: std::ops::RangeInclusive<f64>) -> Result<HashMap<String, f64>> {
    let path = dir.join(name);
    let mut out = HashMap::new();
    for (no, word, value) in read_pairs(dir, name)? {
        let v: f64 = value
            .parse()
            .map_err(|_| Error::parse(&path, no, format!("`{value}` is not a number")))?;
        if !range.contains(&v) {
            return Err(Error::parse(
                &path,
                no,
                format!("score {v} outside [{}, {}]", range.start(), range.end()),
            ));
        }
        out.insert(word, v);
    }
    Ok(out)
}

fn read_list(dir: &Path, name: &str) -> Result<HashSet<String>> {
    let (_, text) = read_required(dir, name)?;
    Ok(content_lines(&text).map(|(_, l)| normalize_word(l)).collect())
}

/// Loads the six lexicon files from `dir`.
pub fn load_lexicon(dir: &Path) -> Result<EmotionLexicon> {
    let mut category_words: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (_, word, cat) in read_pairs(dir, CATEGORIES_FILE)? {
        category_words.entry(cat.to_lowercase()).or_default().insert(word);
    }
    let intensity = read_scores(dir, INTENSITY_FILE, 0.0..=1.0)?;
    let polarity = read_scores(dir, POLARITY_FILE, -1.0..=1.0)?;
    let negation = read_list(dir, NEGATION_FILE)?;
    let pronouns = read_list(dir, PRONOUNS_FILE)?;
    let emoticons = read_list(dir, EMOTICONS_FILE)?;
    EmotionLexicon::new(category_words, intensity, polarity, negation, pronouns, emoticons)
        .map_err(|e| match e {
            Error::Invalid(msg) => Error::Invalid(format!("{}: {msg}", dir.join(INTENSITY_FILE).display())),
            other => other,
        })
}
