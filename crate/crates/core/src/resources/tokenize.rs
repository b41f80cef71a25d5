use std::collections::HashSet;

use unicode_segmentation::UnicodeSegmentation;

/// Lowercasing word/punctuation splitter shared by embedding lookup and
/// lexicon matching.
///
/// Whitespace-delimited chunks that exactly match a known emoticon stay whole;
/// everything else is split on Unicode word boundaries, so punctuation marks
/// become their own tokens and CJK text splits per character.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tokenizer {
    emoticons: HashSet<String>,
}

impl Tokenizer {
    pub fn new(emoticons: impl IntoIterator<Item = String>) -> Self {
        Tokenizer {
            emoticons: emoticons.into_iter().map(|e| e.to_lowercase()).collect(),
        }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut tokens = Vec::new();
        for chunk in text.split_whitespace() {
            let lower = chunk.to_lowercase();
            if self.emoticons.contains(&lower) {
                tokens.push(lower);
                continue;
            }
            tokens.extend(
                lower
                    .split_word_bounds()
                    .filter(|w| !w.trim().is_empty())
                    .map(str::to_string),
            );
        }
        tokens
    }

    pub fn is_emoticon(&self, token: &str) -> bool {
        self.emoticons.contains(token)
    }
}

/// Lowercased, trimmed lexicon entry.
pub(crate) fn normalize_word(word: &str) -> String {
    word.trim().to_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_punctuation_and_lowercases() {
        let t = Tokenizer::default();
        assert_eq!(
            t.tokenize("Hello, World!! Don't"),
            vec!["hello", ",", "world", "!", "!", "don't"]
        );
    }

    #[test]
    fn keeps_emoticons_whole() {
        let t = Tokenizer::new([":)".to_string()]);
        assert_eq!(t.tokenize("nice :) really"), vec!["nice", ":)", "really"]);
    }

    #[test]
    fn cjk_splits_per_character() {
        let t = Tokenizer::default();
        assert_eq!(t.tokenize("谣言！"), vec!["谣", "言", "！"]);
    }

    #[test]
    fn empty_text_has_no_tokens() {
        assert!(Tokenizer::default().tokenize("   ").is_empty());
    }
}
