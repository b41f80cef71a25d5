//! Static lexical resources: tokenizer, frozen word vectors, emotion lexicon.

mod embeddings;
mod lexicon;
mod tokenize;

use std::path::Path;

pub use embeddings::{load_embeddings, EmbeddingTable, OOV_ID};
pub use lexicon::{load_lexicon, EmotionLexicon};
pub use tokenize::Tokenizer;

use crate::error::Result;

/// Everything the feature extractors read, loaded once and shared.
#[derive(Debug, Clone)]
pub struct Resources {
    pub embeddings: EmbeddingTable,
    pub lexicon: EmotionLexicon,
    pub tokenizer: Tokenizer,
}

impl Resources {
    pub fn new(embeddings: EmbeddingTable, lexicon: EmotionLexicon) -> Self {
        let tokenizer = Tokenizer::new(lexicon.emoticons.iter().cloned());
        Resources {
            embeddings,
            lexicon,
            tokenizer,
        }
    }

    pub fn load(embeddings: &Path, lexicon_dir: &Path) -> Result<Self> {
        let lexicon = load_lexicon(lexicon_dir)?;
        let (embeddings, _) = load_embeddings(embeddings)?;
        Ok(Resources::new(embeddings, lexicon))
    }
}
