//! Lowercasing alphanumeric tokenizer with optional stopping and stemming.

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

/// A normalized token: non-empty, lowercase, letters and digits only.
pub type Term = String;

/// Short English stopword list (the classic Lucene/SMART core set).
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it",
    "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "will", "with",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizerConfig {
    /// Drop tokens in the built-in English stopword list.
    #[serde(default)]
    pub stopwords: bool,
    /// Apply the Porter2 (English Snowball) stemmer.
    #[serde(default)]
    pub stem: bool,
}

impl TokenizerConfig {
    /// Stable identifier stored in index files so queries are tokenized the same way.
    pub fn fingerprint(&self) -> String {
        format!(
            "alnum-lower/v1;stop={};stem={}",
            if self.stopwords { "en-core" } else { "none" },
            if self.stem { "porter2" } else { "none" }
        )
    }
}

pub struct Tokenizer {
    config: TokenizerConfig,
    stemmer: Option<Stemmer>,
}

impl std::fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tokenizer").field("config", &self.config).finish()
    }
}

impl Clone for Tokenizer {
    fn clone(&self) -> Self {
        Tokenizer::new(self.config)
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(TokenizerConfig::default())
    }
}

impl Tokenizer {
    pub fn new(config: TokenizerConfig) -> Self {
        let stemmer = config.stem.then(|| Stemmer::create(Algorithm::English));
        Tokenizer { config, stemmer }
    }

    pub fn config(&self) -> TokenizerConfig {
        self.config
    }

    pub fn tokenize(&self, text: &str) -> Vec<Term> {
        let mut out = Vec::new();
        for raw in text.split(|c: char| !c.is_alphanumeric()) {
            if raw.is_empty() {
                continue;
            }
            let lower = raw.to_lowercase();
            if self.config.stopwords && STOPWORDS.contains(&lower.as_str()) {
                continue;
            }
            let token = match &self.stemmer {
                Some(stemmer) => stemmer.stem(&lower).into_owned(),
                None => lower,
            };
            // Lowercasing some code points expands into combining marks; keep the
            // alphanumeric invariant by re-filtering.
            let token: String = token.chars().filter(|c| c.is_alphanumeric()).collect();
            if !token.is_empty() {
                out.push(token);
            }
        }
        out
    }
}

/// Tokenize with the default configuration (lowercase, alphanumeric split, no stop/stem).
pub fn tokenize(text: &str) -> Vec<Term> {
    Tokenizer::default().tokenize(text)
}
