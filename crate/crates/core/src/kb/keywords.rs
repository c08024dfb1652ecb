use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

use super::KbError;

/// Shipped English stopword list (version 1).
const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Person placeholders used by ATOMIC heads.
const PLACEHOLDERS: [&str; 3] = ["personx", "persony", "personz"];

/// A set of lowercase stopwords.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// Parse a stopword file: one token per line, `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopwordList { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| KbError::StopwordIo {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }
}

/// Lowercase and collapse internal whitespace.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Extracts head-event keywords: lowercase alphanumeric tokens minus
/// stopwords and person placeholders, optionally stemmed.
pub struct KeywordExtractor {
    stopwords: StopwordList,
    stemmer: Option<Stemmer>,
}

impl std::fmt::Debug for KeywordExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeywordExtractor")
            .field("stopwords", &self.stopwords.len())
            .field("stemming", &self.stemmer.is_some())
            .finish()
    }
}

impl Default for KeywordExtractor {
    fn default() -> Self {
        KeywordExtractor::new(StopwordList::default())
    }
}

impl KeywordExtractor {
    pub fn new(stopwords: StopwordList) -> Self {
        KeywordExtractor { stopwords, stemmer: None }
    }

    /// Enable English Snowball stemming of keywords.
    pub fn with_stemming(mut self, enabled: bool) -> Self {
        self.stemmer = enabled.then(|| Stemmer::create(Algorithm::English));
        self
    }

    pub fn stemming(&self) -> bool {
        self.stemmer.is_some()
    }

    fn is_filtered(&self, token: &str) -> bool {
        self.stopwords.contains(token) || PLACEHOLDERS.contains(&token)
    }

    pub fn extract(&self, head: &str) -> BTreeSet<String> {
        head.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .filter(|t| !self.is_filtered(t))
            .map(|t| match &self.stemmer {
                Some(s) => s.stem(&t).into_owned(),
                None => t,
            })
            .collect()
    }

    /// Normalize a concept label into a constraint member. Returns `None`
    /// for labels that are empty or consist of a single filtered token.
    pub fn normalize_concept(&self, concept: &str) -> Option<String> {
        let norm = normalize_text(concept);
        if norm.is_empty() || self.is_filtered(&norm) {
            None
        } else {
            Some(norm)
        }
    }
}

/// Keywords of `head` under the shipped stopword list, without stemming.
pub fn extract_keywords(head: &str) -> BTreeSet<String> {
    static DEFAULT: OnceLock<KeywordExtractor> = OnceLock::new();
    DEFAULT.get_or_init(KeywordExtractor::default).extract(head)
}
