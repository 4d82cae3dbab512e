//! Tokenization and stopword elimination.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::corpus::{Corpus, Polarity};

/// The bundled English stopword list, one word per line.
pub const ENGLISH_STOPWORDS: &str = include_str!("../resources/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub id: usize,
    pub tokens: Vec<String>,
    pub label: Polarity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordSet {
    words: BTreeSet<String>,
}

impl StopwordSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn english() -> Self {
        Self::from_list(ENGLISH_STOPWORDS)
    }

    /// Parses a one-word-per-line list. Blank lines and `#` comments are
    /// skipped; words are lowercased.
    pub fn from_list(list: &str) -> Self {
        let words = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|w| w.to_lowercase())
            .collect();
        StopwordSet { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        if word.chars().any(char::is_uppercase) {
            self.words.contains(&word.to_lowercase())
        } else {
            self.words.contains(word)
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_token_char(c: char) -> bool {
    c.is_alphabetic() || c.is_numeric() || is_apostrophe(c)
}

/// Lowercases, splits on every character that is not a letter, digit or
/// apostrophe, trims apostrophes at token edges and drops tokens shorter
/// than two characters. Typographic apostrophes are folded to `'`.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !is_token_char(c))
        .map(|raw| raw.trim_matches(is_apostrophe))
        .filter(|t| t.chars().count() >= 2)
        .map(|t| {
            if t.contains('\u{2019}') {
                t.replace('\u{2019}', "'")
            } else {
                t.to_string()
            }
        })
        .collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stops: &StopwordSet) -> Vec<String> {
    if stops.is_empty() {
        return tokens;
    }
    tokens.into_iter().filter(|t| !stops.contains(t)).collect()
}

/// Tokenizes every document, optionally dropping stopwords. Documents left
/// without tokens are kept so ids and labels stay aligned with the corpus.
pub fn preprocess_corpus(
    corpus: &Corpus,
    stops: &StopwordSet,
    apply_stops: bool,
) -> Vec<TokenizedDocument> {
    corpus
        .documents()
        .iter()
        .map(|doc| {
            let tokens = tokenize(&doc.text);
            let tokens = if apply_stops {
                remove_stopwords(tokens, stops)
            } else {
                tokens
            };
            TokenizedDocument {
                id: doc.id,
                tokens,
                label: doc.label,
            }
        })
        .collect()
}
