//! TF-IDF vectorizer.
//!
//! Weights follow the classic definitions: term frequency is the share of a
//! document's tokens equal to the term, inverse document frequency is
//! `ln(n_docs / doc_freq)` without smoothing, and the weight is their
//! product. With `sublinear_tf` the frequency factor becomes
//! `1 + ln(count)`.

use alloc::collections::BTreeMap;
use core::hash::Hasher;

use fnv::FnvHasher;
use alloc::string::String;
use alloc::vec::Vec;

use crate::features::SparseVector;
use crate::math;
use crate::preprocess::TokenizedDocument;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfidfConfig {
    /// Minimum number of training documents a term must appear in.
    pub min_df: usize,
    /// Terms in more than `floor(max_df * n_docs)` documents are dropped.
    pub max_df: f64,
    pub sublinear_tf: bool,
    pub use_idf: bool,
    pub l2_normalize: bool,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            min_df: 5,
            max_df: 0.8,
            sublinear_tf: true,
            use_idf: true,
            l2_normalize: true,
        }
    }
}

impl TfidfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_df < 1 {
            return Err(Error::InvalidArgument("min_df must be >= 1".into()));
        }
        if !(self.max_df > 0.0 && self.max_df <= 1.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "max_df must lie in (0, 1], got {}",
                self.max_df
            )));
        }
        Ok(())
    }

    fn max_doc_count(&self, n_docs: usize) -> usize {
        libm::floor(self.max_df * n_docs as f64) as usize
    }
}

/// Term to column mapping fitted on training documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    term_to_index: BTreeMap<String, usize>,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    /// Reassembles a vocabulary from `(term, doc_freq)` pairs in column
    /// order, checking its invariants.
    pub fn from_parts(n_docs: usize, entries: Vec<(String, usize)>) -> Result<Self> {
        let mut term_to_index = BTreeMap::new();
        let mut terms = Vec::with_capacity(entries.len());
        let mut doc_freq = Vec::with_capacity(entries.len());
        for (index, (term, df)) in entries.into_iter().enumerate() {
            if df == 0 || df > n_docs {
                return Err(Error::InvalidArgument(alloc::format!(
                    "doc_freq {df} of `{term}` outside 1..={n_docs}"
                )));
            }
            if term_to_index.insert(term.clone(), index).is_some() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "duplicate term `{term}`"
                )));
            }
            terms.push(term);
            doc_freq.push(df);
        }
        Ok(Vocabulary {
            term_to_index,
            terms,
            doc_freq,
            n_docs,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    /// `(term, doc_freq)` in column order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> + '_ {
        self.terms
            .iter()
            .map(String::as_str)
            .zip(self.doc_freq.iter().copied())
    }

    fn idf_at(&self, index: usize) -> f64 {
        math::ln(self.n_docs as f64 / self.doc_freq[index] as f64)
    }

    /// 64-bit FNV-1a digest over document count, terms and frequencies.
    pub fn fingerprint(&self) -> u64 {
        let mut h = FnvHasher::default();
        h.write(&(self.n_docs as u64).to_le_bytes());
        for (term, df) in self.iter() {
            h.write(term.as_bytes());
            h.write(&[0xff]);
            h.write(&(df as u64).to_le_bytes());
        }
        h.finish()
    }
}

/// Fits a vocabulary on the training documents, keeping terms with
/// `min_df <= doc_freq <= floor(max_df * n_docs)` in lexicographic order.
pub fn fit_vocabulary(train: &[TokenizedDocument], config: &TfidfConfig) -> Result<Vocabulary> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot fit a vocabulary on zero documents".into(),
        ));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    let mut seen: Vec<&str> = Vec::new();
    for doc in train {
        seen.clear();
        seen.extend(doc.tokens.iter().map(String::as_str));
        seen.sort_unstable();
        seen.dedup();
        for &t in &seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n_docs = train.len();
    let max_count = config.max_doc_count(n_docs);
    let entries: Vec<(String, usize)> = df
        .into_iter()
        .filter(|&(_, count)| count >= config.min_df && count <= max_count)
        .map(|(t, count)| (String::from(t), count))
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Vocabulary::from_parts(n_docs, entries)
}

/// Share of the document's tokens equal to `term`; zero for an empty
/// document.
pub fn term_frequency(term: &str, doc: &TokenizedDocument) -> f64 {
    if doc.tokens.is_empty() {
        return 0.0;
    }
    let count = doc.tokens.iter().filter(|t| t.as_str() == term).count();
    count as f64 / doc.tokens.len() as f64
}

pub fn inverse_document_frequency(term: &str, vocab: &Vocabulary) -> Result<f64> {
    vocab
        .index_of(term)
        .map(|i| vocab.idf_at(i))
        .ok_or_else(|| Error::UnknownTerm(String::from(term)))
}

/// Weights one document against a fitted vocabulary. Out-of-vocabulary
/// tokens are ignored; zero weights are not stored.
pub fn transform(
    doc: &TokenizedDocument,
    vocab: &Vocabulary,
    config: &TfidfConfig,
) -> SparseVector {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for t in &doc.tokens {
        if let Some(i) = vocab.index_of(t) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let doc_len = doc.tokens.len() as f64;
    let mut entries = Vec::with_capacity(counts.len());
    let mut sq_norm = 0.0;
    for (i, count) in counts {
        let tf = if config.sublinear_tf {
            1.0 + math::ln(count as f64)
        } else {
            count as f64 / doc_len
        };
        let idf = if config.use_idf { vocab.idf_at(i) } else { 1.0 };
        let w = tf * idf;
        if w != 0.0 {
            sq_norm += w * w;
            entries.push((i, w));
        }
    }
    let mut v = SparseVector::from_sorted(vocab.len(), entries)
        .expect("BTreeMap keys are sorted vocabulary indices");
    if config.l2_normalize && sq_norm > 0.0 {
        v.scale(1.0 / math::sqrt(sq_norm));
    }
    v
}

pub fn transform_corpus(
    docs: &[TokenizedDocument],
    vocab: &Vocabulary,
    config: &TfidfConfig,
) -> Vec<SparseVector> {
    docs.iter().map(|d| transform(d, vocab, config)).collect()
}
