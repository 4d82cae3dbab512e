//! Paragraph vectors (PV-DM and PV-DBOW) trained with negative sampling.
//!
//! A document vector, optionally averaged with the vectors of surrounding
//! words, is used to predict each token of its document. The prediction is
//! scored against the token's output vector and a few noise words drawn from
//! a smoothed unigram distribution, and every touched row takes a plain SGD
//! step on the resulting log-sigmoid loss.

mod infer;
mod loss;
mod train;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::preprocess::TokenizedDocument;
use crate::{Error, Result};

pub use infer::{infer_vector, Inferred};
pub use loss::{negative_sampling_loss, negative_sampling_loss_and_grads, NegativeSamplingGrads};
pub use train::{train, Block, DocumentStats, Matrices, ParamStore, Scratch, TrainingPlan};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Doc2VecConfig {
    /// Words seen fewer times than this in the training documents are dropped.
    pub min_count: u64,
    /// Maximum distance between a predicted word and its context words.
    pub window: usize,
    pub vector_size: usize,
    /// Down-sampling threshold for frequent words; `0` disables it.
    pub sample: f64,
    /// Noise words drawn per predicted word.
    pub negative: usize,
    pub workers: usize,
    /// `true` trains PV-DM, `false` trains PV-DBOW.
    pub dm: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    /// Exponent applied to word counts when building the noise distribution.
    pub noise_exponent: f64,
    /// Draw the effective PV-DM window uniformly from `1..=window` per word.
    pub dynamic_window: bool,
    pub seed: u64,
}

impl Default for Doc2VecConfig {
    fn default() -> Self {
        Doc2VecConfig {
            min_count: 1,
            window: 10,
            vector_size: 100,
            sample: 1e-5,
            negative: 5,
            workers: 1,
            dm: false,
            epochs: 20,
            learning_rate: 0.025,
            min_learning_rate: 0.0001,
            noise_exponent: 0.75,
            dynamic_window: true,
            seed: 1,
        }
    }
}

impl Doc2VecConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.vector_size < 1 {
            return bad("vector_size must be >= 1");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if !(self.sample >= 0.0) || !self.sample.is_finite() {
            return bad("sample must be a finite value >= 0");
        }
        if !(self.learning_rate > 0.0) || !(self.min_learning_rate >= 0.0) {
            return bad("learning rates must be positive");
        }
        if !self.noise_exponent.is_finite() {
            return bad("noise_exponent must be finite");
        }
        if self.workers < 1 {
            return bad("workers must be >= 1");
        }
        Ok(())
    }
}

/// Words kept for training with their corpus counts, most frequent first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordVocabulary {
    terms: Vec<String>,
    counts: Vec<u64>,
    index: BTreeMap<String, usize>,
    total: u64,
}

impl WordVocabulary {
    /// Rebuilds a vocabulary from `(term, count)` pairs in row order.
    pub fn from_counts(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut index = BTreeMap::new();
        let mut terms = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        for (i, (term, count)) in entries.into_iter().enumerate() {
            if count == 0 {
                return Err(Error::InvalidArgument(alloc::format!(
                    "word `{term}` has zero count"
                )));
            }
            if index.insert(term.clone(), i).is_some() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "duplicate word `{term}`"
                )));
            }
            terms.push(term);
            counts.push(count);
        }
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let total = counts.iter().sum();
        Ok(WordVocabulary {
            terms,
            counts,
            index,
            total,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    /// Sum of all retained word counts.
    pub fn total_count(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.terms
            .iter()
            .map(String::as_str)
            .zip(self.counts.iter().copied())
    }

    /// Vocabulary indices of the known tokens of `doc`, in order.
    pub fn encode(&self, doc: &TokenizedDocument) -> Vec<usize> {
        doc.tokens.iter().filter_map(|t| self.index_of(t)).collect()
    }

    /// Normalized `count^exponent` for every word.
    pub fn noise_distribution(&self, exponent: f64) -> Vec<f64> {
        let weights: Vec<f64> = self
            .counts
            .iter()
            .map(|&c| math::pow(c as f64, exponent))
            .collect();
        let sum: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / sum).collect()
    }
}

/// Counts tokens over `docs`, keeps words seen at least `min_count` times
/// and returns them with their noise distribution.
pub fn build_vocabulary(
    docs: &[TokenizedDocument],
    config: &Doc2VecConfig,
) -> Result<(WordVocabulary, Vec<f64>)> {
    if docs.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot build a vocabulary from zero documents".into(),
        ));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in docs {
        for t in &doc.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count)
        .map(|(t, c)| (String::from(t), c))
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    // most frequent first; the BTreeMap already ordered ties lexicographically
    entries.sort_by(|a, b| b.1.cmp(&a.1));
    let vocab = WordVocabulary::from_counts(entries)?;
    let noise = vocab.noise_distribution(config.noise_exponent);
    Ok((vocab, noise))
}

/// `min(1, sqrt(sample/f) + sample/f)` for relative frequency `f`.
pub fn keep_probability(count: u64, total: u64, sample: f64) -> f64 {
    if sample <= 0.0 || count == 0 {
        return 1.0;
    }
    let ratio = sample / (count as f64 / total as f64);
    (math::sqrt(ratio) + ratio).min(1.0)
}

/// Probability that an occurrence of `term` survives frequent-word
/// down-sampling.
pub fn subsample_keep_probability(term: &str, vocab: &WordVocabulary, sample: f64) -> Result<f64> {
    let i = vocab
        .index_of(term)
        .ok_or_else(|| Error::UnknownTerm(String::from(term)))?;
    Ok(keep_probability(vocab.count(i), vocab.total_count(), sample))
}

/// A trained paragraph-vector model. Matrices are row-major with
/// `config.vector_size` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    config: Doc2VecConfig,
    vocab: WordVocabulary,
    noise_distribution: Vec<f64>,
    word_vectors: Vec<f64>,
    doc_vectors: Vec<f64>,
    output_weights: Vec<f64>,
    epoch_losses: Vec<f64>,
}

impl EmbeddingModel {
    /// Assembles a model, checking matrix shapes and finiteness.
    pub fn from_parts(
        config: Doc2VecConfig,
        vocab: WordVocabulary,
        noise_distribution: Vec<f64>,
        word_vectors: Vec<f64>,
        doc_vectors: Vec<f64>,
        output_weights: Vec<f64>,
        epoch_losses: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        let dim = config.vector_size;
        let v = vocab.len();
        let shape_err = |what: &str| {
            Err(Error::InvalidArgument(alloc::format!(
                "{what} has an inconsistent shape"
            )))
        };
        if noise_distribution.len() != v {
            return shape_err("noise distribution");
        }
        if word_vectors.len() != v * dim {
            return shape_err("word matrix");
        }
        if output_weights.len() != v * dim {
            return shape_err("output matrix");
        }
        if doc_vectors.len() % dim != 0 {
            return shape_err("document matrix");
        }
        let all_finite = word_vectors
            .iter()
            .chain(&doc_vectors)
            .chain(&output_weights)
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::InvalidArgument("model has non-finite weights".into()));
        }
        let mass: f64 = noise_distribution.iter().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(
                "noise distribution does not sum to 1".into(),
            ));
        }
        Ok(EmbeddingModel {
            config,
            vocab,
            noise_distribution,
            word_vectors,
            doc_vectors,
            output_weights,
            epoch_losses,
        })
    }

    pub fn config(&self) -> &Doc2VecConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &WordVocabulary {
        &self.vocab
    }

    pub fn noise_distribution(&self) -> &[f64] {
        &self.noise_distribution
    }

    pub fn vector_size(&self) -> usize {
        self.config.vector_size
    }

    pub fn n_docs(&self) -> usize {
        self.doc_vectors.len() / self.config.vector_size
    }

    pub fn doc_vector(&self, doc: usize) -> &[f64] {
        let d = self.config.vector_size;
        &self.doc_vectors[doc * d..(doc + 1) * d]
    }

    pub fn word_vector(&self, term: &str) -> Option<&[f64]> {
        let d = self.config.vector_size;
        self.vocab
            .index_of(term)
            .map(|i| &self.word_vectors[i * d..(i + 1) * d])
    }

    pub fn word_vectors(&self) -> &[f64] {
        &self.word_vectors
    }

    pub fn doc_vectors(&self) -> &[f64] {
        &self.doc_vectors
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    /// Mean per-example loss of each training epoch.
    pub fn epoch_losses(&self) -> &[f64] {
        &self.epoch_losses
    }
}
