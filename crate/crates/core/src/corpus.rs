//! Labeled documents and train/test split plans.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::{Error, Result, SeededRng};

/// Binary sentiment class. Positive maps to label `1`, Negative to `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub const ALL: [Polarity; 2] = [Polarity::Positive, Polarity::Negative];

    /// `1` for Positive, `0` for Negative.
    pub fn as_label(self) -> u8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => 0,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            1 => Some(Polarity::Positive),
            0 => Some(Polarity::Negative),
            _ => None,
        }
    }

    /// `+1.0` / `-1.0`, the margin-classifier convention.
    pub fn as_sign(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }

    pub(crate) fn class_index(self) -> usize {
        match self {
            Polarity::Positive => 0,
            Polarity::Negative => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: usize,
    pub text: String,
    pub label: Polarity,
}

/// An ordered collection of documents whose ids are exactly `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    name: String,
    documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus from `(text, label)` pairs, assigning dense ids.
    ///
    /// Texts that are empty after trimming are rejected.
    pub fn from_labeled<I, S>(name: impl Into<String>, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Polarity)>,
        S: Into<String>,
    {
        let mut documents = Vec::new();
        for (id, (text, label)) in items.into_iter().enumerate() {
            let text = text.into();
            if text.trim().is_empty() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "document {id} has empty text"
                )));
            }
            documents.push(Document { id, text, label });
        }
        Ok(Corpus {
            name: name.into(),
            documents,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<Polarity> {
        self.documents.iter().map(|d| d.label).collect()
    }

    pub fn count(&self, label: Polarity) -> usize {
        self.documents.iter().filter(|d| d.label == label).count()
    }

    /// Fails unless both polarities are present.
    pub fn require_both_classes(&self) -> Result<()> {
        for p in Polarity::ALL {
            if self.count(p) == 0 {
                return Err(Error::EmptyClass(p.name()));
            }
        }
        Ok(())
    }

    /// New corpus holding the documents at `indices`, in that order, with
    /// fresh dense ids.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Corpus> {
        let mut documents = Vec::with_capacity(indices.len());
        for (id, &i) in indices.iter().enumerate() {
            let doc = self.documents.get(i).ok_or_else(|| {
                Error::InvalidArgument(alloc::format!("index {i} out of range"))
            })?;
            documents.push(Document {
                id,
                text: doc.text.clone(),
                label: doc.label,
            });
        }
        Ok(Corpus {
            name: name.into(),
            documents,
        })
    }

    fn indices_by_class(&self) -> [Vec<usize>; 2] {
        let mut by_class = [Vec::new(), Vec::new()];
        for (i, d) in self.documents.iter().enumerate() {
            by_class[d.label.class_index()].push(i);
        }
        by_class
    }
}

/// How a corpus is divided into training and test portions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPlan {
    HoldOut {
        train_count: usize,
        test_count: usize,
        seed: u64,
    },
    KFold {
        k: usize,
        seed: u64,
    },
}

impl SplitPlan {
    pub fn seed(&self) -> u64 {
        match *self {
            SplitPlan::HoldOut { seed, .. } | SplitPlan::KFold { seed, .. } => seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            SplitPlan::HoldOut {
                train_count,
                test_count,
                ..
            } => SplitPlan::HoldOut {
                train_count,
                test_count,
                seed,
            },
            SplitPlan::KFold { k, .. } => SplitPlan::KFold { k, seed },
        }
    }

    /// Number of train/test rounds the plan produces.
    pub fn rounds(&self) -> usize {
        match *self {
            SplitPlan::HoldOut { .. } => 1,
            SplitPlan::KFold { k, .. } => k,
        }
    }

    /// All `(train, test)` index pairs of this plan.
    pub fn index_splits(&self, corpus: &Corpus) -> Result<Vec<IndexSplit>> {
        match *self {
            SplitPlan::HoldOut {
                train_count,
                test_count,
                seed,
            } => Ok(alloc::vec![holdout_indices(
                corpus,
                train_count,
                test_count,
                seed
            )?]),
            SplitPlan::KFold { k, seed } => kfold_splits(corpus, k, seed),
        }
    }
}

/// Disjoint, ascending index sets into a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Distributes `total` over buckets proportionally to `weights` by largest
/// remainder, never giving a bucket more than its cap.
fn apportion(total: usize, weights: &[usize], caps: &[usize]) -> Vec<usize> {
    let weight_sum: usize = weights.iter().sum();
    let mut out = alloc::vec![0usize; weights.len()];
    if weight_sum == 0 || total == 0 {
        return out;
    }
    let mut remainders = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let exact = total as u128 * w as u128;
        let floor = (exact / weight_sum as u128) as usize;
        out[i] = floor.min(caps[i]);
        remainders.push((exact % weight_sum as u128, i));
    }
    // largest remainder first, lower bucket index on ties
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut assigned: usize = out.iter().sum();
    while assigned < total {
        let mut progressed = false;
        for &(_, i) in &remainders {
            if assigned == total {
                break;
            }
            if out[i] < caps[i] {
                out[i] += 1;
                assigned += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    out
}

/// Stratified hold-out split as index sets.
pub fn holdout_indices(
    corpus: &Corpus,
    train_count: usize,
    test_count: usize,
    seed: u64,
) -> Result<IndexSplit> {
    let n = corpus.len();
    if train_count + test_count > n {
        return Err(Error::InvalidArgument(alloc::format!(
            "hold-out counts {train_count} + {test_count} exceed corpus size {n}"
        )));
    }
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut by_class = corpus.indices_by_class();
    for idx in by_class.iter_mut() {
        idx.shuffle(&mut rng);
    }
    let sizes = [by_class[0].len(), by_class[1].len()];
    let train_per_class = apportion(train_count, &sizes, &sizes);
    let remaining = [sizes[0] - train_per_class[0], sizes[1] - train_per_class[1]];
    let test_per_class = apportion(test_count, &sizes, &remaining);

    let mut train = Vec::with_capacity(train_count);
    let mut test = Vec::with_capacity(test_count);
    for c in 0..2 {
        let (tr, rest) = by_class[c].split_at(train_per_class[c]);
        train.extend_from_slice(tr);
        test.extend_from_slice(&rest[..test_per_class[c]]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(IndexSplit { train, test })
}

/// Stratified hold-out split materialized as two corpora.
pub fn holdout_split(
    corpus: &Corpus,
    train_count: usize,
    test_count: usize,
    seed: u64,
) -> Result<(Corpus, Corpus)> {
    let split = holdout_indices(corpus, train_count, test_count, seed)?;
    let train = corpus.subset(&split.train, alloc::format!("{}/train", corpus.name()))?;
    let test = corpus.subset(&split.test, alloc::format!("{}/test", corpus.name()))?;
    Ok((train, test))
}

/// Stratified k-fold cross-validation splits.
///
/// Each class is shuffled, then all documents are dealt round-robin into
/// folds (positives first, continuing with negatives), so fold sizes differ
/// by at most one overall and per class.
pub fn kfold_splits(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<IndexSplit>> {
    let n = corpus.len();
    if k < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "k must be at least 2, got {k}"
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(alloc::format!(
            "k = {k} exceeds corpus size {n}"
        )));
    }
    let mut rng = SeededRng::seed_from_u64(seed);
    let mut by_class = corpus.indices_by_class();
    for idx in by_class.iter_mut() {
        idx.shuffle(&mut rng);
    }
    let mut fold_of = alloc::vec![0usize; n];
    for (position, &i) in by_class.iter().flatten().enumerate() {
        fold_of[i] = position % k;
    }
    let splits = (0..k)
        .map(|fold| {
            let (test, train) = (0..n).partition(|&i| fold_of[i] == fold);
            IndexSplit { train, test }
        })
        .collect();
    Ok(splits)
}
