//! Experiment execution: split, fit on the training portion, score the test
//! portion, aggregate.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use polarity_core::classify::{self, Classifier};
use polarity_core::corpus::{Corpus, IndexSplit, Polarity, SplitPlan};
use polarity_core::doc2vec;
use polarity_core::features::{DenseVector, FeatureMatrix, FeatureVector, SparseVector};
use polarity_core::metrics::ContingencyMatrix;
use polarity_core::preprocess::{preprocess_corpus, StopwordSet, TokenizedDocument};
use polarity_core::tfidf::{self, Vocabulary};

use crate::config::{ClassifierEntry, Doc2VecSection, GridCell, TfidfSection, VectorizerEntry};
use crate::seeds;

#[derive(Debug, thiserror::Error)]
#[error("{}{source}", fold.map(|f| format!("fold {f}: ")).unwrap_or_default())]
pub struct ExperimentError {
    pub fold: Option<usize>,
    #[source]
    pub source: polarity_core::Error,
}

impl ExperimentError {
    fn at(fold: usize) -> impl FnOnce(polarity_core::Error) -> Self {
        move |source| ExperimentError {
            fold: Some(fold),
            source,
        }
    }
}

/// Split plan as recorded in a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitRecord {
    Holdout { train: usize, test: usize, seed: u64 },
    Kfold { k: usize, seed: u64 },
}

impl From<&SplitPlan> for SplitRecord {
    fn from(p: &SplitPlan) -> Self {
        match *p {
            SplitPlan::HoldOut {
                train_count,
                test_count,
                seed,
            } => SplitRecord::Holdout {
                train: train_count,
                test: test_count,
                seed,
            },
            SplitPlan::KFold { k, seed } => SplitRecord::Kfold { k, seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl From<ContingencyMatrix> for MatrixRecord {
    fn from(m: ContingencyMatrix) -> Self {
        MatrixRecord {
            tp: m.true_pos,
            fn_: m.false_neg,
            fp: m.false_pos,
            tn: m.true_neg,
        }
    }
}

impl From<MatrixRecord> for ContingencyMatrix {
    fn from(m: MatrixRecord) -> Self {
        ContingencyMatrix {
            true_pos: m.tp,
            false_neg: m.fn_,
            false_pos: m.fp,
            true_neg: m.tn,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub matrix: MatrixRecord,
    pub accuracy: f64,
}

/// Wall-clock seconds per phase, summed over folds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub preprocess: f64,
    pub vectorize: f64,
    pub train: f64,
    pub predict: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub vectorizer: VectorizerEntry,
    pub classifier: ClassifierEntry,
    pub split: SplitRecord,
    /// Seed for every random choice made after splitting.
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    /// Unweighted mean of the fold accuracies, in percent.
    pub accuracy: f64,
    pub timings: PhaseTimings,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Feature matrices for one fold.
enum Features {
    Sparse(FeatureMatrix<SparseVector>, FeatureMatrix<SparseVector>),
    Dense(FeatureMatrix<DenseVector>, FeatureMatrix<DenseVector>),
}

fn pick<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Re-numbers documents `0..n` in the order given.
fn dense_ids(mut docs: Vec<TokenizedDocument>) -> Vec<TokenizedDocument> {
    for (i, d) in docs.iter_mut().enumerate() {
        d.id = i;
    }
    docs
}

fn stopwords(remove: bool) -> StopwordSet {
    if remove {
        StopwordSet::english()
    } else {
        StopwordSet::empty()
    }
}

fn fold_vocabulary(
    section: &TfidfSection,
    tokens: &[TokenizedDocument],
    split: &IndexSplit,
) -> polarity_core::Result<Vocabulary> {
    tfidf::fit_vocabulary(&pick(tokens, &split.train), &section.to_config())
}

/// The TF-IDF vocabulary each split of `plan` fits, exactly as
/// [`run_experiment`] fits it.
pub fn fold_vocabularies(
    corpus: &Corpus,
    plan: &SplitPlan,
    section: &TfidfSection,
) -> polarity_core::Result<Vec<Vocabulary>> {
    let tokens = preprocess_corpus(corpus, &stopwords(section.remove_stopwords), section.remove_stopwords);
    plan.index_splits(corpus)?
        .iter()
        .map(|split| fold_vocabulary(section, &tokens, split))
        .collect()
}

fn fit_tfidf(
    section: &TfidfSection,
    tokens: &[TokenizedDocument],
    split: &IndexSplit,
    labels: &[Polarity],
) -> polarity_core::Result<Features> {
    let config = section.to_config();
    let train = pick(tokens, &split.train);
    let test = pick(tokens, &split.test);
    let vocab = fold_vocabulary(section, tokens, split)?;
    let dim = vocab.len();
    let x_train = tfidf::transform_corpus(&train, &vocab, &config);
    let x_test = tfidf::transform_corpus(&test, &vocab, &config);
    Ok(Features::Sparse(
        FeatureMatrix::labeled(dim, x_train, pick(labels, &split.train))?,
        FeatureMatrix::labeled(dim, x_test, pick(labels, &split.test))?,
    ))
}

fn fit_doc2vec(
    section: &Doc2VecSection,
    tokens: &[TokenizedDocument],
    split: &IndexSplit,
    labels: &[Polarity],
    seed: u64,
    notes: &mut Vec<String>,
) -> polarity_core::Result<Features> {
    let mut config = section.to_config(seed);
    config.workers = 1;
    let train = dense_ids(pick(tokens, &split.train));
    let model = doc2vec::train(&train, &config)?;
    let dim = model.vector_size();
    let x_train: Vec<DenseVector> = (0..train.len())
        .map(|i| DenseVector::new(model.doc_vector(i).to_vec()))
        .collect();
    let infer_seed = seeds::child(seed, u64::MAX);
    let mut unknown = 0;
    let x_test = split
        .test
        .iter()
        .map(|&i| {
            let inferred = doc2vec::infer_vector(
                &tokens[i],
                &model,
                section.infer_steps(),
                seeds::child(infer_seed, i as u64),
            )?;
            unknown += usize::from(inferred.no_known_tokens);
            Ok(inferred.vector)
        })
        .collect::<polarity_core::Result<Vec<DenseVector>>>()?;
    if unknown > 0 {
        notes.push(format!(
            "{unknown} test documents had no in-vocabulary tokens and were embedded as zero vectors"
        ));
    }
    Ok(Features::Dense(
        FeatureMatrix::labeled(dim, x_train, pick(labels, &split.train))?,
        FeatureMatrix::labeled(dim, x_test, pick(labels, &split.test))?,
    ))
}

struct Constant(Polarity);

impl<V: FeatureVector> Classifier<V> for Constant {
    fn predict(&self, _: &V) -> polarity_core::Result<Polarity> {
        Ok(self.0)
    }
}

fn train_classifier<V>(
    entry: &ClassifierEntry,
    data: &FeatureMatrix<V>,
    notes: &mut Vec<String>,
) -> polarity_core::Result<Box<dyn Classifier<V> + Send + Sync>>
where
    V: FeatureVector + Clone + Send + Sync + 'static,
{
    Ok(match entry {
        ClassifierEntry::Logistic(s) => Box::new(classify::train_logistic(data, &s.to_config())?),
        ClassifierEntry::Knn(s) => Box::new(classify::train_knn(data, s.k)?),
        ClassifierEntry::NaiveBayes(s) => Box::new(classify::train_bernoulli_nb(data, s.alpha)?),
        ClassifierEntry::Svm(s) => {
            let model = classify::train_svm(data, &s.to_config())?;
            if !model.converged {
                let note = format!(
                    "SVM stopped after {} iterations without reaching tolerance {}",
                    model.iterations, s.tol
                );
                log::warn!("{note}");
                notes.push(note);
            }
            Box::new(model)
        }
        ClassifierEntry::Tree(s) => Box::new(classify::train_decision_tree(data, &s.to_config())?),
        ClassifierEntry::Constant(s) => Box::new(Constant(s.label.into())),
    })
}

struct FoldOutcome {
    matrix: ContingencyMatrix,
    train: Duration,
    predict: Duration,
}

fn score<V>(
    entry: &ClassifierEntry,
    train: &FeatureMatrix<V>,
    test: &FeatureMatrix<V>,
    notes: &mut Vec<String>,
) -> polarity_core::Result<FoldOutcome>
where
    V: FeatureVector + Clone + Send + Sync + 'static,
{
    let started = Instant::now();
    let model = train_classifier(entry, train, notes)?;
    let trained = Instant::now();
    let mut matrix = ContingencyMatrix::default();
    for (x, &actual) in test.rows().iter().zip(test.require_labels()?) {
        matrix.record(actual, model.predict(x)?);
    }
    Ok(FoldOutcome {
        matrix,
        train: trained - started,
        predict: trained.elapsed(),
    })
}

/// Runs one experiment: for each split of `plan`, fits the vectorizer on the
/// training documents only, trains the classifier, and scores the test
/// documents. Deterministic in `seed` (Doc2Vec always trains single-threaded
/// here).
pub fn run_experiment(
    corpus: &Corpus,
    plan: &SplitPlan,
    vectorizer: &VectorizerEntry,
    classifier: &ClassifierEntry,
    seed: u64,
) -> Result<EvaluationReport, ExperimentError> {
    let whole = |source| ExperimentError { fold: None, source };
    corpus.require_both_classes().map_err(whole)?;
    let splits = plan.index_splits(corpus).map_err(whole)?;
    let labels = corpus.labels();
    let mut notes = Vec::new();
    if let VectorizerEntry::Doc2vec(s) = vectorizer {
        if s.negative == 0 {
            notes.push(
                "negative sampling disabled: Doc2Vec trained on the observed-word term of the loss only"
                    .to_owned(),
            );
        }
        if s.workers > 1 {
            notes.push(format!(
                "Doc2Vec workers = {} recorded but training ran on one thread for reproducibility",
                s.workers
            ));
        }
    }

    let mut timings = PhaseTimings::default();
    let started = Instant::now();
    let remove_stops = match vectorizer {
        VectorizerEntry::Tfidf(s) => s.remove_stopwords,
        VectorizerEntry::Doc2vec(s) => s.remove_stopwords,
    };
    let tokens = preprocess_corpus(corpus, &stopwords(remove_stops), remove_stops);
    timings.preprocess = started.elapsed().as_secs_f64();

    let mut folds = Vec::with_capacity(splits.len());
    for (f, split) in splits.iter().enumerate() {
        let started = Instant::now();
        let features = match vectorizer {
            VectorizerEntry::Tfidf(s) => fit_tfidf(s, &tokens, split, &labels),
            VectorizerEntry::Doc2vec(s) => {
                fit_doc2vec(s, &tokens, split, &labels, seeds::child(seed, f as u64), &mut notes)
            }
        }
        .map_err(ExperimentError::at(f))?;
        timings.vectorize += started.elapsed().as_secs_f64();

        let outcome = match &features {
            Features::Sparse(train, test) => score(classifier, train, test, &mut notes),
            Features::Dense(train, test) => score(classifier, train, test, &mut notes),
        }
        .map_err(ExperimentError::at(f))?;
        timings.train += outcome.train.as_secs_f64();
        timings.predict += outcome.predict.as_secs_f64();
        let accuracy = outcome.matrix.accuracy().map_err(ExperimentError::at(f))?;
        folds.push(FoldResult {
            matrix: outcome.matrix.into(),
            accuracy,
        });
    }

    let accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    notes.dedup();
    Ok(EvaluationReport {
        dataset: corpus.name().to_owned(),
        vectorizer: vectorizer.clone(),
        classifier: classifier.clone(),
        split: plan.into(),
        seed,
        folds,
        accuracy,
        timings,
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    /// The dataset could not be loaded or split.
    Data,
    /// Vectorizing, training or scoring failed.
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub kind: FailureKind,
    pub message: String,
}

/// Result of one grid cell, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub dataset: String,
    pub vectorizer: String,
    pub classifier: String,
    pub seed: u64,
    #[serde(flatten)]
    pub result: CellResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellResult {
    Ok { report: EvaluationReport },
    Error { error: CellFailure },
}

impl CellOutcome {
    pub fn report(&self) -> Option<&EvaluationReport> {
        match &self.result {
            CellResult::Ok { report } => Some(report),
            CellResult::Error { .. } => None,
        }
    }

    pub fn failure(&self) -> Option<&CellFailure> {
        match &self.result {
            CellResult::Ok { .. } => None,
            CellResult::Error { error } => Some(error),
        }
    }
}

/// Seed used to split `dataset`; shared by every cell on that dataset so
/// that all vectorizer/classifier pairs see the same folds.
pub fn split_seed(master: u64, dataset: &str) -> u64 {
    seeds::derive(master, &["split", dataset])
}

/// Seed for the random choices of one cell.
pub fn cell_seed(master: u64, dataset: &str, vectorizer: &str, classifier: &str) -> u64 {
    seeds::derive(master, &["cell", dataset, vectorizer, classifier])
}

/// Runs every cell, in parallel, returning outcomes in request order. Each
/// distinct dataset is loaded once; a failure affects only its own cells.
pub fn run_grid(cells: &[GridCell], master_seed: u64) -> Vec<CellOutcome> {
    let mut datasets = BTreeMap::new();
    for c in cells {
        datasets.entry(c.dataset.name.clone()).or_insert(&c.dataset);
    }
    let loaded: BTreeMap<String, Result<Corpus, String>> = datasets
        .into_par_iter()
        .map(|(name, entry)| {
            let result = entry.load().map(|l| {
                if l.report.skipped() > 0 {
                    log::warn!(
                        "{name}: skipped {} blank and {} undecodable items",
                        l.report.blank,
                        l.report.undecodable
                    );
                }
                l.corpus
            });
            (name, result.map_err(|e| e.to_string()))
        })
        .collect();

    cells
        .par_iter()
        .map(|cell| {
            let (d, v, c) = (&cell.dataset.name, cell.vectorizer.id(), cell.classifier.id());
            let seed = cell_seed(master_seed, d, v, c);
            let result = match &loaded[d] {
                Err(message) => CellResult::Error {
                    error: CellFailure {
                        kind: FailureKind::Data,
                        message: message.clone(),
                    },
                },
                Ok(corpus) => {
                    let plan = cell.dataset.split.plan(split_seed(master_seed, d));
                    log::info!("running {d} / {v} / {c}");
                    match run_experiment(corpus, &plan, &cell.vectorizer, &cell.classifier, seed) {
                        Ok(report) => CellResult::Ok { report },
                        Err(e) => CellResult::Error {
                            error: CellFailure {
                                kind: if e.fold.is_none() {
                                    FailureKind::Data
                                } else {
                                    FailureKind::Runtime
                                },
                                message: e.to_string(),
                            },
                        },
                    }
                }
            };
            if let CellResult::Error { error } = &result {
                log::error!("{d} / {v} / {c}: {}", error.message);
            }
            CellOutcome {
                dataset: d.clone(),
                vectorizer: v.to_owned(),
                classifier: c.to_owned(),
                seed,
                result,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConstantSection, LabelName, LogisticSection};

    fn keyword_corpus(n_pos: usize, n_neg: usize) -> Corpus {
        let pos = ["wonderful", "superb", "delightful", "brilliant"];
        let neg = ["dreadful", "awful", "terrible", "horrible"];
        let filler = ["movie", "plot", "actor", "scene", "story", "film", "camera"];
        let mut docs = Vec::new();
        for i in 0..n_pos + n_neg {
            let (words, label) = if i < n_pos {
                (&pos, Polarity::Positive)
            } else {
                (&neg, Polarity::Negative)
            };
            let text = format!(
                "{} {} {} {}",
                filler[i % 7],
                words[i % 4],
                filler[(i / 7) % 7],
                words[(i / 4) % 4]
            );
            docs.push((text, label));
        }
        Corpus::from_labeled("keywords", docs).unwrap()
    }

    fn tfidf() -> VectorizerEntry {
        VectorizerEntry::Tfidf(TfidfSection {
            id: "tfidf".into(),
            min_df: 2,
            ..TfidfSection::default()
        })
    }

    fn logistic() -> ClassifierEntry {
        ClassifierEntry::Logistic(LogisticSection {
            id: "lr".into(),
            ..LogisticSection::default()
        })
    }

    #[test]
    fn kfold_gives_one_matrix_per_fold() {
        let plan = SplitPlan::KFold { k: 10, seed: 1 };
        let r = run_experiment(&keyword_corpus(100, 100), &plan, &tfidf(), &logistic(), 3).unwrap();
        assert_eq!(r.folds.len(), 10);
        let total: u64 = r.folds.iter().map(|f| ContingencyMatrix::from(f.matrix).total()).sum();
        assert_eq!(total, 200);
    }

    #[test]
    fn constant_classifier_scores_class_share() {
        let constant = ClassifierEntry::Constant(ConstantSection {
            id: "always-pos".into(),
            label: LabelName::Positive,
        });
        let plan = SplitPlan::KFold { k: 5, seed: 2 };
        let r = run_experiment(&keyword_corpus(60, 40), &plan, &tfidf(), &constant, 0).unwrap();
        assert!((r.accuracy - 60.0).abs() < 1e-9, "{}", r.accuracy);
    }

    #[test]
    fn separable_corpus_is_learned_perfectly() {
        let plan = SplitPlan::KFold { k: 10, seed: 5 };
        let r = run_experiment(&keyword_corpus(100, 100), &plan, &tfidf(), &logistic(), 0).unwrap();
        assert_eq!(r.accuracy, 100.0);
    }

    #[test]
    fn fold_errors_are_tagged() {
        let strict = VectorizerEntry::Tfidf(TfidfSection {
            id: "strict".into(),
            min_df: 10_000,
            ..TfidfSection::default()
        });
        let plan = SplitPlan::KFold { k: 3, seed: 0 };
        let err = run_experiment(&keyword_corpus(10, 10), &plan, &strict, &logistic(), 0).unwrap_err();
        assert_eq!(err.fold, Some(0));
        assert!(err.to_string().starts_with("fold 0: "));
    }

    #[test]
    fn seeds_depend_on_identity() {
        assert_eq!(cell_seed(1, "a", "b", "c"), cell_seed(1, "a", "b", "c"));
        assert_ne!(cell_seed(1, "a", "b", "c"), cell_seed(1, "a", "b", "d"));
        assert_ne!(split_seed(1, "a"), split_seed(2, "a"));
    }
}
