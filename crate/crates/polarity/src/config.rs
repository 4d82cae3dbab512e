//! TOML run configuration.
//!
//! ```toml
//! seed = 42
//!
//! [output]
//! path = "results.csv"
//! format = "csv"
//!
//! [[dataset]]
//! name = "uci"
//! format = "tab"
//! paths = ["amazon_cells_labelled.txt"]
//! split = { kind = "kfold", k = 10 }
//!
//! [[vectorizer]]
//! kind = "tfidf"
//!
//! [[classifier]]
//! kind = "logistic"
//! ```
//!
//! Omitted hyperparameters take their documented defaults, unknown keys are
//! rejected, and relative paths are resolved against the config file's
//! directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use polarity_core::classify::{Kernel, LogisticConfig, SvmConfig, TreeConfig};
use polarity_core::corpus::{Polarity, SplitPlan};
use polarity_core::doc2vec::Doc2VecConfig;
use polarity_core::tfidf::TfidfConfig;

use crate::loaders::{self, LoadError, Loaded};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetEntry>,
    #[serde(rename = "vectorizer", default)]
    pub vectorizers: Vec<VectorizerEntry>,
    #[serde(rename = "classifier", default)]
    pub classifiers: Vec<ClassifierEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// `text<TAB>label` lines, from one or more files.
    Tab,
    /// One review per file under `pos` and `neg` directories.
    DirPair,
    /// One review per line in `pos` and `neg` files.
    LinePair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SplitSection {
    Holdout { train: usize, test: usize },
    Kfold { k: usize },
}

impl SplitSection {
    pub fn plan(&self, seed: u64) -> SplitPlan {
        match *self {
            SplitSection::Holdout { train, test } => SplitPlan::HoldOut {
                train_count: train,
                test_count: test,
                seed,
            },
            SplitSection::Kfold { k } => SplitPlan::KFold { k, seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub format: DatasetFormat,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg: Option<PathBuf>,
    pub split: SplitSection,
    /// Vectorizer ids run on this dataset; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectorizers: Option<Vec<String>>,
    /// Classifier ids run on this dataset; all of them when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifiers: Option<Vec<String>>,
}

impl DatasetEntry {
    pub fn load(&self) -> Result<Loaded, LoadError> {
        let mut loaded = match self.format {
            DatasetFormat::Tab => loaders::load_tab_labeled_files(&self.name, &self.paths)?,
            DatasetFormat::DirPair => {
                loaders::load_directory_pair(self.pos_path(), self.neg_path())?
            }
            DatasetFormat::LinePair => loaders::load_line_pair(self.pos_path(), self.neg_path())?,
        };
        if loaded.corpus.name() != self.name {
            let docs = loaded
                .corpus
                .documents()
                .iter()
                .map(|d| (d.text.clone(), d.label));
            loaded.corpus = polarity_core::corpus::Corpus::from_labeled(self.name.clone(), docs)?;
        }
        Ok(loaded)
    }

    fn pos_path(&self) -> &Path {
        self.pos.as_deref().unwrap_or(Path::new(""))
    }

    fn neg_path(&self) -> &Path {
        self.neg.as_deref().unwrap_or(Path::new(""))
    }

    fn runs_vectorizer(&self, id: &str) -> bool {
        self.vectorizers.as_ref().is_none_or(|v| v.iter().any(|x| x == id))
    }

    fn runs_classifier(&self, id: &str) -> bool {
        self.classifiers.as_ref().is_none_or(|v| v.iter().any(|x| x == id))
    }
}

// Marks an error raised inside a `kind`-tagged section so that
// `parse_config_str` can splice the inner key path onto the outer one.
const NESTED: char = '\u{1f}';

/// Pulls `kind` out of a tagged table.
fn split_kind<E: serde::de::Error>(mut table: toml::Table) -> Result<(String, toml::Table), E> {
    match table.remove("kind") {
        Some(toml::Value::String(kind)) => Ok((kind, table)),
        Some(other) => Err(E::custom(format!("{NESTED}kind{NESTED}expected a string, found {}", other.type_str()))),
        None => Err(E::missing_field("kind")),
    }
}

/// Deserializes the rest of a tagged table, keeping the inner key path.
fn section<T: serde::de::DeserializeOwned, E: serde::de::Error>(table: toml::Table) -> Result<T, E> {
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        E::custom(format!("{NESTED}{path}{NESTED}{}", e.into_inner().message()))
    })
}

impl<'de> Deserialize<'de> for VectorizerEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (kind, rest) = split_kind(toml::Table::deserialize(d)?)?;
        Ok(match kind.as_str() {
            "tfidf" => VectorizerEntry::Tfidf(section(rest)?),
            "doc2vec" => VectorizerEntry::Doc2vec(section(rest)?),
            other => return Err(serde::de::Error::unknown_variant(other, &["tfidf", "doc2vec"])),
        })
    }
}

impl<'de> Deserialize<'de> for ClassifierEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (kind, rest) = split_kind(toml::Table::deserialize(d)?)?;
        Ok(match kind.as_str() {
            "logistic" => ClassifierEntry::Logistic(section(rest)?),
            "knn" => ClassifierEntry::Knn(section(rest)?),
            "naive-bayes" => ClassifierEntry::NaiveBayes(section(rest)?),
            "svm" => ClassifierEntry::Svm(section(rest)?),
            "tree" => ClassifierEntry::Tree(section(rest)?),
            "constant" => ClassifierEntry::Constant(section(rest)?),
            other => {
                return Err(serde::de::Error::unknown_variant(
                    other,
                    &["logistic", "knn", "naive-bayes", "svm", "tree", "constant"],
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VectorizerEntry {
    Tfidf(TfidfSection),
    Doc2vec(Doc2VecSection),
}

impl VectorizerEntry {
    pub fn id(&self) -> &str {
        match self {
            VectorizerEntry::Tfidf(s) => &s.id,
            VectorizerEntry::Doc2vec(s) => &s.id,
        }
    }

    fn id_mut(&mut self) -> &mut String {
        match self {
            VectorizerEntry::Tfidf(s) => &mut s.id,
            VectorizerEntry::Doc2vec(s) => &mut s.id,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            VectorizerEntry::Tfidf(_) => "tfidf",
            VectorizerEntry::Doc2vec(_) => "doc2vec",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfidfSection {
    pub id: String,
    pub min_df: usize,
    pub max_df: f64,
    pub sublinear_tf: bool,
    pub use_idf: bool,
    pub l2_normalize: bool,
    pub remove_stopwords: bool,
}

impl Default for TfidfSection {
    fn default() -> Self {
        let c = TfidfConfig::default();
        TfidfSection {
            id: String::new(),
            min_df: c.min_df,
            max_df: c.max_df,
            sublinear_tf: c.sublinear_tf,
            use_idf: c.use_idf,
            l2_normalize: c.l2_normalize,
            remove_stopwords: true,
        }
    }
}

impl TfidfSection {
    pub fn to_config(&self) -> TfidfConfig {
        TfidfConfig {
            min_df: self.min_df,
            max_df: self.max_df,
            sublinear_tf: self.sublinear_tf,
            use_idf: self.use_idf,
            l2_normalize: self.l2_normalize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Doc2VecSection {
    pub id: String,
    pub min_count: u64,
    pub window: usize,
    pub vector_size: usize,
    pub sample: f64,
    pub negative: usize,
    /// Recorded, but experiments always train with one worker.
    pub workers: usize,
    pub dm: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub noise_exponent: f64,
    pub dynamic_window: bool,
    pub remove_stopwords: bool,
    /// Inference passes per test document; the epoch count when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infer_steps: Option<usize>,
}

impl Default for Doc2VecSection {
    fn default() -> Self {
        let c = Doc2VecConfig::default();
        Doc2VecSection {
            id: String::new(),
            min_count: c.min_count,
            window: c.window,
            vector_size: c.vector_size,
            sample: c.sample,
            negative: c.negative,
            workers: c.workers,
            dm: c.dm,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            min_learning_rate: c.min_learning_rate,
            noise_exponent: c.noise_exponent,
            dynamic_window: c.dynamic_window,
            remove_stopwords: false,
            infer_steps: None,
        }
    }
}

impl Doc2VecSection {
    pub fn to_config(&self, seed: u64) -> Doc2VecConfig {
        Doc2VecConfig {
            min_count: self.min_count,
            window: self.window,
            vector_size: self.vector_size,
            sample: self.sample,
            negative: self.negative,
            workers: self.workers,
            dm: self.dm,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            min_learning_rate: self.min_learning_rate,
            noise_exponent: self.noise_exponent,
            dynamic_window: self.dynamic_window,
            seed,
        }
    }

    pub fn infer_steps(&self) -> usize {
        self.infer_steps.unwrap_or(self.epochs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassifierEntry {
    Logistic(LogisticSection),
    Knn(KnnSection),
    NaiveBayes(NaiveBayesSection),
    Svm(SvmSection),
    Tree(TreeSection),
    /// Always predicts one label; a floor for the other classifiers.
    Constant(ConstantSection),
}

impl ClassifierEntry {
    pub fn id(&self) -> &str {
        match self {
            ClassifierEntry::Logistic(s) => &s.id,
            ClassifierEntry::Knn(s) => &s.id,
            ClassifierEntry::NaiveBayes(s) => &s.id,
            ClassifierEntry::Svm(s) => &s.id,
            ClassifierEntry::Tree(s) => &s.id,
            ClassifierEntry::Constant(s) => &s.id,
        }
    }

    fn id_mut(&mut self) -> &mut String {
        match self {
            ClassifierEntry::Logistic(s) => &mut s.id,
            ClassifierEntry::Knn(s) => &mut s.id,
            ClassifierEntry::NaiveBayes(s) => &mut s.id,
            ClassifierEntry::Svm(s) => &mut s.id,
            ClassifierEntry::Tree(s) => &mut s.id,
            ClassifierEntry::Constant(s) => &mut s.id,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            ClassifierEntry::Logistic(_) => "logistic",
            ClassifierEntry::Knn(_) => "knn",
            ClassifierEntry::NaiveBayes(_) => "naive-bayes",
            ClassifierEntry::Svm(s) => match s.kernel {
                KernelName::Linear => "svm-linear",
                KernelName::Rbf => "svm-rbf",
            },
            ClassifierEntry::Tree(_) => "tree",
            ClassifierEntry::Constant(_) => "constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticSection {
    pub id: String,
    pub reg_lambda: f64,
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for LogisticSection {
    fn default() -> Self {
        let c = LogisticConfig::default();
        LogisticSection {
            id: String::new(),
            reg_lambda: c.reg_lambda,
            learning_rate: c.learning_rate,
            iterations: c.iterations,
        }
    }
}

impl LogisticSection {
    pub fn to_config(&self) -> LogisticConfig {
        LogisticConfig {
            reg_lambda: self.reg_lambda,
            learning_rate: self.learning_rate,
            iterations: self.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnSection {
    pub id: String,
    pub k: usize,
}

impl Default for KnnSection {
    fn default() -> Self {
        KnnSection {
            id: String::new(),
            k: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NaiveBayesSection {
    pub id: String,
    pub alpha: f64,
}

impl Default for NaiveBayesSection {
    fn default() -> Self {
        NaiveBayesSection {
            id: String::new(),
            alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSection {
    pub id: String,
    pub kernel: KernelName,
    pub c: f64,
    pub tol: f64,
    /// RBF width; `1 / dimension` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub max_passes: usize,
    pub cache_rows: usize,
}

impl Default for SvmSection {
    fn default() -> Self {
        let c = SvmConfig::default();
        SvmSection {
            id: String::new(),
            kernel: KernelName::Linear,
            c: c.c,
            tol: c.tol,
            gamma: None,
            max_passes: c.max_passes,
            cache_rows: c.cache_rows,
        }
    }
}

impl SvmSection {
    pub fn to_config(&self) -> SvmConfig {
        SvmConfig {
            kernel: match self.kernel {
                KernelName::Linear => Kernel::Linear,
                KernelName::Rbf => Kernel::Rbf { gamma: self.gamma },
            },
            c: self.c,
            tol: self.tol,
            max_passes: self.max_passes,
            cache_rows: self.cache_rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeSection {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeSection {
    fn default() -> Self {
        TreeSection {
            id: String::new(),
            max_depth: None,
            min_leaf: 1,
        }
    }
}

impl TreeSection {
    pub fn to_config(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelName {
    Positive,
    Negative,
}

impl From<LabelName> for Polarity {
    fn from(l: LabelName) -> Polarity {
        match l {
            LabelName::Positive => Polarity::Positive,
            LabelName::Negative => Polarity::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantSection {
    pub id: String,
    pub label: LabelName,
}

impl Default for ConstantSection {
    fn default() -> Self {
        ConstantSection {
            id: String::new(),
            label: LabelName::Positive,
        }
    }
}

/// One (dataset, vectorizer, classifier) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub dataset: DatasetEntry,
    pub vectorizer: VectorizerEntry,
    pub classifier: ClassifierEntry,
}

/// Reads, fills defaults and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_owned(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut config = parse_config_str(&text)?;
    config.resolve_paths(base);
    config.check_paths()?;
    Ok(config)
}

/// Parses and validates configuration text without touching the filesystem.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::new(text);
    let mut config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let mut key = e.path().to_string();
        let inner = e.into_inner();
        let mut message = inner.message().to_owned();
        let nested: Vec<&str> = message.split(NESTED).collect();
        if let [_, path, rest] = nested.as_slice() {
            if *path != "." {
                key = format!("{key}.{path}");
            }
            message = rest.to_string();
        }
        let message = match inner.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("{message} (line {line})")
            }
            None => message,
        };
        ConfigError::invalid(if key == "." { "<root>".to_owned() } else { key }, message)
    })?;
    config.fill_ids();
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    fn fill_ids(&mut self) {
        for v in &mut self.vectorizers {
            if v.id().is_empty() {
                *v.id_mut() = v.kind().to_owned();
            }
        }
        for c in &mut self.classifiers {
            if c.id().is_empty() {
                *c.id_mut() = c.kind().to_owned();
            }
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let unique = |key: &str, ids: Vec<&str>| -> Result<(), ConfigError> {
            let mut seen = BTreeSet::new();
            for (i, id) in ids.into_iter().enumerate() {
                if !seen.insert(id) {
                    return Err(ConfigError::invalid(
                        format!("{key}[{i}]"),
                        format!("duplicate name {id:?}"),
                    ));
                }
            }
            Ok(())
        };
        unique("dataset", self.datasets.iter().map(|d| d.name.as_str()).collect())?;
        unique("vectorizer", self.vectorizers.iter().map(|v| v.id()).collect())?;
        unique("classifier", self.classifiers.iter().map(|c| c.id()).collect())?;

        for (i, d) in self.datasets.iter().enumerate() {
            let key = |field: &str| format!("dataset[{i}].{field}");
            if d.name.is_empty() {
                return Err(ConfigError::invalid(key("name"), "must not be empty"));
            }
            match d.format {
                DatasetFormat::Tab => {
                    if d.paths.is_empty() {
                        return Err(ConfigError::invalid(key("paths"), "tab format needs at least one file"));
                    }
                    for field in ["pos", "neg"] {
                        let set = if field == "pos" { &d.pos } else { &d.neg };
                        if set.is_some() {
                            return Err(ConfigError::invalid(key(field), "not used by the tab format; use `paths`"));
                        }
                    }
                }
                DatasetFormat::DirPair | DatasetFormat::LinePair => {
                    if d.pos.is_none() {
                        return Err(ConfigError::invalid(key("pos"), "missing"));
                    }
                    if d.neg.is_none() {
                        return Err(ConfigError::invalid(key("neg"), "missing"));
                    }
                    if !d.paths.is_empty() {
                        return Err(ConfigError::invalid(key("paths"), "only used by the tab format"));
                    }
                }
            }
            match d.split {
                SplitSection::Kfold { k } if k < 2 => {
                    return Err(ConfigError::invalid(key("split.k"), "must be at least 2"));
                }
                SplitSection::Holdout { train: 0, .. } => {
                    return Err(ConfigError::invalid(key("split.train"), "must be positive"));
                }
                _ => {}
            }
            for (field, ids, known) in [
                ("vectorizers", &d.vectorizers, self.vectorizers.iter().map(|v| v.id()).collect::<Vec<_>>()),
                ("classifiers", &d.classifiers, self.classifiers.iter().map(|c| c.id()).collect()),
            ] {
                for (j, id) in ids.iter().flatten().enumerate() {
                    if !known.contains(&id.as_str()) {
                        return Err(ConfigError::invalid(
                            format!("dataset[{i}].{field}[{j}]"),
                            format!("no {} with id {id:?}", &field[..field.len() - 1]),
                        ));
                    }
                }
            }
        }

        for (i, v) in self.vectorizers.iter().enumerate() {
            let result = match v {
                VectorizerEntry::Tfidf(s) => s.to_config().validate(),
                VectorizerEntry::Doc2vec(s) => s.to_config(0).validate(),
            };
            result.map_err(|e| ConfigError::invalid(format!("vectorizer[{i}]"), e.to_string()))?;
        }
        for (i, c) in self.classifiers.iter().enumerate() {
            let key = |field: &str| format!("classifier[{i}].{field}");
            match c {
                ClassifierEntry::Knn(s) if s.k == 0 => return Err(ConfigError::invalid(key("k"), "must be at least 1")),
                ClassifierEntry::NaiveBayes(s) if !(s.alpha > 0.0) => {
                    return Err(ConfigError::invalid(key("alpha"), "must be positive"))
                }
                ClassifierEntry::Svm(s) => s
                    .to_config()
                    .validate()
                    .map_err(|e| ConfigError::invalid(format!("classifier[{i}]"), e.to_string()))?,
                ClassifierEntry::Logistic(s) if !(s.learning_rate > 0.0) || !(s.reg_lambda >= 0.0) => {
                    return Err(ConfigError::invalid(
                        format!("classifier[{i}]"),
                        "learning_rate must be positive and reg_lambda non-negative",
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for d in &mut self.datasets {
            d.paths.iter_mut().for_each(resolve);
            d.pos.iter_mut().for_each(resolve);
            d.neg.iter_mut().for_each(resolve);
        }
        self.output.path.iter_mut().for_each(resolve);
    }

    fn check_paths(&self) -> Result<(), ConfigError> {
        for (i, d) in self.datasets.iter().enumerate() {
            let mut named: Vec<(String, &PathBuf)> = d
                .paths
                .iter()
                .enumerate()
                .map(|(j, p)| (format!("dataset[{i}].paths[{j}]"), p))
                .collect();
            named.extend(d.pos.iter().map(|p| (format!("dataset[{i}].pos"), p)));
            named.extend(d.neg.iter().map(|p| (format!("dataset[{i}].neg"), p)));
            for (key, p) in named {
                if !p.exists() {
                    return Err(ConfigError::invalid(key, format!("{} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    /// Keeps only the named datasets, vectorizers and classifiers; an empty
    /// filter keeps everything.
    pub fn select(
        mut self,
        datasets: &[String],
        vectorizers: &[String],
        classifiers: &[String],
    ) -> Result<RunConfig, ConfigError> {
        fn check(flag: &str, wanted: &[String], known: &[&str]) -> Result<(), ConfigError> {
            for w in wanted {
                if !known.contains(&w.as_str()) {
                    return Err(ConfigError::invalid(
                        flag,
                        format!("{w:?} is not defined in the config (known: {})", known.join(", ")),
                    ));
                }
            }
            Ok(())
        }
        check("--dataset", datasets, &self.datasets.iter().map(|d| d.name.as_str()).collect::<Vec<_>>())?;
        check("--vectorizer", vectorizers, &self.vectorizers.iter().map(|v| v.id()).collect::<Vec<_>>())?;
        check("--classifier", classifiers, &self.classifiers.iter().map(|c| c.id()).collect::<Vec<_>>())?;
        let keep = |wanted: &[String], id: &str| wanted.is_empty() || wanted.iter().any(|w| w == id);
        self.datasets.retain(|d| keep(datasets, &d.name));
        self.vectorizers.retain(|v| keep(vectorizers, v.id()));
        self.classifiers.retain(|c| keep(classifiers, c.id()));
        Ok(self)
    }

    /// Every (dataset, vectorizer, classifier) combination, datasets outermost.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for d in &self.datasets {
            for v in self.vectorizers.iter().filter(|v| d.runs_vectorizer(v.id())) {
                for c in self.classifiers.iter().filter(|c| d.runs_classifier(c.id())) {
                    cells.push(GridCell {
                        dataset: d.clone(),
                        vectorizer: v.clone(),
                        classifier: c.clone(),
                    });
                }
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 7

[[dataset]]
name = "toy"
format = "line-pair"
pos = "p.txt"
neg = "n.txt"
split = { kind = "kfold", k = 10 }

[[vectorizer]]
kind = "tfidf"

[[vectorizer]]
kind = "doc2vec"
id = "d2v"
dm = true

[[classifier]]
kind = "svm"
kernel = "rbf"

[[classifier]]
kind = "knn"
id = "knn5"
k = 5
"#;

    #[test]
    fn defaults_fill_in() {
        let c = parse_config_str(SAMPLE).unwrap();
        assert_eq!(c.seed, 7);
        let VectorizerEntry::Tfidf(t) = &c.vectorizers[0] else { panic!() };
        assert_eq!((t.id.as_str(), t.min_df, t.max_df), ("tfidf", 5, 0.8));
        assert!(t.sublinear_tf && t.use_idf && t.remove_stopwords);
        let VectorizerEntry::Doc2vec(d) = &c.vectorizers[1] else { panic!() };
        assert_eq!((d.window, d.vector_size, d.min_count), (10, 100, 1));
        assert!(d.dm && !d.remove_stopwords);
        assert_eq!(c.classifiers[0].id(), "svm-rbf");
        assert_eq!(c.cells().len(), 4);
    }

    #[test]
    fn empty_sections_take_defaults() {
        let c = parse_config_str("[[vectorizer]]\nkind = \"tfidf\"\n[[vectorizer]]\nkind = \"doc2vec\"\n").unwrap();
        assert_eq!(
            c.vectorizers,
            vec![
                VectorizerEntry::Tfidf(TfidfSection { id: "tfidf".into(), ..TfidfSection::default() }),
                VectorizerEntry::Doc2vec(Doc2VecSection { id: "doc2vec".into(), ..Doc2VecSection::default() }),
            ]
        );
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config_str("[[vectorizer]]\nkind = \"tfidf\"\nmin_dff = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("min_dff"), "{msg}");
        assert!(msg.starts_with("vectorizer[0]"), "{msg}");

        let err = parse_config_str("sed = 1\n").unwrap_err().to_string();
        assert!(err.contains("sed"), "{err}");
    }

    #[test]
    fn type_mismatch_is_named() {
        let err = parse_config_str("[[classifier]]\nkind = \"knn\"\nk = \"three\"\n").unwrap_err().to_string();
        assert!(err.starts_with("classifier[0].k"), "{err}");
    }

    #[test]
    fn structural_errors_are_named() {
        let err = parse_config_str(
            "[[dataset]]\nname = \"x\"\nformat = \"dir-pair\"\npos = \"a\"\nsplit = { kind = \"kfold\", k = 10 }\n",
        )
        .unwrap_err()
        .to_string();
        assert!(err.starts_with("dataset[0].neg"), "{err}");
        let err = parse_config_str("[[classifier]]\nkind = \"knn\"\n[[classifier]]\nkind = \"knn\"\n")
            .unwrap_err()
            .to_string();
        assert!(err.starts_with("classifier[1]"), "{err}");
    }

    #[test]
    fn missing_path_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(dir.path().join("p.txt"), "good\n").unwrap();
        std::fs::write(&cfg, SAMPLE).unwrap();
        let err = parse_config(&cfg).unwrap_err().to_string();
        assert!(err.starts_with("dataset[0].neg"), "{err}");
        std::fs::write(dir.path().join("n.txt"), "bad\n").unwrap();
        let c = parse_config(&cfg).unwrap();
        assert_eq!(c.datasets[0].pos.as_deref(), Some(dir.path().join("p.txt").as_path()));
    }

    #[test]
    fn round_trip() {
        let c = parse_config_str(SAMPLE).unwrap();
        let again = parse_config_str(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn selection_filters_and_rejects_unknown() {
        let c = parse_config_str(SAMPLE).unwrap();
        let s = c.clone().select(&[], &["d2v".into()], &[]).unwrap();
        assert_eq!(s.cells().len(), 2);
        assert!(c.select(&["nope".into()], &[], &[]).is_err());
    }

    #[test]
    fn per_dataset_restrictions() {
        let text = SAMPLE.replace(
            "split = { kind = \"kfold\", k = 10 }",
            "split = { kind = \"kfold\", k = 10 }\nclassifiers = [\"knn5\"]",
        );
        let c = parse_config_str(&text).unwrap();
        assert_eq!(c.cells().len(), 2);
        let bad = SAMPLE.replace(
            "split = { kind = \"kfold\", k = 10 }",
            "split = { kind = \"kfold\", k = 10 }\nvectorizers = [\"w2v\"]",
        );
        let err = parse_config_str(&bad).unwrap_err().to_string();
        assert!(err.starts_with("dataset[0].vectorizers[0]"), "{err}");
    }
}
