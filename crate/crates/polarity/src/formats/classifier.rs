//! Text format for trained classifiers.
//!
//! ```text
//! polarity-model 1
//! kind svm
//! vectors sparse
//! dimension 3
//! config kernel=rbf gamma=0.5 c=1.0 tol=0.001 max_passes=100 cache_rows=1024
//! <body, per kind>
//! ```
//!
//! Reals are written in Rust's shortest round-trip notation, so reading a
//! file back reproduces every parameter bit for bit. A sparse vector is
//! `index:value` pairs separated by spaces (`-` when empty); a dense vector
//! is its values separated by spaces.

use std::collections::BTreeMap;
use std::io::Write;

use polarity_core::classify::{
    BernoulliNbModel, Classifier, DecisionTreeModel, Kernel, KnnModel, LogisticConfig, LogisticModel,
    SvmConfig, SvmModel, TreeConfig, TreeNode,
};
use polarity_core::corpus::Polarity;
use polarity_core::features::{DenseVector, FeatureVector, SparseVector};

use super::{check_magic, FormatError, Lines};

const MAGIC: &str = "polarity-model";
const VERSION: u32 = 1;

/// Feature vectors that can be written on one line.
pub trait VectorCodec: FeatureVector + Sized {
    const TAG: &'static str;
    fn encode(&self) -> String;
    fn decode(dimension: usize, text: &str) -> Result<Self, String>;
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("bad number {s:?}"))
}

impl VectorCodec for SparseVector {
    const TAG: &'static str = "sparse";

    fn encode(&self) -> String {
        if self.nnz() == 0 {
            return "-".into();
        }
        let parts: Vec<String> = self.entries().map(|(i, v)| format!("{i}:{v:?}")).collect();
        parts.join(" ")
    }

    fn decode(dimension: usize, text: &str) -> Result<Self, String> {
        if text == "-" {
            return Ok(SparseVector::zeros(dimension));
        }
        let entries = text
            .split(' ')
            .map(|pair| {
                let (i, v) = pair.split_once(':').ok_or_else(|| format!("bad entry {pair:?}"))?;
                let i = i.parse().map_err(|_| format!("bad index {i:?}"))?;
                Ok((i, parse_f64(v)?))
            })
            .collect::<Result<Vec<_>, String>>()?;
        SparseVector::from_sorted(dimension, entries).map_err(|e| e.to_string())
    }
}

impl VectorCodec for DenseVector {
    const TAG: &'static str = "dense";

    fn encode(&self) -> String {
        join(self.values())
    }

    fn decode(dimension: usize, text: &str) -> Result<Self, String> {
        let values = parse_list(text)?;
        if values.len() != dimension {
            return Err(format!("expected {dimension} values, found {}", values.len()));
        }
        Ok(DenseVector::new(values))
    }
}

fn join(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    parts.join(" ")
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(' ').map(parse_f64).collect()
}

/// A trained classifier together with the settings it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel<V> {
    Logistic { config: LogisticConfig, model: LogisticModel },
    Knn(KnnModel<V>),
    NaiveBayes { alpha: f64, model: BernoulliNbModel },
    Svm { config: SvmConfig, model: SvmModel<V> },
    Tree { config: TreeConfig, model: DecisionTreeModel },
}

impl<V: FeatureVector> ClassifierModel<V> {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierModel::Logistic { .. } => "logistic",
            ClassifierModel::Knn(_) => "knn",
            ClassifierModel::NaiveBayes { .. } => "naive-bayes",
            ClassifierModel::Svm { .. } => "svm",
            ClassifierModel::Tree { .. } => "tree",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            ClassifierModel::Logistic { model, .. } => model.dimension(),
            ClassifierModel::Knn(m) => m.dimension(),
            ClassifierModel::NaiveBayes { model, .. } => model.dimension(),
            ClassifierModel::Svm { model, .. } => model.dimension,
            ClassifierModel::Tree { model, .. } => model.dimension(),
        }
    }
}

impl<V: FeatureVector> Classifier<V> for ClassifierModel<V> {
    fn predict(&self, x: &V) -> polarity_core::Result<Polarity> {
        match self {
            ClassifierModel::Logistic { model, .. } => model.predict(x),
            ClassifierModel::Knn(m) => m.predict(x),
            ClassifierModel::NaiveBayes { model, .. } => model.predict(x),
            ClassifierModel::Svm { model, .. } => model.predict(x),
            ClassifierModel::Tree { model, .. } => model.predict(x),
        }
    }
}

fn config_line<V: FeatureVector>(m: &ClassifierModel<V>) -> String {
    match m {
        ClassifierModel::Logistic { config, .. } => format!(
            "reg_lambda={:?} learning_rate={:?} iterations={}",
            config.reg_lambda, config.learning_rate, config.iterations
        ),
        ClassifierModel::Knn(m) => format!("k={}", m.k()),
        ClassifierModel::NaiveBayes { alpha, .. } => format!("alpha={alpha:?}"),
        ClassifierModel::Svm { config, .. } => {
            let kernel = match config.kernel {
                Kernel::Linear => "kernel=linear".to_owned(),
                Kernel::Rbf { gamma: None } => "kernel=rbf gamma=auto".to_owned(),
                Kernel::Rbf { gamma: Some(g) } => format!("kernel=rbf gamma={g:?}"),
            };
            format!(
                "{kernel} c={:?} tol={:?} max_passes={} cache_rows={}",
                config.c, config.tol, config.max_passes, config.cache_rows
            )
        }
        ClassifierModel::Tree { config, .. } => {
            let depth = config.max_depth.map_or("none".to_owned(), |d| d.to_string());
            format!("max_depth={depth} min_leaf={}", config.min_leaf)
        }
    }
}

pub fn write_classifier<V: VectorCodec, W: Write>(model: &ClassifierModel<V>, mut out: W) -> Result<(), FormatError> {
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "kind {}", model.kind())?;
    writeln!(out, "vectors {}", V::TAG)?;
    writeln!(out, "dimension {}", model.dimension())?;
    writeln!(out, "config {}", config_line(model))?;
    match model {
        ClassifierModel::Logistic { model, .. } => {
            writeln!(out, "bias {:?}", model.bias)?;
            writeln!(out, "gradient_norm {:?}", model.gradient_norm)?;
            writeln!(out, "loss {:?}", model.loss)?;
            writeln!(out, "weights {}", join(&model.weights))?;
        }
        ClassifierModel::Knn(m) => {
            writeln!(out, "rows {}", m.len())?;
            for (row, label) in m.rows().iter().zip(m.labels()) {
                writeln!(out, "{} {}", label.as_label(), row.encode())?;
            }
        }
        ClassifierModel::NaiveBayes { model, .. } => {
            writeln!(out, "priors {:?} {:?}", model.class_priors[0], model.class_priors[1])?;
            writeln!(out, "positive {}", join(&model.feature_probs[0]))?;
            writeln!(out, "negative {}", join(&model.feature_probs[1]))?;
        }
        ClassifierModel::Svm { model, .. } => {
            writeln!(out, "bias {:?}", model.bias)?;
            match &model.weights {
                Some(w) => writeln!(out, "weights {}", join(w))?,
                None => writeln!(out, "weights none")?,
            }
            writeln!(out, "support {}", model.support_vectors.len())?;
            for (sv, coef) in model.support_vectors.iter().zip(&model.coefficients) {
                writeln!(out, "{coef:?} {}", sv.encode())?;
            }
        }
        ClassifierModel::Tree { model, .. } => {
            writeln!(out, "nodes {}", model.nodes().len())?;
            for node in model.nodes() {
                match *node {
                    TreeNode::Test { feature, threshold, left, right } => {
                        writeln!(out, "test {feature} {threshold:?} {left} {right}")?
                    }
                    TreeNode::Leaf { label } => writeln!(out, "leaf {}", label.as_label())?,
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

struct ConfigFields<'a> {
    fields: BTreeMap<&'a str, &'a str>,
}

impl<'a> ConfigFields<'a> {
    fn new(lines: &Lines<'_>, text: &'a str) -> Result<Self, FormatError> {
        let mut fields = BTreeMap::new();
        for part in text.split(' ') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| lines.error(format!("expected key=value, found {part:?}")))?;
            fields.insert(k, v);
        }
        Ok(ConfigFields { fields })
    }

    fn raw(&mut self, lines: &Lines<'_>, key: &str) -> Result<&'a str, FormatError> {
        self.fields
            .remove(key)
            .ok_or_else(|| lines.error(format!("config is missing {key}")))
    }

    fn get<T: std::str::FromStr>(&mut self, lines: &Lines<'_>, key: &str) -> Result<T, FormatError> {
        let v = self.raw(lines, key)?;
        v.parse().map_err(|_| lines.error(format!("bad value for {key}: {v:?}")))
    }

    fn done(self, lines: &Lines<'_>) -> Result<(), FormatError> {
        match self.fields.keys().next() {
            Some(k) => Err(lines.error(format!("unknown config key {k}"))),
            None => Ok(()),
        }
    }
}

fn parse_label(lines: &Lines<'_>, s: &str) -> Result<Polarity, FormatError> {
    s.parse::<u8>()
        .ok()
        .and_then(Polarity::from_label)
        .ok_or_else(|| lines.error(format!("bad label {s:?}")))
}

fn floats(lines: &mut Lines<'_>, key: &str, expected: usize) -> Result<Vec<f64>, FormatError> {
    let text = lines.field(key)?;
    let v = parse_list(text).map_err(|m| lines.error(m))?;
    if v.len() != expected {
        return Err(lines.error(format!("{key}: expected {expected} values, found {}", v.len())));
    }
    Ok(v)
}

fn count(lines: &mut Lines<'_>, key: &str) -> Result<usize, FormatError> {
    lines.parse(key)
}

pub fn read_classifier<V: VectorCodec + Clone>(text: &str) -> Result<ClassifierModel<V>, FormatError> {
    let mut lines = Lines::new(text);
    check_magic(&mut lines, MAGIC, VERSION)?;
    let kind = lines.field("kind")?;
    let tag = lines.field("vectors")?;
    if tag != V::TAG {
        return Err(lines.error(format!("model holds {tag} vectors, expected {}", V::TAG)));
    }
    let dimension: usize = lines.parse("dimension")?;
    let config_text = lines.field("config")?;
    let mut cfg = ConfigFields::new(&lines, config_text)?;

    let model = match kind {
        "logistic" => {
            let config = LogisticConfig {
                reg_lambda: cfg.get(&lines, "reg_lambda")?,
                learning_rate: cfg.get(&lines, "learning_rate")?,
                iterations: cfg.get(&lines, "iterations")?,
            };
            cfg.done(&lines)?;
            let bias = lines.parse("bias")?;
            let gradient_norm = lines.parse("gradient_norm")?;
            let loss = lines.parse("loss")?;
            let weights = floats(&mut lines, "weights", dimension)?;
            ClassifierModel::Logistic {
                config,
                model: LogisticModel { weights, bias, gradient_norm, loss },
            }
        }
        "knn" => {
            let k = cfg.get(&lines, "k")?;
            cfg.done(&lines)?;
            let n = count(&mut lines, "rows")?;
            let mut rows = Vec::with_capacity(n);
            let mut labels = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines.next_line()?;
                let (label, vector) = line.split_once(' ').ok_or_else(|| lines.error("expected `label vector`"))?;
                labels.push(parse_label(&lines, label)?);
                rows.push(V::decode(dimension, vector).map_err(|m| lines.error(m))?);
            }
            ClassifierModel::Knn(KnnModel::from_parts(dimension, rows, labels, k)?)
        }
        "naive-bayes" => {
            let alpha = cfg.get(&lines, "alpha")?;
            cfg.done(&lines)?;
            let priors = floats(&mut lines, "priors", 2)?;
            let pos = floats(&mut lines, "positive", dimension)?;
            let neg = floats(&mut lines, "negative", dimension)?;
            ClassifierModel::NaiveBayes {
                alpha,
                model: BernoulliNbModel::from_parts([priors[0], priors[1]], [pos, neg])?,
            }
        }
        "svm" => {
            let kernel = match cfg.raw(&lines, "kernel")? {
                "linear" => Kernel::Linear,
                "rbf" => match cfg.raw(&lines, "gamma")? {
                    "auto" => Kernel::Rbf { gamma: None },
                    g => Kernel::Rbf {
                        gamma: Some(parse_f64(g).map_err(|m| lines.error(m))?),
                    },
                },
                other => return Err(lines.error(format!("unknown kernel {other:?}"))),
            };
            let config = SvmConfig {
                kernel,
                c: cfg.get(&lines, "c")?,
                tol: cfg.get(&lines, "tol")?,
                max_passes: cfg.get(&lines, "max_passes")?,
                cache_rows: cfg.get(&lines, "cache_rows")?,
            };
            cfg.done(&lines)?;
            let bias = lines.parse("bias")?;
            let weights = match lines.field("weights")? {
                "none" => None,
                w => {
                    let w = parse_list(w).map_err(|m| lines.error(m))?;
                    Some(w)
                }
            };
            let n = count(&mut lines, "support")?;
            let mut svs = Vec::with_capacity(n);
            let mut coefs = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines.next_line()?;
                let (coef, vector) = line
                    .split_once(' ')
                    .ok_or_else(|| lines.error("expected `coefficient vector`"))?;
                coefs.push(parse_f64(coef).map_err(|m| lines.error(m))?);
                svs.push(V::decode(dimension, vector).map_err(|m| lines.error(m))?);
            }
            let model = SvmModel::from_parts(kernel, config.c, dimension, bias, weights, svs, coefs)?;
            ClassifierModel::Svm { config, model }
        }
        "tree" => {
            let max_depth = match cfg.raw(&lines, "max_depth")? {
                "none" => None,
                d => Some(d.parse().map_err(|_| lines.error(format!("bad max_depth {d:?}")))?),
            };
            let config = TreeConfig {
                max_depth,
                min_leaf: cfg.get(&lines, "min_leaf")?,
            };
            cfg.done(&lines)?;
            let n = count(&mut lines, "nodes")?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                let line = lines.next_line()?;
                let parts: Vec<&str> = line.split(' ').collect();
                let node = match parts.as_slice() {
                    ["leaf", label] => TreeNode::Leaf {
                        label: parse_label(&lines, label)?,
                    },
                    ["test", f, t, l, r] => {
                        let bad = || lines.error(format!("malformed node {line:?}"));
                        TreeNode::Test {
                            feature: f.parse().map_err(|_| bad())?,
                            threshold: parse_f64(t).map_err(|_| bad())?,
                            left: l.parse().map_err(|_| bad())?,
                            right: r.parse().map_err(|_| bad())?,
                        }
                    }
                    _ => return Err(lines.error(format!("malformed node {line:?}"))),
                };
                nodes.push(node);
            }
            ClassifierModel::Tree {
                config,
                model: DecisionTreeModel::from_parts(dimension, nodes)?,
            }
        }
        other => return Err(lines.error(format!("unknown model kind {other:?}"))),
    };
    lines.finish()?;
    Ok(model)
}
