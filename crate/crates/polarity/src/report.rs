//! Report output: CSV rows, a JSON document, the console accuracy table and
//! grouped plot data.
//!
//! CSV columns (schema version 1):
//! `version, dataset, vectorizer, classifier, status, accuracy,
//! fold_accuracies, seed, error`. Accuracies carry three decimals;
//! `fold_accuracies` joins the per-fold values with `;`. Wall-clock timings
//! live only in the JSON report so that reruns produce identical CSV bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::{CellOutcome, CellResult};

pub const CSV_VERSION: u32 = 1;
pub const CSV_COLUMNS: [&str; 9] = [
    "version",
    "dataset",
    "vectorizer",
    "classifier",
    "status",
    "accuracy",
    "fold_accuracies",
    "seed",
    "error",
];
pub const JSON_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

fn io_error(path: &str) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Complete JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub master_seed: u64,
    pub cells: Vec<CellOutcome>,
}

impl RunReport {
    pub fn new(master_seed: u64, cells: Vec<CellOutcome>) -> Self {
        RunReport {
            version: JSON_VERSION,
            master_seed,
            cells,
        }
    }
}

fn percent(x: f64) -> String {
    format!("{x:.3}")
}

pub fn write_csv<W: Write>(report: &RunReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for cell in &report.cells {
        let (status, accuracy, folds, error) = match &cell.result {
            CellResult::Ok { report: r } => (
                "ok",
                percent(r.accuracy),
                r.folds
                    .iter()
                    .map(|f| percent(f.accuracy))
                    .collect::<Vec<_>>()
                    .join(";"),
                String::new(),
            ),
            CellResult::Error { error } => ("error", String::new(), String::new(), error.message.clone()),
        };
        w.write_record([
            CSV_VERSION.to_string().as_str(),
            &cell.dataset,
            &cell.vectorizer,
            &cell.classifier,
            status,
            &accuracy,
            &folds,
            &report.master_seed.to_string(),
            &error,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(report: &RunReport, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n")
}

/// Accuracy grid with classifiers as rows and one column per
/// (dataset, vectorizer) pair, datasets grouped left to right.
pub fn accuracy_table(cells: &[CellOutcome]) -> String {
    let mut columns: Vec<(&str, &str)> = Vec::new();
    let mut rows: Vec<&str> = Vec::new();
    let mut values: BTreeMap<(&str, &str, &str), String> = BTreeMap::new();
    for c in cells {
        let col = (c.dataset.as_str(), c.vectorizer.as_str());
        if !columns.contains(&col) {
            columns.push(col);
        }
        if !rows.contains(&c.classifier.as_str()) {
            rows.push(&c.classifier);
        }
        let v = c.report().map(|r| percent(r.accuracy)).unwrap_or_else(|| "error".into());
        values.insert((&c.classifier, col.0, col.1), v);
    }
    // keep each dataset's columns together, in first-seen dataset order
    let mut dataset_order: Vec<&str> = Vec::new();
    for (d, _) in &columns {
        if !dataset_order.contains(d) {
            dataset_order.push(d);
        }
    }
    columns.sort_by_key(|(d, _)| dataset_order.iter().position(|x| x == d));

    let label_width = rows.iter().map(|r| r.len()).chain(["Classifiers".len()]).max().unwrap_or(0);
    let widths: Vec<usize> = columns
        .iter()
        .map(|(d, v)| {
            rows.iter()
                .filter_map(|r| values.get(&(*r, *d, *v)).map(String::len))
                .chain([d.len(), v.len(), 7])
                .max()
                .unwrap_or(7)
        })
        .collect();

    let mut s = String::new();
    let _ = write!(s, "{:<label_width$}", "Datasets");
    for ((d, _), w) in columns.iter().zip(&widths) {
        let _ = write!(s, "  {d:>w$}");
    }
    s.push('\n');
    let _ = write!(s, "{:<label_width$}", "Classifiers");
    for ((_, v), w) in columns.iter().zip(&widths) {
        let _ = write!(s, "  {v:>w$}");
    }
    s.push('\n');
    for r in &rows {
        let _ = write!(s, "{r:<label_width$}");
        for ((d, v), w) in columns.iter().zip(&widths) {
            let cell = values.get(&(*r, *d, *v)).map(String::as_str).unwrap_or("-");
            let _ = write!(s, "  {cell:>w$}");
        }
        s.push('\n');
    }
    s
}

/// One bar of an accuracy plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub dataset: String,
    pub classifier: String,
    pub vectorizer: String,
    pub accuracy: f64,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    version: u32,
    dataset: String,
    vectorizer: String,
    classifier: String,
    status: String,
    accuracy: String,
}

/// Successful cells of a CSV or JSON report, in file order.
pub fn read_report(path: &Path) -> Result<Vec<PlotRow>, ReportError> {
    let name = path.display().to_string();
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_error(&name))?;
    let format_error = |message: String| ReportError::Format {
        path: name.clone(),
        message,
    };
    let mut rows = Vec::new();
    if text.trim_start().starts_with('{') {
        let report: RunReport = serde_json::from_str(&text).map_err(|e| format_error(e.to_string()))?;
        for c in report.cells {
            if let CellResult::Ok { report: r } = c.result {
                rows.push(PlotRow {
                    dataset: c.dataset,
                    classifier: c.classifier,
                    vectorizer: c.vectorizer,
                    accuracy: r.accuracy,
                });
            }
        }
        return Ok(rows);
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for (i, record) in reader.deserialize::<CsvRow>().enumerate() {
        let r = record.map_err(|e| format_error(e.to_string()))?;
        if r.version != CSV_VERSION {
            return Err(format_error(format!("row {}: unsupported report version {}", i + 2, r.version)));
        }
        if r.status != "ok" {
            continue;
        }
        let accuracy = r
            .accuracy
            .parse()
            .map_err(|_| format_error(format!("row {}: bad accuracy {:?}", i + 2, r.accuracy)))?;
        rows.push(PlotRow {
            dataset: r.dataset,
            classifier: r.classifier,
            vectorizer: r.vectorizer,
            accuracy,
        });
    }
    Ok(rows)
}

/// Merges reports into one row per (dataset, classifier, vectorizer), sorted
/// by that key. Later reports replace earlier values for the same key.
/// Returns the rows and the keys that were overwritten.
pub fn merge_plot_rows(reports: Vec<Vec<PlotRow>>) -> (Vec<PlotRow>, Vec<(String, String, String)>) {
    let mut merged: BTreeMap<(String, String, String), f64> = BTreeMap::new();
    let mut replaced = Vec::new();
    for row in reports.into_iter().flatten() {
        let key = (row.dataset, row.classifier, row.vectorizer);
        if merged.insert(key.clone(), row.accuracy).is_some() {
            replaced.push(key);
        }
    }
    let rows = merged
        .into_iter()
        .map(|((dataset, classifier, vectorizer), accuracy)| PlotRow {
            dataset,
            classifier,
            vectorizer,
            accuracy,
        })
        .collect();
    (rows, replaced)
}

pub fn write_plot_csv<W: Write>(rows: &[PlotRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "classifier", "vectorizer", "accuracy"])?;
    for r in rows {
        w.write_record([&r.dataset, &r.classifier, &r.vectorizer, &percent(r.accuracy)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ClassifierEntry, LogisticSection, TfidfSection, VectorizerEntry};
    use crate::eval::{CellFailure, EvaluationReport, FailureKind, FoldResult, MatrixRecord, PhaseTimings, SplitRecord};

    fn ok(dataset: &str, vectorizer: &str, classifier: &str, accuracy: f64) -> CellOutcome {
        CellOutcome {
            dataset: dataset.into(),
            vectorizer: vectorizer.into(),
            classifier: classifier.into(),
            seed: 9,
            result: CellResult::Ok {
                report: EvaluationReport {
                    dataset: dataset.into(),
                    vectorizer: VectorizerEntry::Tfidf(TfidfSection::default()),
                    classifier: ClassifierEntry::Logistic(LogisticSection::default()),
                    split: SplitRecord::Kfold { k: 2, seed: 1 },
                    seed: 9,
                    folds: vec![
                        FoldResult {
                            matrix: MatrixRecord { tp: 1, fn_: 0, fp: 0, tn: 1 },
                            accuracy,
                        };
                        2
                    ],
                    accuracy,
                    timings: PhaseTimings::default(),
                    notes: vec![],
                },
            },
        }
    }

    fn failed(dataset: &str) -> CellOutcome {
        CellOutcome {
            dataset: dataset.into(),
            vectorizer: "tfidf".into(),
            classifier: "lr".into(),
            seed: 1,
            result: CellResult::Error {
                error: CellFailure {
                    kind: FailureKind::Data,
                    message: "missing, file".into(),
                },
            },
        }
    }

    #[test]
    fn csv_has_fixed_columns() {
        let report = RunReport::new(5, vec![ok("d1", "tfidf", "lr", 81.95), failed("d2")]);
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(lines[1], "1,d1,tfidf,lr,ok,81.950,81.950;81.950,5,");
        assert_eq!(lines[2], "1,d2,tfidf,lr,error,,,5,\"missing, file\"");
    }

    #[test]
    fn json_round_trips() {
        let report = RunReport::new(5, vec![ok("d1", "tfidf", "lr", 70.0), failed("d2")]);
        let mut buf = Vec::new();
        write_json(&report, &mut buf).unwrap();
        let back: RunReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn table_layout() {
        let cells = vec![
            ok("d1", "tfidf", "lr", 81.95),
            ok("d1", "doc2vec", "lr", 77.4),
            ok("d1", "tfidf", "knn", 64.0),
            ok("d1", "doc2vec", "knn", 60.0),
        ];
        let t = accuracy_table(&cells);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[1].contains("tfidf") && lines[1].contains("doc2vec"));
        assert!(lines[2].starts_with("lr") && lines[2].contains("81.950") && lines[2].contains("77.400"));
        assert!(lines[3].starts_with("knn"));
        let single = accuracy_table(&cells[..1]);
        assert_eq!(single.lines().count(), 3);
    }

    #[test]
    fn plot_rows_merge_last_wins() {
        let a = vec![
            PlotRow { dataset: "d".into(), classifier: "lr".into(), vectorizer: "tfidf".into(), accuracy: 1.0 },
            PlotRow { dataset: "d".into(), classifier: "dt".into(), vectorizer: "tfidf".into(), accuracy: 2.0 },
        ];
        let b = vec![PlotRow { dataset: "d".into(), classifier: "lr".into(), vectorizer: "tfidf".into(), accuracy: 3.0 }];
        let (rows, replaced) = merge_plot_rows(vec![a, b]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].accuracy, 3.0);
        assert_eq!(replaced.len(), 1);
        let (empty, _) = merge_plot_rows(vec![]);
        let mut buf = Vec::new();
        write_plot_csv(&empty, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "dataset,classifier,vectorizer,accuracy\n");
    }

    #[test]
    fn reads_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let report = RunReport::new(5, vec![ok("d1", "tfidf", "lr", 70.0), failed("d2")]);
        let (csv_path, json_path) = (dir.path().join("r.csv"), dir.path().join("r.json"));
        write_csv(&report, std::fs::File::create(&csv_path).unwrap()).unwrap();
        write_json(&report, std::fs::File::create(&json_path).unwrap()).unwrap();
        let from_csv = read_report(&csv_path).unwrap();
        let from_json = read_report(&json_path).unwrap();
        assert_eq!(from_csv, from_json);
        assert_eq!(from_csv.len(), 1);
        assert!(matches!(read_report(&dir.path().join("none.csv")), Err(ReportError::Io { .. })));
    }
}
