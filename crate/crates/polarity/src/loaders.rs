//! Readers for the three on-disk corpus layouts.
//!
//! Blank lines, blank files and bytes that are not valid UTF-8 never abort a
//! load; they are skipped and tallied in a [`LoadReport`].

use std::fs;
use std::path::{Path, PathBuf};

use polarity_core::corpus::{Corpus, Polarity};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: no {class} documents")]
    EmptyClass { path: PathBuf, class: &'static str },
    #[error("{0}")]
    Corpus(#[from] polarity_core::Error),
}

/// Items skipped while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub blank: usize,
    pub undecodable: usize,
    pub warnings: Vec<String>,
}

impl LoadReport {
    pub fn skipped(&self) -> usize {
        self.blank + self.undecodable
    }

    fn undecodable(&mut self, what: String) {
        log::warn!("skipping {what}: not valid UTF-8");
        self.undecodable += 1;
        self.warnings.push(format!("{what}: not valid UTF-8"));
    }
}

/// A loaded corpus and what was skipped on the way.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: Corpus,
    pub report: LoadReport,
}

fn read(path: &Path) -> Result<Vec<u8>, LoadError> {
    fs::read(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })
}

fn lines(bytes: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    let bytes = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    bytes
        .split(|&b| b == b'\n')
        .map(|l| l.strip_suffix(b"\r").unwrap_or(l))
        .enumerate()
        .map(|(i, l)| (i + 1, l))
}

fn corpus_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_tab_file(
    path: &Path,
    docs: &mut Vec<(String, Polarity)>,
    report: &mut LoadReport,
) -> Result<(), LoadError> {
    let bytes = read(path)?;
    for (line_no, raw) in lines(&bytes) {
        let Ok(line) = std::str::from_utf8(raw) else {
            report.undecodable(format!("{}:{line_no}", path.display()));
            continue;
        };
        if line.trim().is_empty() {
            report.blank += 1;
            continue;
        }
        let parse_error = |message: String| LoadError::Parse {
            path: path.to_owned(),
            line: line_no,
            message,
        };
        let (text, label) = line
            .rsplit_once('\t')
            .ok_or_else(|| parse_error("expected `text<TAB>label`".into()))?;
        let label = match label.trim() {
            "1" => Polarity::Positive,
            "0" => Polarity::Negative,
            other => return Err(parse_error(format!("label must be 0 or 1, found {other:?}"))),
        };
        if text.trim().is_empty() {
            report.blank += 1;
            continue;
        }
        docs.push((text.to_owned(), label));
    }
    Ok(())
}

/// One `sentence<TAB>label` pair per line, label `1` (positive) or `0`
/// (negative). The text is everything before the last tab.
pub fn load_tab_labeled(path: &Path) -> Result<Loaded, LoadError> {
    load_tab_labeled_files(&corpus_name(path), &[path])
}

/// Concatenates several tab-labeled files, in the order given.
pub fn load_tab_labeled_files<P: AsRef<Path>>(name: &str, paths: &[P]) -> Result<Loaded, LoadError> {
    let mut docs = Vec::new();
    let mut report = LoadReport::default();
    for p in paths {
        parse_tab_file(p.as_ref(), &mut docs, &mut report)?;
    }
    Ok(Loaded {
        corpus: Corpus::from_labeled(name, docs)?,
        report,
    })
}

fn read_directory(
    dir: &Path,
    label: Polarity,
    docs: &mut Vec<(String, Polarity)>,
    report: &mut LoadReport,
) -> Result<(), LoadError> {
    let io_error = |source| LoadError::Io {
        path: dir.to_owned(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_error)? {
        let entry = entry.map_err(io_error)?;
        if entry.file_type().map_err(io_error)?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    let before = docs.len();
    for file in &files {
        match String::from_utf8(read(file)?) {
            Ok(text) if text.trim().is_empty() => report.blank += 1,
            Ok(text) => docs.push((text, label)),
            Err(_) => report.undecodable(file.display().to_string()),
        }
    }
    if docs.len() == before {
        return Err(LoadError::EmptyClass {
            path: dir.to_owned(),
            class: label.name(),
        });
    }
    Ok(())
}

/// One review per file under a positive and a negative directory. Files are
/// read in sorted filename order, positives first.
pub fn load_directory_pair(pos_dir: &Path, neg_dir: &Path) -> Result<Loaded, LoadError> {
    let mut docs = Vec::new();
    let mut report = LoadReport::default();
    read_directory(pos_dir, Polarity::Positive, &mut docs, &mut report)?;
    read_directory(neg_dir, Polarity::Negative, &mut docs, &mut report)?;
    let name = pos_dir
        .parent()
        .map(corpus_name)
        .unwrap_or_else(|| corpus_name(pos_dir));
    Ok(Loaded {
        corpus: Corpus::from_labeled(name, docs)?,
        report,
    })
}

fn read_line_file(
    path: &Path,
    label: Polarity,
    docs: &mut Vec<(String, Polarity)>,
    report: &mut LoadReport,
) -> Result<(), LoadError> {
    let bytes = read(path)?;
    for (line_no, raw) in lines(&bytes) {
        match std::str::from_utf8(raw) {
            Ok(line) if line.trim().is_empty() => report.blank += 1,
            Ok(line) => docs.push((line.to_owned(), label)),
            Err(_) => report.undecodable(format!("{}:{line_no}", path.display())),
        }
    }
    Ok(())
}

/// One sentence per line, one file per polarity.
pub fn load_line_pair(pos_file: &Path, neg_file: &Path) -> Result<Loaded, LoadError> {
    let mut docs = Vec::new();
    let mut report = LoadReport::default();
    read_line_file(pos_file, Polarity::Positive, &mut docs, &mut report)?;
    read_line_file(neg_file, Polarity::Negative, &mut docs, &mut report)?;
    Ok(Loaded {
        corpus: Corpus::from_labeled(corpus_name(pos_file), docs)?,
        report,
    })
}
