//! Text format for a fitted TF-IDF vocabulary.
//!
//! ```text
//! polarity-vocabulary 1
//! n_docs 1800
//! terms 2
//! min_df 5
//! max_df 0.8
//! sublinear_tf true
//! use_idf true
//! l2_normalize true
//! bad	0	112
//! good	1	140
//! ```
//!
//! Each entry is `term<TAB>index<TAB>doc_freq`, in column order.

use std::io::Write;

use polarity_core::tfidf::{TfidfConfig, Vocabulary};

use super::{check_magic, FormatError, Lines};

const MAGIC: &str = "polarity-vocabulary";
const VERSION: u32 = 1;

pub fn write_vocabulary<W: Write>(vocab: &Vocabulary, config: &TfidfConfig, mut out: W) -> Result<(), FormatError> {
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "n_docs {}", vocab.n_docs())?;
    writeln!(out, "terms {}", vocab.len())?;
    writeln!(out, "min_df {}", config.min_df)?;
    writeln!(out, "max_df {:?}", config.max_df)?;
    writeln!(out, "sublinear_tf {}", config.sublinear_tf)?;
    writeln!(out, "use_idf {}", config.use_idf)?;
    writeln!(out, "l2_normalize {}", config.l2_normalize)?;
    for (index, (term, df)) in vocab.iter().enumerate() {
        if term.contains(['\t', '\n', '\r']) {
            return Err(FormatError::Invalid(format!("term {term:?} contains a tab or newline")));
        }
        writeln!(out, "{term}\t{index}\t{df}")?;
    }
    Ok(())
}

pub fn read_vocabulary(text: &str) -> Result<(Vocabulary, TfidfConfig), FormatError> {
    let mut lines = Lines::new(text);
    check_magic(&mut lines, MAGIC, VERSION)?;
    let n_docs: usize = lines.parse("n_docs")?;
    let n_terms: usize = lines.parse("terms")?;
    let config = TfidfConfig {
        min_df: lines.parse("min_df")?,
        max_df: lines.parse("max_df")?,
        sublinear_tf: lines.parse("sublinear_tf")?,
        use_idf: lines.parse("use_idf")?,
        l2_normalize: lines.parse("l2_normalize")?,
    };
    config.validate()?;
    let mut entries = Vec::with_capacity(n_terms);
    for expected in 0..n_terms {
        let line = lines.next_line()?;
        let mut parts = line.split('\t');
        let (Some(term), Some(index), Some(df), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(lines.error("expected `term<TAB>index<TAB>doc_freq`"));
        };
        if index.parse::<usize>().ok() != Some(expected) {
            return Err(lines.error(format!("expected index {expected}, found {index:?}")));
        }
        let df = df.parse().map_err(|_| lines.error(format!("bad doc_freq {df:?}")))?;
        entries.push((term.to_owned(), df));
    }
    lines.finish()?;
    Ok((Vocabulary::from_parts(n_docs, entries)?, config))
}
