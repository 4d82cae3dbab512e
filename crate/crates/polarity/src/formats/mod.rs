//! Versioned on-disk formats for fitted vocabularies and trained models.

pub mod classifier;
pub mod embedding;
pub mod vocabulary;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] polarity_core::Error),
}

/// Line reader that remembers where it is, for error messages.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> FormatError {
        FormatError::Syntax {
            line: self.line,
            message: message.into(),
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str, FormatError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                Err(self.error("unexpected end of file"))
            }
        }
    }

    /// Reads a `key value` line with the expected key.
    pub(crate) fn field(&mut self, key: &str) -> Result<&'a str, FormatError> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.error(format!("expected `{key} <value>`"))),
        }
    }

    pub(crate) fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, FormatError> {
        let v = self.field(key)?;
        v.parse().map_err(|_| self.error(format!("bad value for {key}: {v:?}")))
    }

    pub(crate) fn finish(&mut self) -> Result<(), FormatError> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                self.line = i + 1;
                return Err(self.error("trailing content"));
            }
        }
        Ok(())
    }
}

/// `magic version` first line.
pub(crate) fn check_magic(lines: &mut Lines<'_>, magic: &str, version: u32) -> Result<(), FormatError> {
    let first = lines.next_line()?;
    let found = first
        .strip_prefix(magic)
        .and_then(|v| v.strip_prefix(' '))
        .ok_or_else(|| lines.error(format!("not a {magic} file")))?;
    match found.parse::<u32>() {
        Ok(v) if v == version => Ok(()),
        _ => Err(lines.error(format!("unsupported {magic} version {found:?}"))),
    }
}
