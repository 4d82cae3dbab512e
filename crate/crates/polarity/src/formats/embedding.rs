//! Little-endian binary format for a trained paragraph-vector model.
//!
//! Layout, after the 8-byte magic `PLRD2V\0\0` and a `u32` version:
//! the configuration, the vocabulary as (`u32` byte length, UTF-8 bytes,
//! `u64` count) records, the noise distribution, the document count, the
//! word, document and output matrices row-major, and the per-epoch losses.
//! Every real number is stored as its exact `f64` bit pattern.

use std::io::{Read, Write};

use polarity_core::doc2vec::{Doc2VecConfig, EmbeddingModel, WordVocabulary};

use super::FormatError;

const MAGIC: &[u8; 8] = b"PLRD2V\0\0";
const VERSION: u32 = 1;

struct Writer<W>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.0.write_all(&[v])
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn u64(&mut self, v: u64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn usize(&mut self, v: usize) -> std::io::Result<()> {
        self.u64(v as u64)
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.0.write_all(&v.to_le_bytes())
    }
    fn f64s(&mut self, vs: &[f64]) -> std::io::Result<()> {
        vs.iter().try_for_each(|&v| self.f64(v))
    }
}

struct Reader<R>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> std::io::Result<[u8; N]> {
        let mut b = [0; N];
        self.0.read_exact(&mut b)?;
        Ok(b)
    }
    fn u8(&mut self) -> std::io::Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn bool(&mut self) -> Result<bool, FormatError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(FormatError::Invalid(format!("bad flag byte {b}"))),
        }
    }
    fn u32(&mut self) -> std::io::Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> std::io::Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn usize(&mut self) -> Result<usize, FormatError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| FormatError::Invalid(format!("size {v} does not fit in memory")))
    }
    fn f64(&mut self) -> std::io::Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn f64s(&mut self, n: usize) -> std::io::Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn write_embedding<W: Write>(model: &EmbeddingModel, out: W) -> Result<(), FormatError> {
    let mut w = Writer(out);
    w.0.write_all(MAGIC)?;
    w.u32(VERSION)?;
    let c = model.config();
    w.u64(c.min_count)?;
    w.usize(c.window)?;
    w.usize(c.vector_size)?;
    w.f64(c.sample)?;
    w.usize(c.negative)?;
    w.usize(c.workers)?;
    w.u8(u8::from(c.dm))?;
    w.usize(c.epochs)?;
    w.f64(c.learning_rate)?;
    w.f64(c.min_learning_rate)?;
    w.f64(c.noise_exponent)?;
    w.u8(u8::from(c.dynamic_window))?;
    w.u64(c.seed)?;

    let vocab = model.vocabulary();
    w.usize(vocab.len())?;
    for (term, count) in vocab.iter() {
        let len = u32::try_from(term.len()).map_err(|_| FormatError::Invalid("term too long".into()))?;
        w.u32(len)?;
        w.0.write_all(term.as_bytes())?;
        w.u64(count)?;
    }
    w.f64s(model.noise_distribution())?;
    w.usize(model.n_docs())?;
    w.f64s(model.word_vectors())?;
    w.f64s(model.doc_vectors())?;
    w.f64s(model.output_weights())?;
    w.usize(model.epoch_losses().len())?;
    w.f64s(model.epoch_losses())?;
    w.0.flush()?;
    Ok(())
}

pub fn read_embedding<R: Read>(input: R) -> Result<EmbeddingModel, FormatError> {
    let mut r = Reader(input);
    if &r.bytes::<8>()? != MAGIC {
        return Err(FormatError::Invalid("not a paragraph-vector model file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(FormatError::Invalid(format!("unsupported model version {version}")));
    }
    let config = Doc2VecConfig {
        min_count: r.u64()?,
        window: r.usize()?,
        vector_size: r.usize()?,
        sample: r.f64()?,
        negative: r.usize()?,
        workers: r.usize()?,
        dm: r.bool()?,
        epochs: r.usize()?,
        learning_rate: r.f64()?,
        min_learning_rate: r.f64()?,
        noise_exponent: r.f64()?,
        dynamic_window: r.bool()?,
        seed: r.u64()?,
    };
    config.validate()?;
    let dim = config.vector_size;

    let n_words = r.usize()?;
    let mut entries = Vec::new();
    for _ in 0..n_words {
        let len = r.u32()? as usize;
        let mut bytes = vec![0; len];
        r.0.read_exact(&mut bytes)?;
        let term = String::from_utf8(bytes).map_err(|_| FormatError::Invalid("term is not UTF-8".into()))?;
        entries.push((term, r.u64()?));
    }
    let vocab = WordVocabulary::from_counts(entries)?;
    let noise = r.f64s(n_words)?;
    let n_docs = r.usize()?;
    let size = |rows: usize| {
        rows.checked_mul(dim)
            .ok_or_else(|| FormatError::Invalid("matrix size overflows".into()))
    };
    let words = r.f64s(size(n_words)?)?;
    let docs = r.f64s(size(n_docs)?)?;
    let output = r.f64s(size(n_words)?)?;
    let n_losses = r.usize()?;
    let losses = r.f64s(n_losses)?;
    let mut rest = [0u8; 1];
    if r.0.read(&mut rest)? != 0 {
        return Err(FormatError::Invalid("trailing bytes after model".into()));
    }
    Ok(EmbeddingModel::from_parts(config, vocab, noise, words, docs, output, losses)?)
}
