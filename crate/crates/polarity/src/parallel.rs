//! Multi-threaded paragraph-vector training.
//!
//! Each epoch the shuffled document order is cut into `workers` contiguous
//! chunks, one per thread. Threads update one shared set of weights without
//! locks: every element is an `AtomicU64` holding `f64` bits, read and written
//! with relaxed ordering, so concurrent read-modify-write sequences can lose
//! updates but never tear a value. Results depend on thread scheduling.

use std::sync::atomic::{AtomicU64, Ordering};

use polarity_core::doc2vec::{Block, Doc2VecConfig, DocumentStats, EmbeddingModel, Matrices, ParamStore, Scratch, TrainingPlan};
use polarity_core::preprocess::TokenizedDocument;
use polarity_core::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::seeds;

struct SharedMatrices {
    dim: usize,
    word: Vec<AtomicU64>,
    doc: Vec<AtomicU64>,
    output: Vec<AtomicU64>,
}

fn to_atomic(v: Vec<f64>) -> Vec<AtomicU64> {
    v.into_iter().map(|x| AtomicU64::new(x.to_bits())).collect()
}

fn from_atomic(v: Vec<AtomicU64>) -> Vec<f64> {
    v.into_iter().map(|x| f64::from_bits(x.into_inner())).collect()
}

impl SharedMatrices {
    fn new(m: Matrices) -> Self {
        SharedMatrices {
            dim: m.dim,
            word: to_atomic(m.word),
            doc: to_atomic(m.doc),
            output: to_atomic(m.output),
        }
    }

    fn into_matrices(self) -> Matrices {
        Matrices {
            dim: self.dim,
            word: from_atomic(self.word),
            doc: from_atomic(self.doc),
            output: from_atomic(self.output),
        }
    }

    fn row(&self, block: Block, row: usize) -> &[AtomicU64] {
        let m = match block {
            Block::Word => &self.word,
            Block::Doc => &self.doc,
            Block::Output => &self.output,
        };
        &m[row * self.dim..(row + 1) * self.dim]
    }
}

/// One thread's view of the shared weights.
struct Handle<'a>(&'a SharedMatrices);

impl ParamStore for Handle<'_> {
    fn read_row(&self, block: Block, row: usize, out: &mut [f64]) {
        for (o, a) in out.iter_mut().zip(self.0.row(block, row)) {
            *o = f64::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add_to_row(&mut self, block: Block, row: usize, scale: f64, delta: &[f64]) {
        for (a, d) in self.0.row(block, row).iter().zip(delta) {
            let old = f64::from_bits(a.load(Ordering::Relaxed));
            a.store((old + scale * d).to_bits(), Ordering::Relaxed);
        }
    }
}

/// Trains with `config.workers` threads. With one worker this is the
/// sequential reference trainer.
pub fn train_parallel(docs: &[TokenizedDocument], config: &Doc2VecConfig) -> Result<EmbeddingModel> {
    if config.workers <= 1 {
        return polarity_core::doc2vec::train(docs, config);
    }
    let plan = TrainingPlan::new(docs, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shared = SharedMatrices::new(plan.initial_matrices(&mut rng));
    let n = plan.n_docs();
    let total = (config.epochs * n) as f64;
    let chunk = n.div_ceil(config.workers).max(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let stats = std::thread::scope(|scope| {
            let threads: Vec<_> = order
                .chunks(chunk)
                .enumerate()
                .map(|(w, part)| {
                    let (plan, shared) = (&plan, &shared);
                    let seed = seeds::child(seeds::child(config.seed, epoch as u64), w as u64);
                    scope.spawn(move || {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let mut scratch = Scratch::new(config.vector_size);
                        let mut store = Handle(shared);
                        let mut stats = DocumentStats::default();
                        for (k, &doc) in part.iter().enumerate() {
                            let pos = epoch * n + w * chunk + k;
                            let lr = plan.learning_rate(pos as f64 / total);
                            stats += plan.train_document(&mut store, doc, lr, &mut rng, &mut scratch);
                        }
                        stats
                    })
                })
                .collect();
            let mut sum = DocumentStats::default();
            for t in threads {
                sum += t.join().expect("training thread panicked");
            }
            sum
        });
        let mean = stats.mean_loss();
        if !mean.is_finite() {
            return Err(Error::Diverged {
                stage: format!("epoch {}", epoch + 1),
            });
        }
        epoch_losses.push(mean);
    }
    plan.into_model(shared.into_matrices(), epoch_losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use polarity_core::corpus::Polarity;

    fn corpus() -> Vec<TokenizedDocument> {
        let pos = ["good", "great", "fine", "superb", "lovely", "fun"];
        let neg = ["bad", "awful", "poor", "dull", "boring", "weak"];
        (0..40)
            .map(|i| {
                let (words, label) = if i % 2 == 0 { (&pos, Polarity::Positive) } else { (&neg, Polarity::Negative) };
                let tokens = (0..12).map(|j| words[(i * 7 + j * 5) % 6].to_owned()).collect();
                TokenizedDocument { id: i, tokens, label }
            })
            .collect()
    }

    fn config(workers: usize, dm: bool) -> Doc2VecConfig {
        Doc2VecConfig {
            vector_size: 16,
            window: 3,
            sample: 0.0,
            epochs: 30,
            workers,
            dm,
            ..Doc2VecConfig::default()
        }
    }

    #[test]
    fn parallel_training_stays_finite_and_learns() {
        for dm in [false, true] {
            let model = train_parallel(&corpus(), &config(4, dm)).unwrap();
            assert_eq!(model.n_docs(), 40);
            assert!(model.doc_vectors().iter().all(|x| x.is_finite()));
            assert!(model.word_vectors().iter().all(|x| x.is_finite()));
            let losses = model.epoch_losses();
            assert_eq!(losses.len(), 30);
            assert!(losses.iter().all(|l| l.is_finite() && *l >= 0.0));
            assert!(losses[29] < losses[0], "dm={dm}: {losses:?}");
        }
    }

    #[test]
    fn one_worker_matches_sequential_trainer() {
        let docs = corpus();
        let cfg = config(1, false);
        let a = train_parallel(&docs, &cfg).unwrap();
        let b = polarity_core::doc2vec::train(&docs, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn more_workers_than_documents() {
        let docs = corpus()[..3].to_vec();
        let model = train_parallel(&docs, &Doc2VecConfig { workers: 8, ..config(8, true) }).unwrap();
        assert_eq!(model.n_docs(), 3);
        assert!(model.doc_vectors().iter().all(|x| x.is_finite()));
    }
}
