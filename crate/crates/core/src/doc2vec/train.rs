use alloc::vec::Vec;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::loss::accumulate;
use super::{build_vocabulary, keep_probability, Doc2VecConfig, EmbeddingModel, WordVocabulary};
use crate::preprocess::TokenizedDocument;
use crate::{Error, Result, SeededRng};

/// The three weight matrices of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Word,
    Doc,
    Output,
}

/// Row-level access to model weights.
///
/// Training code only reads whole rows and adds scaled deltas to them, so a
/// store may be a plain set of matrices, a frozen view that only lets one
/// document row move, or a shared store updated by several threads.
pub trait ParamStore {
    fn read_row(&self, block: Block, row: usize, out: &mut [f64]);
    /// `row += scale * delta`
    fn add_to_row(&mut self, block: Block, row: usize, scale: f64, delta: &[f64]);
}

/// Owned row-major weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrices {
    pub dim: usize,
    pub word: Vec<f64>,
    pub doc: Vec<f64>,
    pub output: Vec<f64>,
}

impl Matrices {
    fn block(&self, block: Block) -> &[f64] {
        match block {
            Block::Word => &self.word,
            Block::Doc => &self.doc,
            Block::Output => &self.output,
        }
    }
}

impl ParamStore for Matrices {
    fn read_row(&self, block: Block, row: usize, out: &mut [f64]) {
        let d = self.dim;
        out.copy_from_slice(&self.block(block)[row * d..(row + 1) * d]);
    }

    fn add_to_row(&mut self, block: Block, row: usize, scale: f64, delta: &[f64]) {
        let d = self.dim;
        let m = match block {
            Block::Word => &mut self.word,
            Block::Doc => &mut self.doc,
            Block::Output => &mut self.output,
        };
        crate::math::axpy(scale, delta, &mut m[row * d..(row + 1) * d]);
    }
}

/// Reusable buffers for [`TrainingPlan::train_tokens`].
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    hidden: Vec<f64>,
    grad_hidden: Vec<f64>,
    row: Vec<f64>,
    rows: Vec<f64>,
    coeffs: Vec<f64>,
    words: Vec<usize>,
    sources: Vec<(Block, usize)>,
    surviving: Vec<usize>,
}

impl Scratch {
    pub fn new(dim: usize) -> Self {
        Scratch {
            hidden: alloc::vec![0.0; dim],
            grad_hidden: alloc::vec![0.0; dim],
            row: alloc::vec![0.0; dim],
            ..Scratch::default()
        }
    }
}

/// Summed loss over the predictions made for one or more documents.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DocumentStats {
    pub loss: f64,
    pub examples: usize,
}

impl core::ops::AddAssign for DocumentStats {
    fn add_assign(&mut self, rhs: Self) {
        self.loss += rhs.loss;
        self.examples += rhs.examples;
    }
}

impl DocumentStats {
    pub fn mean_loss(&self) -> f64 {
        if self.examples == 0 {
            0.0
        } else {
            self.loss / self.examples as f64
        }
    }
}

/// Everything derived from the training documents and configuration that
/// stays fixed while weights are being updated.
#[derive(Debug, Clone)]
pub struct TrainingPlan {
    config: Doc2VecConfig,
    vocab: WordVocabulary,
    noise_probs: Vec<f64>,
    keep: Vec<f64>,
    noise: Option<WeightedIndex<f64>>,
    encoded: Vec<Vec<usize>>,
}

impl TrainingPlan {
    pub fn new(docs: &[TokenizedDocument], config: &Doc2VecConfig) -> Result<Self> {
        config.validate()?;
        let (vocab, noise_probs) = build_vocabulary(docs, config)?;
        let encoded = docs.iter().map(|d| vocab.encode(d)).collect();
        Self::with_vocabulary(*config, vocab, noise_probs, encoded)
    }

    pub(crate) fn for_model(model: &EmbeddingModel) -> Result<Self> {
        Self::with_vocabulary(
            *model.config(),
            model.vocabulary().clone(),
            model.noise_distribution().to_vec(),
            Vec::new(),
        )
    }

    fn with_vocabulary(
        config: Doc2VecConfig,
        vocab: WordVocabulary,
        noise_probs: Vec<f64>,
        encoded: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let keep = vocab
            .iter()
            .map(|(_, c)| keep_probability(c, vocab.total_count(), config.sample))
            .collect();
        let noise = if config.negative > 0 {
            Some(WeightedIndex::new(&noise_probs).map_err(|e| {
                Error::InvalidArgument(alloc::format!("noise distribution: {e}"))
            })?)
        } else {
            None
        };
        Ok(TrainingPlan {
            config,
            vocab,
            noise_probs,
            keep,
            noise,
            encoded,
        })
    }

    pub fn config(&self) -> &Doc2VecConfig {
        &self.config
    }

    pub fn n_docs(&self) -> usize {
        self.encoded.len()
    }

    pub fn vocabulary(&self) -> &WordVocabulary {
        &self.vocab
    }

    /// Initial weights: word and document rows uniform in
    /// `±0.5 / vector_size`, output rows zero.
    pub fn initial_matrices<R: Rng>(&self, rng: &mut R) -> Matrices {
        let dim = self.config.vector_size;
        let bound = 0.5 / dim as f64;
        let mut uniform = |n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
        };
        let word = uniform(self.vocab.len() * dim);
        let doc = uniform(self.n_docs() * dim);
        Matrices {
            dim,
            word,
            doc,
            output: alloc::vec![0.0; self.vocab.len() * dim],
        }
    }

    /// Linearly decayed step size at `progress` in `[0, 1]`.
    pub fn learning_rate(&self, progress: f64) -> f64 {
        let (start, end) = (self.config.learning_rate, self.config.min_learning_rate);
        start - (start - end) * progress.clamp(0.0, 1.0)
    }

    /// One pass over training document `doc`.
    pub fn train_document<P: ParamStore, R: Rng>(
        &self,
        store: &mut P,
        doc: usize,
        lr: f64,
        rng: &mut R,
        scratch: &mut Scratch,
    ) -> DocumentStats {
        self.train_tokens(store, doc, &self.encoded[doc], lr, rng, scratch)
    }

    /// One pass over the vocabulary indices `words`, whose document vector is
    /// row `doc_row` of the store's document block.
    pub fn train_tokens<P: ParamStore, R: Rng>(
        &self,
        store: &mut P,
        doc_row: usize,
        words: &[usize],
        lr: f64,
        rng: &mut R,
        scratch: &mut Scratch,
    ) -> DocumentStats {
        let mut surviving = core::mem::take(&mut scratch.surviving);
        surviving.clear();
        if self.config.sample > 0.0 {
            surviving.extend(
                words
                    .iter()
                    .copied()
                    .filter(|&w| self.keep[w] >= 1.0 || rng.gen::<f64>() < self.keep[w]),
            );
        } else {
            surviving.extend_from_slice(words);
        }

        let mut stats = DocumentStats::default();
        for pos in 0..surviving.len() {
            scratch.sources.clear();
            scratch.sources.push((Block::Doc, doc_row));
            if self.config.dm {
                let reach = if self.config.dynamic_window {
                    rng.gen_range(1..=self.config.window)
                } else {
                    self.config.window
                };
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(surviving.len() - 1);
                for (j, &w) in surviving.iter().enumerate().take(hi + 1).skip(lo) {
                    if j != pos {
                        scratch.sources.push((Block::Word, w));
                    }
                }
            }
            stats.loss += self.predict_step(store, surviving[pos], lr, rng, scratch);
            stats.examples += 1;
        }
        scratch.surviving = surviving;
        stats
    }

    /// Predicts `target` from the mean of the scratch source rows and applies
    /// one SGD step to every row involved. Returns the example's loss.
    fn predict_step<P: ParamStore, R: Rng>(
        &self,
        store: &mut P,
        target: usize,
        lr: f64,
        rng: &mut R,
        s: &mut Scratch,
    ) -> f64 {
        let dim = self.config.vector_size;
        s.hidden.iter_mut().for_each(|x| *x = 0.0);
        for &(block, row) in &s.sources {
            store.read_row(block, row, &mut s.row);
            crate::math::axpy(1.0, &s.row, &mut s.hidden);
        }
        let n_sources = s.sources.len() as f64;
        s.hidden.iter_mut().for_each(|x| *x /= n_sources);

        s.words.clear();
        s.words.push(target);
        if let Some(noise) = &self.noise {
            for _ in 0..self.config.negative {
                let w = noise.sample(rng);
                if w != target {
                    s.words.push(w);
                }
            }
        }
        s.rows.resize(s.words.len() * dim, 0.0);
        for (k, &w) in s.words.iter().enumerate() {
            store.read_row(Block::Output, w, &mut s.rows[k * dim..(k + 1) * dim]);
        }
        s.coeffs.resize(s.words.len(), 0.0);
        s.grad_hidden.iter_mut().for_each(|x| *x = 0.0);
        let loss = accumulate(&s.hidden, &s.rows, &mut s.coeffs, &mut s.grad_hidden);

        for (&w, &g) in s.words.iter().zip(&s.coeffs) {
            store.add_to_row(Block::Output, w, -lr * g, &s.hidden);
        }
        // h is a mean, so each source receives 1/n of dL/dh
        let scale = -lr / n_sources;
        for &(block, row) in &s.sources {
            store.add_to_row(block, row, scale, &s.grad_hidden);
        }
        loss
    }

    pub fn into_model(self, matrices: Matrices, epoch_losses: Vec<f64>) -> Result<EmbeddingModel> {
        EmbeddingModel::from_parts(
            self.config,
            self.vocab,
            self.noise_probs,
            matrices.word,
            matrices.doc,
            matrices.output,
            epoch_losses,
        )
    }
}

/// Trains paragraph vectors on `docs` in a single thread.
///
/// Documents are visited in a fresh random order every epoch; the learning
/// rate decays linearly over the whole run. The result depends only on the
/// documents and the configuration (including its seed). `workers` is not
/// consulted here.
pub fn train(docs: &[TokenizedDocument], config: &Doc2VecConfig) -> Result<EmbeddingModel> {
    let plan = TrainingPlan::new(docs, config)?;
    let mut rng = SeededRng::seed_from_u64(config.seed);
    let mut matrices = plan.initial_matrices(&mut rng);
    let mut scratch = Scratch::new(config.vector_size);
    let n = plan.n_docs();
    let total = (config.epochs * n) as f64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut stats = DocumentStats::default();
        for (k, &doc) in order.iter().enumerate() {
            let lr = plan.learning_rate((epoch * n + k) as f64 / total);
            stats += plan.train_document(&mut matrices, doc, lr, &mut rng, &mut scratch);
        }
        let mean = stats.mean_loss();
        if !mean.is_finite() {
            return Err(Error::Diverged {
                stage: alloc::format!("epoch {}", epoch + 1),
            });
        }
        epoch_losses.push(mean);
    }
    plan.into_model(matrices, epoch_losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Polarity;
    use crate::doc2vec::negative_sampling_loss_and_grads;
    use alloc::string::ToString;
    use alloc::vec;

    fn doc(id: usize, words: &str) -> TokenizedDocument {
        TokenizedDocument {
            id,
            tokens: words.split_whitespace().map(|w| w.to_string()).collect(),
            label: Polarity::Positive,
        }
    }

    fn tiny_corpus() -> Vec<TokenizedDocument> {
        let a = ["good", "great", "fine", "superb", "lovely", "fun"];
        let b = ["bad", "awful", "poor", "dull", "boring", "weak"];
        (0..8)
            .map(|i| {
                let words = if i % 2 == 0 { &a } else { &b };
                let text: Vec<&str> = (0..24).map(|j| words[(i * 7 + j * 5) % 6]).collect();
                doc(i, &text.join(" "))
            })
            .collect()
    }

    fn small_config(dm: bool) -> Doc2VecConfig {
        Doc2VecConfig {
            vector_size: 16,
            window: 3,
            sample: 0.0,
            epochs: 50,
            dm,
            seed: 5,
            ..Doc2VecConfig::default()
        }
    }

    #[test]
    fn output_shapes() {
        let cfg = Doc2VecConfig {
            vector_size: 100,
            epochs: 2,
            sample: 0.0,
            ..Doc2VecConfig::default()
        };
        let m = train(&tiny_corpus(), &cfg).unwrap();
        assert_eq!(m.n_docs(), 8);
        assert_eq!(m.doc_vectors().len(), 8 * 100);
        assert_eq!(m.word_vectors().len(), 12 * 100);
    }

    #[test]
    fn first_epoch_starts_at_ln2_per_word() {
        // zero output weights: the very first example costs (1 + negatives) ln 2
        let plan = TrainingPlan::new(&tiny_corpus(), &small_config(false)).unwrap();
        let mut rng = SeededRng::seed_from_u64(1);
        let mut m = plan.initial_matrices(&mut rng);
        let mut scratch = Scratch::new(16);
        let stats = plan.train_tokens(&mut m, 0, &[0], 0.0, &mut rng, &mut scratch);
        assert_eq!(stats.examples, 1);
        let words = scratch.words.len() as f64;
        assert!((stats.loss - words * core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn loss_decreases_early() {
        for dm in [false, true] {
            let m = train(&tiny_corpus(), &small_config(dm)).unwrap();
            let l = m.epoch_losses();
            assert_eq!(l.len(), 50);
            assert!(l[4] < l[0], "dm={dm}: {l:?}");
            assert!(l[49] < 0.75 * l[0], "dm={dm}: {l:?}");
        }
    }

    #[test]
    fn deterministic_with_seed() {
        for dm in [false, true] {
            let a = train(&tiny_corpus(), &small_config(dm)).unwrap();
            let b = train(&tiny_corpus(), &small_config(dm)).unwrap();
            assert_eq!(a, b);
            let c = train(&tiny_corpus(), &Doc2VecConfig { seed: 6, ..small_config(dm) }).unwrap();
            assert_ne!(a.doc_vectors(), c.doc_vectors());
        }
    }

    #[test]
    fn dbow_ignores_window() {
        let a = train(&tiny_corpus(), &Doc2VecConfig { window: 1, ..small_config(false) }).unwrap();
        let b = train(&tiny_corpus(), &Doc2VecConfig { window: 9, ..small_config(false) }).unwrap();
        assert_eq!(a.doc_vectors(), b.doc_vectors());
        assert_eq!(a.output_weights(), b.output_weights());
    }

    #[test]
    fn dbow_batch_loss_ignores_order() {
        // at fixed weights, the summed loss and gradient over a document's
        // predictions depend only on its token multiset
        let m = train(&tiny_corpus(), &Doc2VecConfig { epochs: 3, negative: 0, ..small_config(false) }).unwrap();
        let words = m.vocabulary().encode(&doc(0, "good bad fun good dull"));
        let mut reversed = words.clone();
        reversed.reverse();
        let h = m.doc_vector(3);
        let total = |ws: &[usize]| {
            let mut loss = 0.0;
            let mut grad = vec![0.0; 16];
            for &w in ws {
                let g = negative_sampling_loss_and_grads(h, w, &[], m.output_weights());
                loss += g.loss;
                crate::math::axpy(1.0, &g.input, &mut grad);
            }
            (loss, grad)
        };
        let (l1, g1) = total(&words);
        let (l2, g2) = total(&reversed);
        assert!((l1 - l2).abs() < 1e-12);
        assert!(g1.iter().zip(&g2).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn step_matches_analytic_gradient() {
        // with lr small the document row moves by -lr * dL/dh
        let cfg = Doc2VecConfig { negative: 0, ..small_config(false) };
        let plan = TrainingPlan::new(&tiny_corpus(), &cfg).unwrap();
        let mut rng = SeededRng::seed_from_u64(3);
        let mut m = plan.initial_matrices(&mut rng);
        m.output.iter_mut().enumerate().for_each(|(i, x)| *x = ((i % 7) as f64 - 3.0) * 0.1);
        let before = m.clone();
        let lr = 0.01;
        let mut scratch = Scratch::new(16);
        plan.train_tokens(&mut m, 2, &[4], lr, &mut rng, &mut scratch);
        let h = &before.doc[2 * 16..3 * 16];
        let g = negative_sampling_loss_and_grads(h, 4, &[], &before.output);
        for k in 0..16 {
            let expected = h[k] - lr * g.input[k];
            assert!((m.doc[2 * 16 + k] - expected).abs() < 1e-15);
        }
        let (row, du) = &g.outputs[0];
        for k in 0..16 {
            let expected = before.output[row * 16 + k] - lr * du[k];
            assert!((m.output[row * 16 + k] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = Doc2VecConfig { vector_size: 0, ..Doc2VecConfig::default() };
        assert!(train(&tiny_corpus(), &cfg).is_err());
        let empty: Vec<TokenizedDocument> = vec![doc(0, "")];
        assert_eq!(train(&empty, &Doc2VecConfig::default()).unwrap_err(), Error::EmptyVocabulary);
    }
}
