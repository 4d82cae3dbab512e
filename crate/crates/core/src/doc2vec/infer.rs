use alloc::vec::Vec;

use rand::{Rng, SeedableRng};

use super::train::{Block, ParamStore, Scratch, TrainingPlan};
use super::EmbeddingModel;
use crate::features::DenseVector;
use crate::preprocess::TokenizedDocument;
use crate::{Result, SeededRng};

/// Vector inferred for an unseen document.
#[derive(Debug, Clone, PartialEq)]
pub struct Inferred {
    pub vector: DenseVector,
    /// Set when none of the document's tokens are in the model vocabulary;
    /// the vector is then all zeros.
    pub no_known_tokens: bool,
}

/// Reads word and output rows from a trained model and lets only the new
/// document row move.
struct FrozenModel<'a> {
    model: &'a EmbeddingModel,
    doc: Vec<f64>,
}

impl ParamStore for FrozenModel<'_> {
    fn read_row(&self, block: Block, row: usize, out: &mut [f64]) {
        let d = self.model.vector_size();
        match block {
            Block::Doc => out.copy_from_slice(&self.doc),
            Block::Word => out.copy_from_slice(&self.model.word_vectors()[row * d..(row + 1) * d]),
            Block::Output => {
                out.copy_from_slice(&self.model.output_weights()[row * d..(row + 1) * d])
            }
        }
    }

    fn add_to_row(&mut self, block: Block, _row: usize, scale: f64, delta: &[f64]) {
        if block == Block::Doc {
            crate::math::axpy(scale, delta, &mut self.doc);
        }
    }
}

/// Fits a vector for `doc` against the frozen model.
///
/// The vector starts uniform in `±0.5 / vector_size` (drawn from `seed`) and
/// takes `steps` training passes over the document with the learning rate
/// decaying linearly across the passes. The model is not modified.
pub fn infer_vector(
    doc: &TokenizedDocument,
    model: &EmbeddingModel,
    steps: usize,
    seed: u64,
) -> Result<Inferred> {
    let dim = model.vector_size();
    let words = model.vocabulary().encode(doc);
    if words.is_empty() {
        return Ok(Inferred {
            vector: DenseVector::zeros(dim),
            no_known_tokens: true,
        });
    }
    let mut rng = SeededRng::seed_from_u64(seed);
    let bound = 0.5 / dim as f64;
    let init = (0..dim).map(|_| rng.gen_range(-bound..=bound)).collect();
    let mut store = FrozenModel { model, doc: init };
    let plan = TrainingPlan::for_model(model)?;
    let mut scratch = Scratch::new(dim);
    for step in 0..steps {
        let lr = plan.learning_rate(step as f64 / steps as f64);
        plan.train_tokens(&mut store, 0, &words, lr, &mut rng, &mut scratch);
    }
    Ok(Inferred {
        vector: DenseVector::new(store.doc),
        no_known_tokens: false,
    })
}
