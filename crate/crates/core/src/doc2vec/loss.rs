use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math::{self, sigmoid, softplus};

/// Loss of one prediction and its gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSamplingGrads {
    pub loss: f64,
    /// dL/dh for the input vector.
    pub input: Vec<f64>,
    /// dL/du for every output row that appears in the loss, by row index.
    pub outputs: Vec<(usize, Vec<f64>)>,
}

fn output_row(output_weights: &[f64], dim: usize, row: usize) -> &[f64] {
    &output_weights[row * dim..(row + 1) * dim]
}

/// `-ln σ(u_target·h) - Σ ln σ(-u_noise·h)`.
pub fn negative_sampling_loss(
    input: &[f64],
    target: usize,
    noise: &[usize],
    output_weights: &[f64],
) -> f64 {
    let dim = input.len();
    let mut loss = softplus(-math::dot(output_row(output_weights, dim, target), input));
    for &w in noise {
        loss += softplus(math::dot(output_row(output_weights, dim, w), input));
    }
    loss
}

/// Scores `input` against `rows` (row 0 observed, the rest noise), writes
/// dL/ds for each row into `coeffs` and accumulates dL/dh into `grad_input`.
/// Returns the loss. The gradient for row `k` is `coeffs[k] * input`.
pub(crate) fn accumulate(
    input: &[f64],
    rows: &[f64],
    coeffs: &mut [f64],
    grad_input: &mut [f64],
) -> f64 {
    let dim = input.len();
    let mut loss = 0.0;
    for (k, coeff) in coeffs.iter_mut().enumerate() {
        let u = &rows[k * dim..(k + 1) * dim];
        let score = math::dot(u, input);
        // d/ds of softplus(-s) is σ(s) - 1, of softplus(s) is σ(s)
        *coeff = if k == 0 {
            loss += softplus(-score);
            sigmoid(score) - 1.0
        } else {
            loss += softplus(score);
            sigmoid(score)
        };
        math::axpy(*coeff, u, grad_input);
    }
    loss
}

/// Loss and exact gradients of the negative-sampling objective for the
/// input vector `input` (h), observed word `target` and `noise` words, with
/// `output_weights` stored row-major with `input.len()` columns.
pub fn negative_sampling_loss_and_grads(
    input: &[f64],
    target: usize,
    noise: &[usize],
    output_weights: &[f64],
) -> NegativeSamplingGrads {
    let dim = input.len();
    let words: Vec<usize> = core::iter::once(target).chain(noise.iter().copied()).collect();
    let mut rows = Vec::with_capacity(words.len() * dim);
    for &w in &words {
        rows.extend_from_slice(output_row(output_weights, dim, w));
    }
    let mut coeffs = alloc::vec![0.0; words.len()];
    let mut grad_input = alloc::vec![0.0; dim];
    let loss = accumulate(input, &rows, &mut coeffs, &mut grad_input);

    let mut outputs: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (&w, &g) in words.iter().zip(&coeffs) {
        let row = outputs.entry(w).or_insert_with(|| alloc::vec![0.0; dim]);
        math::axpy(g, input, row);
    }
    NegativeSamplingGrads {
        loss,
        input: grad_input,
        outputs: outputs.into_iter().collect(),
    }
}
