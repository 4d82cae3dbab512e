use alloc::vec::Vec;

use crate::corpus::Polarity;
use crate::features::{check_dimension, FeatureMatrix, FeatureVector};
use crate::math::{self, sigmoid, softplus};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticConfig {
    /// L2 penalty on the weights (the bias is not penalized).
    pub reg_lambda: f64,
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            reg_lambda: 1e-4,
            learning_rate: 0.1,
            iterations: 500,
        }
    }
}

/// `P(y=1|x) = σ(w·x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Norm of the full gradient after the last iteration.
    pub gradient_norm: f64,
    /// Regularized mean negative log-likelihood after the last iteration.
    pub loss: f64,
}

impl LogisticModel {
    pub fn zeros(dimension: usize) -> Self {
        LogisticModel {
            weights: alloc::vec![0.0; dimension],
            bias: 0.0,
            gradient_norm: 0.0,
            loss: 0.0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    /// `(P(y=1|x), P(y=0|x))`, the second being exactly `1 - first`.
    pub fn probabilities<V: FeatureVector>(&self, x: &V) -> Result<(f64, f64)> {
        check_dimension(self.weights.len(), x.dimension())?;
        let p = sigmoid(x.dot_dense(&self.weights) + self.bias)
            .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        Ok((p, 1.0 - p))
    }
}

/// Minimizes the L2-regularized mean negative log-likelihood by full-batch
/// gradient descent, starting from zero weights.
pub fn train_logistic<V: FeatureVector>(
    data: &FeatureMatrix<V>,
    config: &LogisticConfig,
) -> Result<LogisticModel> {
    let labels = data.require_both_classes()?;
    let n = data.len() as f64;
    let targets: Vec<f64> = labels.iter().map(|l| f64::from(l.as_label())).collect();
    let mut model = LogisticModel::zeros(data.dimension());
    let mut grad = alloc::vec![0.0; data.dimension()];
    for iteration in 0..config.iterations.max(1) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_bias = 0.0;
        let mut nll = 0.0;
        for (x, &y) in data.rows().iter().zip(&targets) {
            let z = x.dot_dense(&model.weights) + model.bias;
            nll += softplus(z) - y * z;
            let residual = sigmoid(z) - y;
            x.add_scaled_to(residual / n, &mut grad);
            grad_bias += residual / n;
        }
        math::axpy(config.reg_lambda, &model.weights, &mut grad);
        let penalty = 0.5 * config.reg_lambda * math::dot(&model.weights, &model.weights);
        model.loss = nll / n + penalty;
        model.gradient_norm = math::sqrt(math::dot(&grad, &grad) + grad_bias * grad_bias);
        if !model.loss.is_finite() || !model.gradient_norm.is_finite() {
            return Err(Error::Diverged {
                stage: alloc::format!("logistic regression iteration {iteration}"),
            });
        }
        if config.iterations == 0 {
            break;
        }
        math::axpy(-config.learning_rate, &grad, &mut model.weights);
        model.bias -= config.learning_rate * grad_bias;
    }
    Ok(model)
}

/// Positive iff `P(y=1|x) >= 0.5`.
pub fn predict_logistic<V: FeatureVector>(model: &LogisticModel, x: &V) -> Result<(Polarity, f64)> {
    let (p, _) = model.probabilities(x)?;
    let label = if p >= 0.5 {
        Polarity::Positive
    } else {
        Polarity::Negative
    };
    Ok((label, p))
}
