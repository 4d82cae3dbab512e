use alloc::vec::Vec;

use crate::corpus::Polarity;
use crate::features::{check_dimension, FeatureMatrix, FeatureVector};
use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// `exp(-gamma ||a - b||^2)`; `None` means `1 / dimension`.
    Rbf { gamma: Option<f64> },
}

impl Kernel {
    fn resolve(self, dimension: usize) -> Result<Kernel> {
        match self {
            Kernel::Linear => Ok(Kernel::Linear),
            Kernel::Rbf { gamma } => {
                let g = gamma.unwrap_or(1.0 / dimension.max(1) as f64);
                if !(g > 0.0) || !g.is_finite() {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "RBF gamma must be positive, got {g}"
                    )));
                }
                Ok(Kernel::Rbf { gamma: Some(g) })
            }
        }
    }

    /// Kernel value given the dot product and squared norms of both inputs.
    fn eval(self, dot: f64, norm_a: f64, norm_b: f64) -> f64 {
        match self {
            Kernel::Linear => dot,
            Kernel::Rbf { gamma } => {
                let d2 = (norm_a + norm_b - 2.0 * dot).max(0.0);
                math::exp(-gamma.unwrap_or(1.0) * d2)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub kernel: Kernel,
    /// Upper bound on every dual variable.
    pub c: f64,
    /// Stop once the maximal KKT violation drops below this.
    pub tol: f64,
    /// Iteration budget in multiples of the training-set size.
    pub max_passes: usize,
    /// Kernel rows kept in memory.
    pub cache_rows: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: Kernel::Linear,
            c: 1.0,
            tol: 1e-3,
            max_passes: 100,
            cache_rows: 1024,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidArgument("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Soft-margin SVM. Decision value `f(x) = sum_i coef_i K(sv_i, x) + bias`,
/// collapsed to `w·x + bias` for the linear kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<V> {
    pub kernel: Kernel,
    pub c: f64,
    pub dimension: usize,
    pub bias: f64,
    /// Explicit weights; present exactly for the linear kernel.
    pub weights: Option<Vec<f64>>,
    /// Support vectors and their `alpha_i y_i`; empty for the linear kernel.
    pub support_vectors: Vec<V>,
    pub coefficients: Vec<f64>,
    /// Dual variables of every training row, in training order.
    pub alphas: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    support_norms: Vec<f64>,
}

impl<V: FeatureVector> SvmModel<V> {
    /// Rebuilds a model from stored parts.
    pub fn from_parts(
        kernel: Kernel,
        c: f64,
        dimension: usize,
        bias: f64,
        weights: Option<Vec<f64>>,
        support_vectors: Vec<V>,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        let kernel = kernel.resolve(dimension)?;
        match (kernel, &weights) {
            (Kernel::Linear, Some(w)) => check_dimension(dimension, w.len())?,
            (Kernel::Rbf { .. }, None) => {}
            _ => {
                return Err(Error::InvalidArgument(
                    "linear models carry weights, RBF models carry support vectors".into(),
                ))
            }
        }
        if support_vectors.len() != coefficients.len() {
            return Err(Error::InvalidArgument("one coefficient per support vector".into()));
        }
        for sv in &support_vectors {
            check_dimension(dimension, sv.dimension())?;
        }
        let finite = bias.is_finite()
            && coefficients.iter().all(|c| c.is_finite())
            && weights.iter().flatten().all(|w| w.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("SVM parameters must be finite".into()));
        }
        let support_norms = support_vectors.iter().map(|v| v.squared_norm()).collect();
        Ok(SvmModel {
            kernel,
            c,
            dimension,
            bias,
            weights,
            support_vectors,
            coefficients,
            alphas: Vec::new(),
            converged: true,
            iterations: 0,
            support_norms,
        })
    }

    pub fn decision_value(&self, x: &V) -> Result<f64> {
        check_dimension(self.dimension, x.dimension())?;
        if let Some(w) = &self.weights {
            return Ok(x.dot_dense(w) + self.bias);
        }
        let nx = x.squared_norm();
        let mut f = self.bias;
        for ((sv, &coef), &ns) in self.support_vectors.iter().zip(&self.coefficients).zip(&self.support_norms) {
            f += coef * self.kernel.eval(sv.dot(x), ns, nx);
        }
        Ok(f)
    }
}

/// FIFO cache of kernel rows `Q_i[t] = y_i y_t K(x_i, x_t)`.
struct KernelRows<'a, V> {
    rows: &'a [V],
    y: &'a [f64],
    norms: Vec<f64>,
    kernel: Kernel,
    slot_of: Vec<Option<usize>>,
    owner: Vec<usize>,
    data: Vec<Vec<f64>>,
    capacity: usize,
    next: usize,
}

impl<'a, V: FeatureVector> KernelRows<'a, V> {
    fn new(rows: &'a [V], y: &'a [f64], kernel: Kernel, capacity: usize) -> Self {
        KernelRows {
            rows,
            y,
            norms: rows.iter().map(|r| r.squared_norm()).collect(),
            kernel,
            slot_of: alloc::vec![None; rows.len()],
            owner: Vec::new(),
            data: Vec::new(),
            capacity: capacity.max(2),
            next: 0,
        }
    }

    fn diagonal(&self, i: usize) -> f64 {
        self.kernel.eval(self.norms[i], self.norms[i], self.norms[i])
    }

    /// Loads row `i` without evicting the slot `keep`.
    fn load(&mut self, i: usize, keep: Option<usize>) -> usize {
        if let Some(s) = self.slot_of[i] {
            return s;
        }
        let slot = if self.data.len() < self.capacity {
            self.data.push(alloc::vec![0.0; self.rows.len()]);
            self.owner.push(i);
            self.data.len() - 1
        } else {
            if Some(self.next) == keep {
                self.next = (self.next + 1) % self.capacity;
            }
            let s = self.next;
            self.next = (self.next + 1) % self.capacity;
            self.slot_of[self.owner[s]] = None;
            self.owner[s] = i;
            s
        };
        let (xi, yi, ni) = (&self.rows[i], self.y[i], self.norms[i]);
        for (t, q) in self.data[slot].iter_mut().enumerate() {
            *q = yi * self.y[t] * self.kernel.eval(xi.dot(&self.rows[t]), ni, self.norms[t]);
        }
        self.slot_of[i] = Some(slot);
        slot
    }

    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        let si = self.load(i, None);
        let sj = self.load(j, Some(si));
        (&self.data[si], &self.data[sj])
    }
}

/// Solves the soft-margin dual
/// `min 1/2 a'Qa - e'a  s.t.  0 <= a_i <= C, y'a = 0`
/// by sequential minimal optimization, updating the maximal violating pair
/// each iteration. Stops when the KKT gap falls below `tol`, or after
/// `max_passes * n` iterations with `converged = false`.
pub fn train_svm<V: FeatureVector + Clone>(data: &FeatureMatrix<V>, config: &SvmConfig) -> Result<SvmModel<V>> {
    config.validate()?;
    let labels = data.require_both_classes()?;
    let kernel = config.kernel.resolve(data.dimension())?;
    let n = data.len();
    let c = config.c;
    let y: Vec<f64> = labels.iter().map(|l| l.as_sign()).collect();
    let mut q = KernelRows::new(data.rows(), &y, kernel, config.cache_rows);
    let diag: Vec<f64> = (0..n).map(|i| q.diagonal(i)).collect();

    let mut alpha = alloc::vec![0.0; n];
    let mut grad = alloc::vec![-1.0; n];
    let budget = config.max_passes.saturating_mul(n);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < budget {
        let Some((i, j, gap)) = select_pair(&alpha, &grad, &y, c) else {
            converged = true;
            break;
        };
        if gap < config.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (qi, qj) = q.pair(i, j);
        update_pair(&mut alpha, &grad, &y, &diag, qi[j], i, j, c);
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Diverged { stage: "SMO".into() });
    }

    let rho = compute_rho(&alpha, &grad, &y, c);
    let mut weights = None;
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    match kernel {
        Kernel::Linear => {
            let mut w = alloc::vec![0.0; data.dimension()];
            for (t, x) in data.rows().iter().enumerate() {
                if alpha[t] > 0.0 {
                    x.add_scaled_to(alpha[t] * y[t], &mut w);
                }
            }
            weights = Some(w);
        }
        Kernel::Rbf { .. } => {
            for (t, x) in data.rows().iter().enumerate() {
                if alpha[t] > 0.0 {
                    support_vectors.push(x.clone());
                    coefficients.push(alpha[t] * y[t]);
                }
            }
        }
    }
    let mut model = SvmModel::from_parts(kernel, c, data.dimension(), -rho, weights, support_vectors, coefficients)?;
    model.alphas = alpha;
    model.converged = converged;
    model.iterations = iterations;
    Ok(model)
}

fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// `i = argmax_{up} -y G`, `j = argmin_{low} -y G` and the gap between them.
fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> Option<(usize, usize, f64)> {
    let mut best_up: Option<(usize, f64)> = None;
    let mut best_low: Option<(usize, f64)> = None;
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && best_up.is_none_or(|(_, m)| v > m) {
            best_up = Some((t, v));
        }
        if in_low(alpha[t], y[t], c) && best_low.is_none_or(|(_, m)| v < m) {
            best_low = Some((t, v));
        }
    }
    let ((i, m), (j, big_m)) = (best_up?, best_low?);
    Some((i, j, m - big_m))
}

#[allow(clippy::too_many_arguments)]
fn update_pair(alpha: &mut [f64], grad: &[f64], y: &[f64], diag: &[f64], qij: f64, i: usize, j: usize, c: f64) {
    const TAU: f64 = 1e-12;
    let (mut ai, mut aj) = (alpha[i], alpha[j]);
    if y[i] != y[j] {
        let quad = (diag[i] + diag[j] + 2.0 * qij).max(TAU);
        let delta = (-grad[i] - grad[j]) / quad;
        let diff = ai - aj;
        ai += delta;
        aj += delta;
        if diff > 0.0 {
            if aj < 0.0 {
                aj = 0.0;
                ai = diff;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = -diff;
        }
        if diff > 0.0 {
            if ai > c {
                ai = c;
                aj = c - diff;
            }
        } else if aj > c {
            aj = c;
            ai = c + diff;
        }
    } else {
        let quad = (diag[i] + diag[j] - 2.0 * qij).max(TAU);
        let delta = (grad[i] - grad[j]) / quad;
        let sum = ai + aj;
        ai -= delta;
        aj += delta;
        if sum > c {
            if ai > c {
                ai = c;
                aj = sum - c;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > c {
            if aj > c {
                aj = c;
                ai = sum - c;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
    }
    alpha[i] = ai.clamp(0.0, c);
    alpha[j] = aj.clamp(0.0, c);
}

/// Offset so that free support vectors sit on the margin; midpoint of the
/// feasible interval when none are free.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum += yg;
            free += 1;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Sign of the decision value; zero counts as Positive.
pub fn predict_svm<V: FeatureVector>(model: &SvmModel<V>, x: &V) -> Result<Polarity> {
    Ok(if model.decision_value(x)? >= 0.0 {
        Polarity::Positive
    } else {
        Polarity::Negative
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{DenseVector, SparseVector};
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    fn matrix(xs: &[&[f64]], labels: &[Polarity]) -> FeatureMatrix<DenseVector> {
        FeatureMatrix::labeled(
            xs[0].len(),
            xs.iter().map(|x| DenseVector::new(x.to_vec())).collect(),
            labels.to_vec(),
        )
        .unwrap()
    }

    fn xor() -> FeatureMatrix<DenseVector> {
        use Polarity::*;
        matrix(
            &[&[0.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]],
            &[Negative, Negative, Positive, Positive],
        )
    }

    fn train_accuracy(m: &SvmModel<DenseVector>, data: &FeatureMatrix<DenseVector>) -> f64 {
        let hits = data
            .rows()
            .iter()
            .zip(data.labels().unwrap())
            .filter(|(x, &l)| predict_svm(m, *x).unwrap() == l)
            .count();
        100.0 * hits as f64 / data.len() as f64
    }

    fn random_blobs(seed: u64, n: usize, dim: usize, overlap: f64) -> FeatureMatrix<DenseVector> {
        let mut rng = crate::SeededRng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for t in 0..n {
            let l = if t % 2 == 0 { Polarity::Positive } else { Polarity::Negative };
            let centre = l.as_sign() * (1.0 - overlap);
            rows.push(DenseVector::new((0..dim).map(|_| centre + rng.gen_range(-1.0..1.0)).collect()));
            labels.push(l);
        }
        FeatureMatrix::labeled(dim, rows, labels).unwrap()
    }

    #[test]
    fn two_points_split_at_zero() {
        let data = matrix(&[&[-1.0], &[1.0]], &[Polarity::Negative, Polarity::Positive]);
        let cfg = SvmConfig { c: 100.0, tol: 1e-9, ..SvmConfig::default() };
        let m = train_svm(&data, &cfg).unwrap();
        assert!(m.converged);
        assert!(m.alphas.iter().all(|&a| a > 0.0), "both are support vectors");
        let w = m.weights.as_ref().unwrap();
        assert!((w[0] - 1.0).abs() < 1e-9);
        assert!(m.bias.abs() < 1e-9);
        assert_eq!(predict_svm(&m, &DenseVector::new(vec![0.1])).unwrap(), Polarity::Positive);
        assert_eq!(predict_svm(&m, &DenseVector::new(vec![-0.1])).unwrap(), Polarity::Negative);
    }

    #[test]
    fn xor_needs_the_rbf_kernel() {
        let data = xor();
        let linear = train_svm(&data, &SvmConfig::default()).unwrap();
        assert!(train_accuracy(&linear, &data) <= 75.0);
        let rbf = train_svm(
            &data,
            &SvmConfig { kernel: Kernel::Rbf { gamma: Some(1.0) }, c: 10.0, ..SvmConfig::default() },
        )
        .unwrap();
        assert_eq!(train_accuracy(&rbf, &data), 100.0);
    }

    #[test]
    fn dual_feasibility_and_kkt_at_exit() {
        for (seed, kernel) in [(1, Kernel::Linear), (2, Kernel::Rbf { gamma: None }), (3, Kernel::Rbf { gamma: Some(2.0) })] {
            let data = random_blobs(seed, 60, 3, 0.7);
            let cfg = SvmConfig { kernel, c: 0.5, ..SvmConfig::default() };
            let m = train_svm(&data, &cfg).unwrap();
            assert!(m.converged);
            let y: Vec<f64> = data.labels().unwrap().iter().map(|l| l.as_sign()).collect();
            assert!(m.alphas.iter().all(|&a| (0.0..=cfg.c).contains(&a)));
            let balance: f64 = m.alphas.iter().zip(&y).map(|(a, y)| a * y).sum();
            assert!(balance.abs() < cfg.tol, "sum alpha y = {balance}");

            // recompute the gradient densely and check the violation gap
            let gamma = match m.kernel {
                Kernel::Rbf { gamma } => gamma,
                Kernel::Linear => None,
            };
            let k = |a: &DenseVector, b: &DenseVector| -> f64 {
                let dot: f64 = a.values().iter().zip(b.values()).map(|(p, q)| p * q).sum();
                match gamma {
                    None => dot,
                    Some(g) => {
                        let d2: f64 = a.values().iter().zip(b.values()).map(|(p, q)| (p - q) * (p - q)).sum();
                        math::exp(-g * d2)
                    }
                }
            };
            let rows = data.rows();
            let grad: Vec<f64> = (0..rows.len())
                .map(|i| {
                    (0..rows.len()).map(|j| y[i] * y[j] * k(&rows[i], &rows[j]) * m.alphas[j]).sum::<f64>() - 1.0
                })
                .collect();
            let (_, _, gap) = select_pair(&m.alphas, &grad, &y, cfg.c).unwrap();
            assert!(gap < cfg.tol + 1e-9, "gap {gap}");
        }
    }

    #[test]
    fn rbf_decision_matches_kernel_sum() {
        let data = random_blobs(9, 40, 4, 0.6);
        let m = train_svm(&data, &SvmConfig { kernel: Kernel::Rbf { gamma: Some(0.7) }, ..SvmConfig::default() }).unwrap();
        let y: Vec<f64> = data.labels().unwrap().iter().map(|l| l.as_sign()).collect();
        let mut rng = crate::SeededRng::seed_from_u64(4);
        for _ in 0..20 {
            let x = DenseVector::new((0..4).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let mut f = m.bias;
            for (t, row) in data.rows().iter().enumerate() {
                let d2: f64 = row.values().iter().zip(x.values()).map(|(p, q)| (p - q) * (p - q)).sum();
                f += m.alphas[t] * y[t] * math::exp(-0.7 * d2);
            }
            assert!((m.decision_value(&x).unwrap() - f).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_weights_match_dual_expansion() {
        let data = random_blobs(5, 30, 3, 0.5);
        let m = train_svm(&data, &SvmConfig::default()).unwrap();
        let y: Vec<f64> = data.labels().unwrap().iter().map(|l| l.as_sign()).collect();
        let x = DenseVector::new(vec![0.3, -0.2, 0.9]);
        let mut f = m.bias;
        for (t, row) in data.rows().iter().enumerate() {
            f += m.alphas[t] * y[t] * row.dot(&x);
        }
        assert!((m.decision_value(&x).unwrap() - f).abs() < 1e-12);
    }

    #[test]
    fn small_cache_gives_same_solution() {
        let data = random_blobs(6, 50, 3, 0.8);
        let kernel = Kernel::Rbf { gamma: None };
        let big = train_svm(&data, &SvmConfig { kernel, ..SvmConfig::default() }).unwrap();
        let small = train_svm(&data, &SvmConfig { kernel, cache_rows: 2, ..SvmConfig::default() }).unwrap();
        assert_eq!(big, small);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let data = random_blobs(7, 80, 3, 0.9);
        let cfg = SvmConfig { max_passes: 1, tol: 1e-12, c: 5.0, ..SvmConfig::default() };
        let m = train_svm(&data, &cfg).unwrap();
        assert!(!m.converged);
        assert_eq!(m.iterations, 80);
        assert!(m.alphas.iter().all(|&a| (0.0..=cfg.c).contains(&a)));
    }

    #[test]
    fn sparse_inputs() {
        let rows = vec![
            SparseVector::from_sorted(5, vec![(0, 1.0)]).unwrap(),
            SparseVector::from_sorted(5, vec![(0, 0.8), (2, 0.1)]).unwrap(),
            SparseVector::from_sorted(5, vec![(4, 1.0)]).unwrap(),
            SparseVector::from_sorted(5, vec![(3, 0.2), (4, 0.9)]).unwrap(),
        ];
        use Polarity::*;
        let data = FeatureMatrix::labeled(5, rows, vec![Positive, Positive, Negative, Negative]).unwrap();
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: None }] {
            let m = train_svm(&data, &SvmConfig { kernel, ..SvmConfig::default() }).unwrap();
            for (x, &l) in data.rows().iter().zip(data.labels().unwrap()) {
                assert_eq!(predict_svm(&m, x).unwrap(), l);
            }
        }
    }

    #[test]
    fn errors() {
        let one_class = matrix(&[&[1.0]], &[Polarity::Positive]);
        assert!(train_svm(&one_class, &SvmConfig::default()).is_err());
        assert!(train_svm(&xor(), &SvmConfig { c: 0.0, ..SvmConfig::default() }).is_err());
        let m = train_svm(&xor(), &SvmConfig::default()).unwrap();
        assert!(predict_svm(&m, &DenseVector::zeros(3)).is_err());
    }
}
