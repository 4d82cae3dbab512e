use alloc::vec::Vec;

use crate::corpus::Polarity;
use crate::features::{check_dimension, FeatureMatrix, FeatureVector};
use crate::math;
use crate::{Error, Result};

/// Multivariate Bernoulli event model over binarized features: feature `i`
/// is present iff its value is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliNbModel {
    /// `P(C_k)`, indexed Positive then Negative.
    pub class_priors: [f64; 2],
    /// `p[k][i]`, the probability that feature `i` is present in class `k`.
    pub feature_probs: [Vec<f64>; 2],
    log_present: [Vec<f64>; 2],
    log_absent_total: [f64; 2],
}

impl BernoulliNbModel {
    pub fn from_parts(class_priors: [f64; 2], feature_probs: [Vec<f64>; 2]) -> Result<Self> {
        if feature_probs[0].len() != feature_probs[1].len() {
            return Err(Error::InvalidArgument("class parameter lengths differ".into()));
        }
        let valid = feature_probs.iter().flatten().all(|&p| p > 0.0 && p < 1.0)
            && class_priors.iter().all(|&p| p > 0.0 && p < 1.0);
        if !valid {
            return Err(Error::InvalidArgument(
                "Bernoulli parameters must lie strictly inside (0, 1)".into(),
            ));
        }
        let mut log_present: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut log_absent_total = [0.0; 2];
        for k in 0..2 {
            log_present[k] = feature_probs[k]
                .iter()
                .map(|&p| math::ln(p) - math::ln(1.0 - p))
                .collect();
            log_absent_total[k] = feature_probs[k].iter().map(|&p| math::ln(1.0 - p)).sum();
        }
        Ok(BernoulliNbModel {
            class_priors,
            feature_probs,
            log_present,
            log_absent_total,
        })
    }

    pub fn dimension(&self) -> usize {
        self.feature_probs[0].len()
    }

    /// `ln P(C_k) + ln P(x | C_k)` for both classes.
    pub fn log_joint<V: FeatureVector>(&self, x: &V) -> Result<[f64; 2]> {
        check_dimension(self.dimension(), x.dimension())?;
        let mut out = [0.0; 2];
        for (k, score) in out.iter_mut().enumerate() {
            let mut s = math::ln(self.class_priors[k]) + self.log_absent_total[k];
            x.for_each_nonzero(|i, _| s += self.log_present[k][i]);
            *score = s;
        }
        Ok(out)
    }

    /// Posterior probability of the positive class.
    pub fn posterior_positive<V: FeatureVector>(&self, x: &V) -> Result<f64> {
        let [pos, neg] = self.log_joint(x)?;
        Ok(math::sigmoid(pos - neg))
    }
}

/// `p[k][i] = (count(i, k) + alpha) / (n_k + 2 alpha)`, priors `n_k / n`.
pub fn train_bernoulli_nb<V: FeatureVector>(
    data: &FeatureMatrix<V>,
    alpha: f64,
) -> Result<BernoulliNbModel> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!(
            "smoothing alpha must be positive, got {alpha}"
        )));
    }
    let labels = data.require_both_classes()?;
    let dim = data.dimension();
    let mut counts = [alloc::vec![0u64; dim], alloc::vec![0u64; dim]];
    let mut class_sizes = [0u64; 2];
    for (x, label) in data.rows().iter().zip(labels) {
        let k = label.class_index();
        class_sizes[k] += 1;
        x.for_each_nonzero(|i, _| counts[k][i] += 1);
    }
    let n = data.len() as f64;
    let priors = [class_sizes[0] as f64 / n, class_sizes[1] as f64 / n];
    let probs = [0, 1].map(|k| {
        counts[k]
            .iter()
            .map(|&c| (c as f64 + alpha) / (class_sizes[k] as f64 + 2.0 * alpha))
            .collect::<Vec<f64>>()
    });
    BernoulliNbModel::from_parts(priors, probs)
}

/// Class with the larger log joint probability; ties go to Positive.
pub fn predict_bernoulli_nb<V: FeatureVector>(model: &BernoulliNbModel, x: &V) -> Result<Polarity> {
    let [pos, neg] = model.log_joint(x)?;
    Ok(if pos >= neg {
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

    fn binary(rows: &[[u8; 3]], labels: &[Polarity]) -> FeatureMatrix<DenseVector> {
        FeatureMatrix::labeled(
            3,
            rows.iter()
                .map(|r| DenseVector::new(r.iter().map(|&b| f64::from(b)).collect()))
                .collect(),
            labels.to_vec(),
        )
        .unwrap()
    }

    fn hand_corpus() -> FeatureMatrix<DenseVector> {
        use Polarity::*;
        binary(
            &[[1, 1, 0], [1, 0, 0], [0, 1, 1], [0, 0, 1]],
            &[Positive, Positive, Negative, Negative],
        )
    }

    #[test]
    fn smoothed_parameter() {
        // feature 2 never occurs in the two positive documents
        let m = train_bernoulli_nb(&hand_corpus(), 1.0).unwrap();
        assert!((m.feature_probs[0][2] - 0.25).abs() < 1e-15);
        assert!((m.feature_probs[0][0] - 0.75).abs() < 1e-15);
        assert_eq!(m.class_priors, [0.5, 0.5]);
    }

    #[test]
    fn posterior_matches_enumeration() {
        let m = train_bernoulli_nb(&hand_corpus(), 1.0).unwrap();
        // per-class parameters by hand: positive (3/4, 2/4, 1/4), negative (1/4, 2/4, 3/4)
        let p = [[0.75, 0.5, 0.25], [0.25, 0.5, 0.75]];
        for bits in 0..8u8 {
            let x = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1];
            let mut joint = [0.5, 0.5];
            for k in 0..2 {
                for i in 0..3 {
                    joint[k] *= if x[i] == 1 { p[k][i] } else { 1.0 - p[k][i] };
                }
            }
            let expected = joint[0] / (joint[0] + joint[1]);
            let v = DenseVector::new(x.iter().map(|&b| f64::from(b)).collect());
            assert!((m.posterior_positive(&v).unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn log_and_linear_space_agree() {
        let m = train_bernoulli_nb(&hand_corpus(), 0.5).unwrap();
        let x = DenseVector::new(vec![1.0, 0.0, 1.0]);
        let [lp, ln] = m.log_joint(&x).unwrap();
        for (k, l) in [lp, ln].into_iter().enumerate() {
            let mut linear = m.class_priors[k];
            for i in 0..3 {
                let p = m.feature_probs[k][i];
                linear *= if x.value_at(i) != 0.0 { p } else { 1.0 - p };
            }
            assert!((math::exp(l) - linear).abs() < 1e-9);
        }
    }

    #[test]
    fn all_absent_is_well_defined() {
        let m = train_bernoulli_nb(&hand_corpus(), 1.0).unwrap();
        let [lp, _] = m.log_joint(&DenseVector::zeros(3)).unwrap();
        let expected: f64 = 0.5 * 0.25 * 0.5 * 0.75;
        assert!((math::exp(lp) - expected).abs() < 1e-12);
    }

    #[test]
    fn symmetric_model_ties_to_positive() {
        let m = BernoulliNbModel::from_parts([0.5, 0.5], [vec![0.3, 0.6], vec![0.3, 0.6]]).unwrap();
        assert_eq!(predict_bernoulli_nb(&m, &DenseVector::new(vec![1.0, 0.0])).unwrap(), Polarity::Positive);
        let m = BernoulliNbModel::from_parts([0.4, 0.6], [vec![0.3, 0.6], vec![0.3, 0.6]]).unwrap();
        assert_eq!(predict_bernoulli_nb(&m, &DenseVector::new(vec![1.0, 0.0])).unwrap(), Polarity::Negative);
    }

    #[test]
    fn errors() {
        let m = train_bernoulli_nb(&hand_corpus(), 1.0).unwrap();
        assert!(predict_bernoulli_nb(&m, &DenseVector::zeros(2)).is_err());
        let one_class = binary(&[[1, 0, 0]], &[Polarity::Negative]);
        assert_eq!(train_bernoulli_nb(&one_class, 1.0), Err(Error::EmptyClass("positive")));
        assert!(train_bernoulli_nb(&hand_corpus(), 0.0).is_err());
    }

    #[test]
    fn tfidf_weights_are_binarized() {
        let rows = vec![
            SparseVector::from_sorted(2, vec![(0, 0.9)]).unwrap(),
            SparseVector::from_sorted(2, vec![(1, 0.2)]).unwrap(),
        ];
        let data = FeatureMatrix::labeled(2, rows, vec![Polarity::Positive, Polarity::Negative]).unwrap();
        let m = train_bernoulli_nb(&data, 1.0).unwrap();
        assert_eq!(m.feature_probs[0], vec![2.0 / 3.0, 1.0 / 3.0]);
    }
}
