use alloc::vec::Vec;

use crate::corpus::Polarity;
use crate::features::{check_dimension, FeatureMatrix, FeatureVector};
use crate::{Error, Result};

/// Stored training rows for nearest-neighbour voting.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel<V> {
    dimension: usize,
    rows: Vec<V>,
    labels: Vec<Polarity>,
    k: usize,
}

impl<V: FeatureVector> KnnModel<V> {
    pub fn from_parts(dimension: usize, rows: Vec<V>, labels: Vec<Polarity>, k: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument("one label per stored row".into()));
        }
        if k == 0 || k > rows.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "k = {k} must lie in 1..={}",
                rows.len()
            )));
        }
        for r in &rows {
            check_dimension(dimension, r.dimension())?;
        }
        Ok(KnnModel { dimension, rows, labels, k })
    }
}

impl<V> KnnModel<V> {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rows(&self) -> &[V] {
        &self.rows
    }

    pub fn labels(&self) -> &[Polarity] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn train_knn<V: FeatureVector + Clone>(data: &FeatureMatrix<V>, k: usize) -> Result<KnnModel<V>> {
    let labels = data.require_labels()?;
    KnnModel::from_parts(data.dimension(), data.rows().to_vec(), labels.to_vec(), k)
}

/// Majority label among the `k` nearest rows by Euclidean distance.
///
/// Equal distances rank the lower training index first; a tied vote goes to
/// the label of the single nearest row.
pub fn knn_predict<V: FeatureVector>(model: &KnnModel<V>, x: &V) -> Result<Polarity> {
    check_dimension(model.dimension, x.dimension())?;
    let mut ranked: Vec<(f64, usize)> = model
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.squared_distance(x), i))
        .collect();
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let k = model.k;
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, by_distance);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(by_distance);
    let positives = ranked
        .iter()
        .filter(|&&(_, i)| model.labels[i] == Polarity::Positive)
        .count();
    let negatives = ranked.len() - positives;
    Ok(match positives.cmp(&negatives) {
        core::cmp::Ordering::Greater => Polarity::Positive,
        core::cmp::Ordering::Less => Polarity::Negative,
        core::cmp::Ordering::Equal => model.labels[ranked[0].1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{DenseVector, SparseVector};
    use alloc::vec;
    use rand::{Rng, SeedableRng};

    fn points(xs: &[(f64, f64, Polarity)]) -> FeatureMatrix<DenseVector> {
        FeatureMatrix::labeled(
            2,
            xs.iter().map(|&(a, b, _)| DenseVector::new(vec![a, b])).collect(),
            xs.iter().map(|&(_, _, l)| l).collect(),
        )
        .unwrap()
    }

    /// Exhaustive scan written independently: full sort by (distance, index).
    fn oracle(data: &FeatureMatrix<DenseVector>, x: &DenseVector, k: usize) -> Polarity {
        let labels = data.labels().unwrap();
        let mut all: Vec<(f64, usize)> = data
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.values().iter().zip(x.values()).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let votes: i32 = all[..k]
            .iter()
            .map(|&(_, i)| if labels[i] == Polarity::Positive { 1 } else { -1 })
            .sum();
        if votes > 0 {
            Polarity::Positive
        } else if votes < 0 {
            Polarity::Negative
        } else {
            labels[all[0].1]
        }
    }

    #[test]
    fn k1_is_nearest_label() {
        use Polarity::*;
        let data = points(&[(0.0, 0.0, Negative), (5.0, 5.0, Positive)]);
        let m = train_knn(&data, 1).unwrap();
        assert_eq!(knn_predict(&m, &DenseVector::new(vec![4.0, 4.0])).unwrap(), Positive);
        assert_eq!(knn_predict(&m, &DenseVector::new(vec![1.0, 0.0])).unwrap(), Negative);
    }

    #[test]
    fn majority_of_three() {
        use Polarity::*;
        let data = points(&[(0.0, 0.0, Negative), (1.0, 0.0, Positive), (0.0, 1.0, Positive), (9.0, 9.0, Negative)]);
        let m = train_knn(&data, 3).unwrap();
        assert_eq!(knn_predict(&m, &DenseVector::new(vec![0.1, 0.1])).unwrap(), Positive);
    }

    #[test]
    fn tied_vote_follows_nearest() {
        use Polarity::*;
        let data = points(&[(0.0, 0.0, Negative), (2.0, 0.0, Positive)]);
        let m = train_knn(&data, 2).unwrap();
        assert_eq!(knn_predict(&m, &DenseVector::new(vec![0.5, 0.0])).unwrap(), Negative);
        assert_eq!(knn_predict(&m, &DenseVector::new(vec![1.5, 0.0])).unwrap(), Positive);
        // equidistant: lower index is nearer
        assert_eq!(knn_predict(&m, &DenseVector::new(vec![1.0, 0.0])).unwrap(), Negative);
    }

    #[test]
    fn bad_k() {
        let data = points(&[(0.0, 0.0, Polarity::Negative)]);
        assert!(train_knn(&data, 0).is_err());
        assert!(train_knn(&data, 2).is_err());
    }

    #[test]
    fn agrees_with_exhaustive_scan() {
        let mut rng = crate::SeededRng::seed_from_u64(21);
        for n in [50, 200] {
            for round in 0..5 {
                let xs: Vec<(f64, f64, Polarity)> = (0..n)
                    .map(|_| {
                        // coarse grid so that distance ties actually occur
                        let a = f64::from(rng.gen_range(0..8)) * 0.5;
                        let b = f64::from(rng.gen_range(0..8)) * 0.5;
                        let l = if rng.gen_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
                        (a, b, l)
                    })
                    .collect();
                let data = points(&xs);
                for k in [1, 2, 3, 4, 5, 7] {
                    let m = train_knn(&data, k).unwrap();
                    for _ in 0..20 {
                        let q = DenseVector::new(vec![rng.gen_range(-1.0..5.0), f64::from(round) * 0.5]);
                        assert_eq!(knn_predict(&m, &q).unwrap(), oracle(&data, &q, k));
                    }
                }
            }
        }
    }

    #[test]
    fn sparse_rows_work_natively() {
        let rows = vec![
            SparseVector::from_sorted(4, vec![(0, 1.0)]).unwrap(),
            SparseVector::from_sorted(4, vec![(3, 1.0)]).unwrap(),
        ];
        let data = FeatureMatrix::labeled(4, rows, vec![Polarity::Positive, Polarity::Negative]).unwrap();
        let m = train_knn(&data, 1).unwrap();
        let q = SparseVector::from_sorted(4, vec![(2, 0.1), (3, 0.9)]).unwrap();
        assert_eq!(knn_predict(&m, &q).unwrap(), Polarity::Negative);
    }
}
