//! Feature vectors consumed by the classifiers.
//!
//! TF-IDF produces [`SparseVector`]s and paragraph vectors produce
//! [`DenseVector`]s; classifiers are written against the [`FeatureVector`]
//! trait so both kinds are used natively.

use alloc::vec::Vec;

use crate::corpus::Polarity;
use crate::{Error, Result};

pub trait FeatureVector {
    fn dimension(&self) -> usize;

    /// Calls `f(index, value)` for every stored entry, in increasing index
    /// order. Entries not visited are zero.
    fn for_each_nonzero<F: FnMut(usize, f64)>(&self, f: F);

    /// Inner product with a dense weight slice of the same dimension.
    fn dot_dense(&self, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each_nonzero(|i, v| acc += v * w[i]);
        acc
    }

    fn dot(&self, other: &Self) -> f64;

    fn squared_norm(&self) -> f64 {
        let mut acc = 0.0;
        self.for_each_nonzero(|_, v| acc += v * v);
        acc
    }

    /// Exact squared Euclidean distance.
    fn squared_distance(&self, other: &Self) -> f64;

    fn value_at(&self, index: usize) -> f64;

    /// `w += scale * self`
    fn add_scaled_to(&self, scale: f64, w: &mut [f64]) {
        self.for_each_nonzero(|i, v| w[i] += scale * v);
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dimension: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dimension: usize) -> Self {
        SparseVector {
            dimension,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from `(index, value)` pairs that must already be sorted by
    /// strictly increasing index, each below `dimension`.
    pub fn from_sorted(dimension: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        let mut indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i >= dimension || indices.last().is_some_and(|&last| last >= i) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "sparse index {i} out of order or >= {dimension}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "non-finite value at index {i}"
                )));
            }
            indices.push(i);
            values.push(v);
        }
        Ok(SparseVector {
            dimension,
            indices,
            values,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dimension];
        for (i, v) in self.entries() {
            out[i] = v;
        }
        out
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

impl FeatureVector for SparseVector {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn for_each_nonzero<F: FnMut(usize, f64)>(&self, mut f: F) {
        for (i, v) in self.entries() {
            f(i, v);
        }
    }

    fn dot(&self, other: &Self) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                core::cmp::Ordering::Less => a += 1,
                core::cmp::Ordering::Greater => b += 1,
                core::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    fn squared_distance(&self, other: &Self) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        loop {
            let ia = self.indices.get(a).copied();
            let ib = other.indices.get(b).copied();
            let d = match (ia, ib) {
                (None, None) => break,
                (Some(_), None) => {
                    a += 1;
                    self.values[a - 1]
                }
                (None, Some(_)) => {
                    b += 1;
                    other.values[b - 1]
                }
                (Some(x), Some(y)) if x < y => {
                    a += 1;
                    self.values[a - 1]
                }
                (Some(x), Some(y)) if x > y => {
                    b += 1;
                    other.values[b - 1]
                }
                _ => {
                    a += 1;
                    b += 1;
                    self.values[a - 1] - other.values[b - 1]
                }
            };
            acc += d * d;
        }
        acc
    }

    fn value_at(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }
}

/// Dense real-valued vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector {
    values: Vec<f64>,
}

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Self {
        DenseVector { values }
    }

    pub fn zeros(dimension: usize) -> Self {
        DenseVector {
            values: alloc::vec![0.0; dimension],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(values: Vec<f64>) -> Self {
        DenseVector { values }
    }
}

impl FeatureVector for DenseVector {
    fn dimension(&self) -> usize {
        self.values.len()
    }

    fn for_each_nonzero<F: FnMut(usize, f64)>(&self, mut f: F) {
        for (i, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                f(i, v);
            }
        }
    }

    fn dot_dense(&self, w: &[f64]) -> f64 {
        crate::math::dot(&self.values, w)
    }

    fn dot(&self, other: &Self) -> f64 {
        crate::math::dot(&self.values, &other.values)
    }

    fn squared_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    fn value_at(&self, index: usize) -> f64 {
        self.values.get(index).copied().unwrap_or(0.0)
    }
}

/// Rows of uniform dimension, with labels when used for training.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<V> {
    dimension: usize,
    rows: Vec<V>,
    labels: Option<Vec<Polarity>>,
}

impl<V: FeatureVector> FeatureMatrix<V> {
    pub fn unlabeled(dimension: usize, rows: Vec<V>) -> Result<Self> {
        for r in &rows {
            check_dimension(dimension, r.dimension())?;
        }
        Ok(FeatureMatrix {
            dimension,
            rows,
            labels: None,
        })
    }

    pub fn labeled(dimension: usize, rows: Vec<V>, labels: Vec<Polarity>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut m = Self::unlabeled(dimension, rows)?;
        m.labels = Some(labels);
        Ok(m)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rows(&self) -> &[V] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Option<&[Polarity]> {
        self.labels.as_deref()
    }

    /// Labels, or an error for an unlabeled matrix.
    pub fn require_labels(&self) -> Result<&[Polarity]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("training matrix has no labels".into()))
    }

    /// Labels, failing unless both classes occur.
    pub(crate) fn require_both_classes(&self) -> Result<&[Polarity]> {
        let labels = self.require_labels()?;
        for p in Polarity::ALL {
            if !labels.contains(&p) {
                return Err(Error::EmptyClass(p.name()));
            }
        }
        Ok(labels)
    }
}

pub(crate) fn check_dimension(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sparse_strategy(dim: usize) -> impl Strategy<Value = SparseVector> {
        proptest::collection::btree_map(0..dim, -3.0f64..3.0, 0..dim).prop_map(move |m| {
            SparseVector::from_sorted(dim, m.into_iter().collect()).unwrap()
        })
    }

    #[test]
    fn rejects_unsorted_entries() {
        assert!(SparseVector::from_sorted(5, vec![(2, 1.0), (1, 1.0)]).is_err());
        assert!(SparseVector::from_sorted(5, vec![(5, 1.0)]).is_err());
        assert!(SparseVector::from_sorted(5, vec![(1, f64::NAN)]).is_err());
    }

    #[test]
    fn labeled_matrix_checks_shapes() {
        let rows = vec![DenseVector::zeros(3), DenseVector::zeros(2)];
        assert_eq!(
            FeatureMatrix::labeled(3, rows, vec![Polarity::Positive; 2]),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        );
    }

    proptest! {
        #[test]
        fn sparse_ops_match_dense(a in sparse_strategy(12), b in sparse_strategy(12)) {
            let (da, db) = (DenseVector::new(a.to_dense()), DenseVector::new(b.to_dense()));
            prop_assert!((a.dot(&b) - da.dot(&db)).abs() < 1e-12);
            prop_assert!((a.squared_distance(&b) - da.squared_distance(&db)).abs() < 1e-12);
            prop_assert!((a.squared_norm() - da.squared_norm()).abs() < 1e-12);
            for i in 0..12 {
                prop_assert_eq!(a.value_at(i), da.value_at(i));
            }
        }
    }
}
