//! Binary classifiers over [`FeatureVector`]s.
//!
//! Every model breaks exact score ties toward [`Polarity::Positive`].

mod knn;
mod logistic;
mod naive_bayes;
mod svm;
mod tree;

pub use knn::{knn_predict, train_knn, KnnModel};
pub use logistic::{predict_logistic, train_logistic, LogisticConfig, LogisticModel};
pub use naive_bayes::{predict_bernoulli_nb, train_bernoulli_nb, BernoulliNbModel};
pub use svm::{predict_svm, train_svm, Kernel, SvmConfig, SvmModel};
pub use tree::{gini, predict_decision_tree, train_decision_tree, DecisionTreeModel, TreeConfig, TreeNode};

use crate::corpus::Polarity;
use crate::features::FeatureVector;
use crate::Result;

/// A trained model that labels feature vectors.
pub trait Classifier<V: FeatureVector> {
    fn predict(&self, x: &V) -> Result<Polarity>;
}

impl<V: FeatureVector> Classifier<V> for LogisticModel {
    fn predict(&self, x: &V) -> Result<Polarity> {
        predict_logistic(self, x).map(|(p, _)| p)
    }
}

impl<V: FeatureVector> Classifier<V> for KnnModel<V> {
    fn predict(&self, x: &V) -> Result<Polarity> {
        knn_predict(self, x)
    }
}

impl<V: FeatureVector> Classifier<V> for BernoulliNbModel {
    fn predict(&self, x: &V) -> Result<Polarity> {
        predict_bernoulli_nb(self, x)
    }
}

impl<V: FeatureVector> Classifier<V> for SvmModel<V> {
    fn predict(&self, x: &V) -> Result<Polarity> {
        predict_svm(self, x)
    }
}

impl<V: FeatureVector> Classifier<V> for DecisionTreeModel {
    fn predict(&self, x: &V) -> Result<Polarity> {
        predict_decision_tree(self, x)
    }
}
