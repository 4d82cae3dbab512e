use alloc::vec::Vec;

use crate::corpus::Polarity;
use crate::features::{check_dimension, FeatureMatrix, FeatureVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    /// Maximum number of tests on any root-to-leaf path; `None` is unbounded.
    pub max_depth: Option<usize>,
    /// Nodes holding fewer training rows than this become leaves.
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeNode {
    /// `x[feature] <= threshold` goes to `left`, otherwise `right`.
    Test {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf { label: Polarity },
}

/// Binary tree stored as a node list with the root at index 0. Children
/// always come after their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTreeModel {
    dimension: usize,
    nodes: Vec<TreeNode>,
}

impl DecisionTreeModel {
    pub fn from_parts(dimension: usize, nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("a tree needs at least one node".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if let TreeNode::Test { feature, threshold, left, right } = *node {
                let ok = feature < dimension
                    && threshold.is_finite()
                    && left > i
                    && right > i
                    && left < nodes.len()
                    && right < nodes.len();
                if !ok {
                    return Err(Error::InvalidArgument(alloc::format!("malformed test node {i}")));
                }
            }
        }
        Ok(DecisionTreeModel { dimension, nodes })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Number of tests on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut depth = alloc::vec![0usize; self.nodes.len()];
        let mut deepest = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            if let TreeNode::Test { left, right, .. } = *node {
                depth[left] = depth[i] + 1;
                depth[right] = depth[i] + 1;
                deepest = deepest.max(depth[i] + 1);
            }
        }
        deepest
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

/// Gini impurity `1 - p^2 - q^2` of a node with the given class counts.
pub fn gini(positives: usize, negatives: usize) -> f64 {
    let n = (positives + negatives) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = positives as f64 / n;
    let q = negatives as f64 / n;
    1.0 - p * p - q * q
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Lowest weighted Gini split of `rows` over every feature and every
/// midpoint between adjacent distinct values. Zero entries are implicit, so
/// the cost scales with the nonzeros of the node.
fn best_split<V: FeatureVector>(data: &[V], labels: &[Polarity], rows: &[usize]) -> Option<Split> {
    let n = rows.len();
    let total_pos = rows.iter().filter(|&&r| labels[r] == Polarity::Positive).count();
    let mut entries: Vec<(usize, f64, bool)> = Vec::new();
    for &r in rows {
        let pos = labels[r] == Polarity::Positive;
        data[r].for_each_nonzero(|f, v| entries.push((f, v, pos)));
    }
    entries.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut best: Option<Split> = None;
    // distinct values of one feature as (value, positives, negatives)
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    let mut start = 0;
    while start < entries.len() {
        let feature = entries[start].0;
        let end = start + entries[start..].iter().take_while(|e| e.0 == feature).count();
        groups.clear();
        for &(_, v, pos) in &entries[start..end] {
            match groups.last_mut() {
                Some(g) if g.0 == v => {
                    if pos { g.1 += 1 } else { g.2 += 1 }
                }
                _ => groups.push((v, usize::from(pos), usize::from(!pos))),
            }
        }
        let stored = end - start;
        let stored_pos = entries[start..end].iter().filter(|e| e.2).count();
        let (zero_pos, zero_neg) = (total_pos - stored_pos, (n - total_pos) - (stored - stored_pos));
        if zero_pos + zero_neg > 0 {
            let at = groups.partition_point(|g| g.0 < 0.0);
            match groups.get_mut(at) {
                Some(g) if g.0 == 0.0 => {
                    g.1 += zero_pos;
                    g.2 += zero_neg;
                }
                _ => groups.insert(at, (0.0, zero_pos, zero_neg)),
            }
        }

        let (mut left_pos, mut left_neg) = (0, 0);
        for w in groups.windows(2) {
            left_pos += w[0].1;
            left_neg += w[0].2;
            let left_n = left_pos + left_neg;
            let right_pos = total_pos - left_pos;
            let right_neg = (n - total_pos) - left_neg;
            let impurity = (left_n as f64 * gini(left_pos, left_neg)
                + (n - left_n) as f64 * gini(right_pos, right_neg))
                / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let (lo, hi) = (w[0].0, w[1].0);
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split { feature, threshold, impurity });
            }
        }
        start = end;
    }
    best
}

fn majority(labels: &[Polarity], rows: &[usize]) -> (Polarity, bool) {
    let pos = rows.iter().filter(|&&r| labels[r] == Polarity::Positive).count();
    let neg = rows.len() - pos;
    let label = if pos >= neg { Polarity::Positive } else { Polarity::Negative };
    (label, pos == 0 || neg == 0)
}

/// Grows a tree greedily, choosing at each node the (feature, threshold)
/// pair with the lowest weighted Gini impurity. A node becomes a leaf when
/// it is pure, at `max_depth`, below `min_leaf` rows, or when no feature
/// separates its rows. Leaves take the majority label, ties Positive.
pub fn train_decision_tree<V: FeatureVector>(
    data: &FeatureMatrix<V>,
    config: &TreeConfig,
) -> Result<DecisionTreeModel> {
    let labels = data.require_labels()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("cannot grow a tree on zero rows".into()));
    }
    let rows = data.rows();
    let mut nodes = alloc::vec![TreeNode::Leaf { label: Polarity::Positive }];
    let mut stack: Vec<(usize, Vec<usize>, usize)> = alloc::vec![(0, (0..data.len()).collect(), 0)];
    while let Some((id, members, depth)) = stack.pop() {
        let (label, pure) = majority(labels, &members);
        nodes[id] = TreeNode::Leaf { label };
        if pure || config.max_depth.is_some_and(|d| depth >= d) || members.len() < config.min_leaf {
            continue;
        }
        let Some(split) = best_split(rows, labels, &members) else {
            continue;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = members
            .iter()
            .partition(|&&r| rows[r].value_at(split.feature) <= split.threshold);
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(TreeNode::Leaf { label });
        nodes.push(TreeNode::Leaf { label });
        nodes[id] = TreeNode::Test {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        stack.push((r, right, depth + 1));
        stack.push((l, left, depth + 1));
    }
    DecisionTreeModel::from_parts(data.dimension(), nodes)
}

pub fn predict_decision_tree<V: FeatureVector>(model: &DecisionTreeModel, x: &V) -> Result<Polarity> {
    check_dimension(model.dimension, x.dimension())?;
    let mut at = 0;
    loop {
        match model.nodes[at] {
            TreeNode::Leaf { label } => return Ok(label),
            TreeNode::Test { feature, threshold, left, right } => {
                at = if x.value_at(feature) <= threshold { left } else { right };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{DenseVector, SparseVector};
    use alloc::vec;
    use proptest::prelude::*;

    fn column(values: &[f64], labels: &[Polarity]) -> FeatureMatrix<DenseVector> {
        FeatureMatrix::labeled(1, values.iter().map(|&v| DenseVector::new(vec![v])).collect(), labels.to_vec())
            .unwrap()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(5, 5), 0.5);
        assert_eq!(gini(4, 0), 0.0);
        assert!((gini(1, 3) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn pure_input_is_one_leaf() {
        let data = column(&[1.0, 2.0], &[Polarity::Negative; 2]);
        let m = train_decision_tree(&data, &TreeConfig::default()).unwrap();
        assert_eq!(m.nodes(), &[TreeNode::Leaf { label: Polarity::Negative }]);
        assert_eq!(predict_decision_tree(&m, &DenseVector::new(vec![99.0])).unwrap(), Polarity::Negative);
    }

    #[test]
    fn one_dimensional_threshold() {
        use Polarity::*;
        let data = column(&[0.0, 1.0, 2.0, 3.0], &[Negative, Negative, Positive, Positive]);
        let m = train_decision_tree(&data, &TreeConfig::default()).unwrap();
        match m.nodes()[0] {
            TreeNode::Test { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
            }
            other => panic!("root is {other:?}"),
        }
        assert_eq!(m.nodes().len(), 3);
        for (x, &l) in data.rows().iter().zip(data.labels().unwrap()) {
            assert_eq!(predict_decision_tree(&m, x).unwrap(), l);
        }
    }

    #[test]
    fn threshold_matches_exhaustive_enumeration() {
        // independent enumeration over every midpoint of the sorted values
        use Polarity::*;
        let xs = [0.3, -1.0, 2.5, 0.0, 0.0, 4.0, -0.5, 1.0];
        let ls = [Positive, Negative, Positive, Negative, Positive, Positive, Negative, Negative];
        let data = column(&xs, &ls);
        let mut sorted = xs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        let mut best = (f64::INFINITY, 0.0);
        for w in sorted.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let count = |pred: &dyn Fn(f64) -> bool, l: Polarity| {
                xs.iter().zip(&ls).filter(|(x, y)| pred(**x) && **y == l).count()
            };
            let (lp, ln) = (count(&|x| x <= t, Positive), count(&|x| x <= t, Negative));
            let (rp, rn) = (count(&|x| x > t, Positive), count(&|x| x > t, Negative));
            let score = ((lp + ln) as f64 * gini(lp, ln) + (rp + rn) as f64 * gini(rp, rn)) / 8.0;
            if score < best.0 {
                best = (score, t);
            }
        }
        let m = train_decision_tree(&data, &TreeConfig { max_depth: Some(1), min_leaf: 1 }).unwrap();
        match m.nodes()[0] {
            TreeNode::Test { threshold, .. } => assert_eq!(threshold, best.1),
            other => panic!("root is {other:?}"),
        }
    }

    #[test]
    fn depth_limit_is_respected() {
        use Polarity::*;
        let data = column(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], &[Positive, Negative, Positive, Negative, Positive, Negative]);
        for d in 0..4 {
            let m = train_decision_tree(&data, &TreeConfig { max_depth: Some(d), min_leaf: 1 }).unwrap();
            assert!(m.depth() <= d);
        }
        let m = train_decision_tree(&data, &TreeConfig { max_depth: None, min_leaf: 3 }).unwrap();
        assert!(m.leaf_count() >= 1);
    }

    #[test]
    fn xor_needs_a_zero_gain_split() {
        use Polarity::*;
        let rows = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]].map(|r| DenseVector::new(r.to_vec()));
        let data = FeatureMatrix::labeled(2, rows.to_vec(), vec![Negative, Negative, Positive, Positive]).unwrap();
        let m = train_decision_tree(&data, &TreeConfig::default()).unwrap();
        for (x, &l) in data.rows().iter().zip(data.labels().unwrap()) {
            assert_eq!(predict_decision_tree(&m, x).unwrap(), l);
        }
    }

    #[test]
    fn malformed_nodes_rejected() {
        let looped = vec![TreeNode::Test { feature: 0, threshold: 0.0, left: 0, right: 0 }];
        assert!(DecisionTreeModel::from_parts(1, looped).is_err());
        assert!(DecisionTreeModel::from_parts(1, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn consistent_sparse_data_is_fit_exactly(
            rows in prop::collection::btree_map(
                prop::collection::btree_map(0usize..6, (-3i8..3).prop_map(|v| if v >= 0 { v + 1 } else { v }), 0..4),
                any::<bool>(),
                1..40,
            )
        ) {
            // distinct feature vectors, so the labels are consistent
            let mut vectors = Vec::new();
            let mut labels = Vec::new();
            for (entries, pos) in rows {
                let e: Vec<(usize, f64)> = entries.into_iter().map(|(i, v)| (i, f64::from(v))).collect();
                vectors.push(SparseVector::from_sorted(6, e).unwrap());
                labels.push(if pos { Polarity::Positive } else { Polarity::Negative });
            }
            let data = FeatureMatrix::labeled(6, vectors, labels).unwrap();
            let m = train_decision_tree(&data, &TreeConfig::default()).unwrap();
            for (x, &l) in data.rows().iter().zip(data.labels().unwrap()) {
                prop_assert_eq!(predict_decision_tree(&m, x).unwrap(), l);
            }
        }
    }
}
