//! Datasets, trees, ensembles and posterior traces.

mod config;
mod dataset;
mod trace;
mod tree;

pub use config::{DartHyper, FitConfig, PriorKind};
pub use dataset::{CutpointGrid, Dataset};
pub use trace::{DrawRecord, PosteriorTrace};
pub use tree::{DecisionTree, Node, NodeId, NodeKind, SplitRule};

/// One state of the sum-of-trees model. Leaf values are in response units.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub trees: Vec<DecisionTree>,
    pub sigma2: f64,
    pub split_probs: Option<Vec<f64>>,
    pub alpha: Option<f64>,
}

impl EnsembleState {
    pub fn predict(&self, x: &[f64]) -> f64 {
        predict_ensemble(self, x)
    }
}

pub fn predict_tree(tree: &DecisionTree, x: &[f64]) -> f64 {
    tree.predict(x)
}

pub fn predict_ensemble(state: &EnsembleState, x: &[f64]) -> f64 {
    state.trees.iter().map(|t| t.predict(x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Plain recursive descent, independent of the arena's iterative router.
    fn oracle(tree: &DecisionTree, id: NodeId, x: &[f64]) -> f64 {
        match &tree.node(id).kind {
            NodeKind::Leaf { value } => *value,
            NodeKind::Internal {
                rule, left, right, ..
            } => {
                if x[rule.feature] <= rule.cutpoint {
                    oracle(tree, *left, x)
                } else {
                    oracle(tree, *right, x)
                }
            }
        }
    }

    fn random_tree(rng: &mut ChaCha8Rng, p: usize, splits: usize) -> DecisionTree {
        let mut t = DecisionTree::new(rng.random_range(-1.0..1.0));
        for _ in 0..splits {
            let leaves = t.leaves();
            let leaf = leaves[rng.random_range(0..leaves.len())];
            let rule = SplitRule::new(rng.random_range(0..p), rng.random_range(-1.0..1.0));
            t.grow(
                leaf,
                rule,
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                None,
            );
        }
        t
    }

    fn ensemble(trees: Vec<DecisionTree>) -> EnsembleState {
        EnsembleState {
            trees,
            sigma2: 1.0,
            split_probs: None,
            alpha: None,
        }
    }

    #[test]
    fn depth_two_tree_matches_oracle() {
        let mut t = DecisionTree::new(0.0);
        let (l, r) = t.grow(0, SplitRule::new(0, 0.0), 0.0, 0.0, None);
        let (a, b) = t.grow(l, SplitRule::new(1, 0.5), 0.0, 0.0, None);
        let (c, d) = t.grow(r, SplitRule::new(2, -0.2), 0.0, 0.0, None);
        for (id, v) in [(a, 1.0), (b, 2.0), (c, 3.0), (d, 4.0)] {
            t.set_leaf_value(id, v);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert_eq!(predict_tree(&t, &x), oracle(&t, t.root(), &x));
        }
    }

    #[test]
    fn constant_trees_sum() {
        let s = ensemble(vec![
            DecisionTree::new(1.0),
            DecisionTree::new(2.0),
            DecisionTree::new(3.0),
        ]);
        assert_eq!(predict_ensemble(&s, &[0.0]), 6.0);
    }

    #[test]
    fn single_tree_ensemble_is_the_tree() {
        let t = DecisionTree::stump(SplitRule::new(0, 2.0), -1.0, 1.0);
        let s = ensemble(vec![t.clone()]);
        for x in [1.0, 2.0, 3.0] {
            assert_eq!(s.predict(&[x]), t.predict(&[x]));
        }
    }

    #[test]
    fn random_ensemble_matches_per_tree_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trees: Vec<_> = (0..5).map(|_| random_tree(&mut rng, 4, 6)).collect();
        let s = ensemble(trees);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let want: f64 = s.trees.iter().map(|t| oracle(t, t.root(), &x)).sum();
            assert!((s.predict(&x) - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn prediction_is_linear_in_leaf_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trees: Vec<_> = (0..4).map(|_| random_tree(&mut rng, 3, 5)).collect();
        let s = ensemble(trees);
        let mut doubled = s.clone();
        for t in &mut doubled.trees {
            t.map_leaves(2.0, 0.0);
        }
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert_eq!(doubled.predict(&x), 2.0 * s.predict(&x));
        }
    }

    #[test]
    fn routing_partitions_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = random_tree(&mut rng, 3, 8);
        let n = 200;
        let mut per_leaf = vec![0usize; t.capacity()];
        for _ in 0..n {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            per_leaf[t.route(&x)] += 1;
        }
        let leaves = t.leaves();
        assert_eq!(leaves.iter().map(|&l| per_leaf[l]).sum::<usize>(), n);
        assert!(per_leaf
            .iter()
            .enumerate()
            .all(|(id, &c)| c == 0 || leaves.contains(&id)));
    }
}
