//! Tree-structure proposals and their Metropolis-Hastings ratios.
//!
//! All ratios are returned on the log scale. The split-feature probability
//! and the cutpoint count enter both the tree prior and the proposal kernel
//! of BIRTH/DEATH, and cancel; CHANGE has a symmetric kernel whose rule
//! terms cancel against the prior in the same way.

use std::ops::Range;

use super::conjugate::{log_split_likelihood_ratio, LeafSufficientStats};
use crate::data::{CutpointGrid, DecisionTree, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Birth,
    Death,
    Change,
}

impl MoveKind {
    pub const ALL: [MoveKind; 3] = [MoveKind::Birth, MoveKind::Death, MoveKind::Change];

    pub fn probability(self) -> f64 {
        match self {
            MoveKind::Birth => 0.25,
            MoveKind::Death => 0.25,
            MoveKind::Change => 0.5,
        }
    }

    /// Maps a uniform draw in `[0, 1)` to a move.
    pub fn from_uniform(u: f64) -> Self {
        if u < 0.25 {
            MoveKind::Birth
        } else if u < 0.5 {
            MoveKind::Death
        } else {
            MoveKind::Change
        }
    }

    pub fn index(self) -> usize {
        match self {
            MoveKind::Birth => 0,
            MoveKind::Death => 1,
            MoveKind::Change => 2,
        }
    }
}

/// Prior probability that a node at `depth` is split.
pub fn p_split(depth: u32, gamma: f64, beta: f64) -> f64 {
    gamma / (1.0 + depth as f64).powf(beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreePrior {
    pub gamma: f64,
    pub beta: f64,
    /// Leaf-value prior variance.
    pub sigma_mu2: f64,
}

impl TreePrior {
    /// Log of `P(tree with leaf at depth d split) / P(tree with it terminal)`,
    /// excluding the rule-choice factor.
    pub fn log_split_prior_ratio(&self, depth: u32) -> f64 {
        let here = p_split(depth, self.gamma, self.beta);
        let below = p_split(depth + 1, self.gamma, self.beta);
        here.ln() + 2.0 * (1.0 - below).ln() - (1.0 - here).ln()
    }
}

/// Cutpoint indices available for a rule on `feature` at `node`, given the
/// region carved out by its ancestors. Empty means the feature is
/// exhausted at this node.
pub fn available_cutpoints(
    tree: &DecisionTree,
    node: NodeId,
    feature: usize,
    grid: &CutpointGrid,
) -> Range<usize> {
    let (lower, upper) = tree.region(node, feature);
    grid.available(feature, lower, upper)
}

fn sibling_is_leaf(tree: &DecisionTree, node: NodeId) -> bool {
    match tree.parent(node) {
        Some(parent) => {
            let (l, r) = tree.children(parent).expect("parent is internal");
            let sib = if l == node { r } else { l };
            tree.is_leaf(sib)
        }
        None => false,
    }
}

/// Log MH ratio for growing `leaf` into two children with the given
/// partial-residual statistics.
pub fn birth_log_ratio(
    tree: &DecisionTree,
    leaf: NodeId,
    left: &LeafSufficientStats,
    right: &LeafSufficientStats,
    sigma2: f64,
    prior: &TreePrior,
) -> f64 {
    debug_assert!(tree.is_leaf(leaf));
    let n_leaves = tree.leaf_count() as f64;
    let nogs_after = (tree.nogs().len() + 1 - usize::from(sibling_is_leaf(tree, leaf))) as f64;
    let kernel = (MoveKind::Death.probability() / MoveKind::Birth.probability()).ln()
        + n_leaves.ln()
        - nogs_after.ln();
    kernel
        + prior.log_split_prior_ratio(tree.depth(leaf))
        + log_split_likelihood_ratio(left, right, sigma2, prior.sigma_mu2)
}

pub fn birth_ratio(
    tree: &DecisionTree,
    leaf: NodeId,
    left: &LeafSufficientStats,
    right: &LeafSufficientStats,
    sigma2: f64,
    prior: &TreePrior,
) -> f64 {
    birth_log_ratio(tree, leaf, left, right, sigma2, prior).exp()
}

/// Log MH ratio for collapsing `node` (whose children are leaves with the
/// given statistics) back into a leaf. Exactly the negative of the BIRTH
/// ratio that would recreate the current tree.
pub fn death_log_ratio(
    tree: &DecisionTree,
    node: NodeId,
    left: &LeafSufficientStats,
    right: &LeafSufficientStats,
    sigma2: f64,
    prior: &TreePrior,
) -> f64 {
    debug_assert!(tree.is_nog(node));
    let n_nogs = tree.nogs().len() as f64;
    let leaves_after = (tree.leaf_count() - 1) as f64;
    let kernel = (MoveKind::Birth.probability() / MoveKind::Death.probability()).ln()
        + n_nogs.ln()
        - leaves_after.ln();
    kernel
        - prior.log_split_prior_ratio(tree.depth(node))
        - log_split_likelihood_ratio(left, right, sigma2, prior.sigma_mu2)
}

/// Log MH ratio for replacing the rule of a node whose children are leaves.
pub fn change_log_ratio(
    old_left: &LeafSufficientStats,
    old_right: &LeafSufficientStats,
    new_left: &LeafSufficientStats,
    new_right: &LeafSufficientStats,
    sigma2: f64,
    sigma_mu2: f64,
) -> f64 {
    // The merged term is identical on both sides.
    log_split_likelihood_ratio(new_left, new_right, sigma2, sigma_mu2)
        - log_split_likelihood_ratio(old_left, old_right, sigma2, sigma_mu2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SplitRule;

    fn stats(n: usize, sum_r: f64) -> LeafSufficientStats {
        LeafSufficientStats {
            n,
            sum_r,
            sum_r2: sum_r * sum_r / n.max(1) as f64 + 1.0,
        }
    }

    const PRIOR: TreePrior = TreePrior {
        gamma: 0.95,
        beta: 2.0,
        sigma_mu2: 0.01,
    };

    #[test]
    fn split_probability_by_depth() {
        assert_eq!(p_split(0, 0.95, 2.0), 0.95);
        assert!((p_split(1, 0.95, 2.0) - 0.2375).abs() < 1e-15);
        for d in 0..6 {
            assert_eq!(p_split(d, 0.7, 0.0), 0.7);
        }
    }

    #[test]
    fn move_mix() {
        let total: f64 = MoveKind::ALL.iter().map(|m| m.probability()).sum();
        assert_eq!(total, 1.0);
        assert_eq!(MoveKind::from_uniform(0.1), MoveKind::Birth);
        assert_eq!(MoveKind::from_uniform(0.3), MoveKind::Death);
        assert_eq!(MoveKind::from_uniform(0.9), MoveKind::Change);
    }

    #[test]
    fn root_prior_factor() {
        let want = 0.95f64.ln() + 2.0 * (1.0 - 0.2375f64).ln() - 0.05f64.ln();
        assert!((PRIOR.log_split_prior_ratio(0) - want).abs() < 1e-14);
        // a lone root: kernel ratio is 1 leaf / 1 nog after the birth
        let t = DecisionTree::new(0.0);
        let (l, r) = (stats(10, 1.0), stats(12, -2.0));
        let got = birth_log_ratio(&t, 0, &l, &r, 0.5, &PRIOR);
        let lik = log_split_likelihood_ratio(&l, &r, 0.5, PRIOR.sigma_mu2);
        assert!((got - (want + lik)).abs() < 1e-12);
    }

    #[test]
    fn death_inverts_birth() {
        // three-level tree so that the sibling and nog bookkeeping matter
        let mut t = DecisionTree::new(0.0);
        let (_, b) = t.grow(0, SplitRule::new(0, 1.0), 0.0, 0.0, None);
        t.grow(b, SplitRule::new(1, 2.0), 0.0, 0.0, None);
        let (l, r) = (stats(7, 0.4), stats(9, -1.1));
        for leaf in t.leaves() {
            let fwd = birth_log_ratio(&t, leaf, &l, &r, 0.3, &PRIOR);
            let mut grown = t.clone();
            grown.grow(leaf, SplitRule::new(2, 0.0), 0.0, 0.0, None);
            let back = death_log_ratio(&grown, leaf, &l, &r, 0.3, &PRIOR);
            assert!((fwd + back).abs() < 1e-12, "leaf {leaf}: {fwd} vs {back}");
        }
    }

    #[test]
    fn change_is_zero_for_identical_partition() {
        let (l, r) = (stats(5, 1.0), stats(6, 2.0));
        assert_eq!(change_log_ratio(&l, &r, &l, &r, 1.0, 0.1), 0.0);
    }
}
