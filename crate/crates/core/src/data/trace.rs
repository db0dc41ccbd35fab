use super::config::FitConfig;
use super::tree::DecisionTree;

/// Per-draw record of the retained ensemble states of one fit.
///
/// `counts` is `K × p` row-major: entry `(k, j)` is the number of internal
/// nodes splitting on feature `j` across all trees of draw `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTrace {
    n_features: usize,
    counts: Vec<u32>,
    sigma2: Vec<f64>,
    mi_nodes: Option<Vec<Vec<(u32, f64)>>>,
    split_probs: Option<Vec<f64>>,
    alpha: Option<Vec<f64>>,
    config: FitConfig,
}

/// One retained draw, as produced by the sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawRecord {
    pub counts: Vec<u32>,
    pub sigma2: f64,
    /// `(feature, acceptance probability)` for every interior node.
    pub mi_nodes: Option<Vec<(u32, f64)>>,
    pub split_probs: Option<Vec<f64>>,
    pub alpha: Option<f64>,
}

impl DrawRecord {
    pub fn from_trees(trees: &[DecisionTree], p: usize, sigma2: f64, with_mi: bool) -> Self {
        let mut counts = vec![0u32; p];
        let mut mi = with_mi.then(Vec::new);
        for tree in trees {
            for id in tree.internal_nodes() {
                let rule = tree.rule(id).expect("internal node has a rule");
                counts[rule.feature] += 1;
                if let Some(mi) = mi.as_mut() {
                    mi.push((rule.feature as u32, tree.accept_prob(id).unwrap_or(0.0)));
                }
            }
        }
        Self {
            counts,
            sigma2,
            mi_nodes: mi,
            split_probs: None,
            alpha: None,
        }
    }
}

impl PosteriorTrace {
    pub fn new(n_features: usize, config: FitConfig) -> Self {
        Self {
            n_features,
            counts: Vec::new(),
            sigma2: Vec::new(),
            mi_nodes: None,
            split_probs: None,
            alpha: None,
            config,
        }
    }

    /// Trace holding only split counts; handy for summaries and tests.
    pub fn from_counts(n_features: usize, rows: &[Vec<u32>]) -> Self {
        let mut t = Self::new(n_features, FitConfig::default());
        for r in rows {
            t.push(DrawRecord {
                counts: r.clone(),
                sigma2: 1.0,
                mi_nodes: None,
                split_probs: None,
                alpha: None,
            });
        }
        t
    }

    /// Appends a draw. Optional columns must be present on every draw or on
    /// none.
    pub fn push(&mut self, draw: DrawRecord) {
        assert_eq!(draw.counts.len(), self.n_features, "count row length");
        let first = self.counts.is_empty();
        self.counts.extend_from_slice(&draw.counts);
        self.sigma2.push(draw.sigma2);
        push_optional(&mut self.mi_nodes, draw.mi_nodes, first, "MI log");
        if let Some(s) = &draw.split_probs {
            assert_eq!(s.len(), self.n_features);
        }
        match (&mut self.split_probs, draw.split_probs) {
            (Some(all), Some(s)) => all.extend(s),
            (slot @ None, Some(s)) if first => *slot = Some(s),
            (None, None) => {}
            _ => panic!("split probability path present on some draws only"),
        }
        push_optional(&mut self.alpha, draw.alpha, first, "alpha path");
    }

    pub fn n_draws(&self) -> usize {
        self.sigma2.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count_row(&self, k: usize) -> &[u32] {
        &self.counts[k * self.n_features..(k + 1) * self.n_features]
    }

    pub fn count_rows(&self) -> impl Iterator<Item = &[u32]> {
        self.counts.chunks_exact(self.n_features.max(1))
    }

    pub fn included(&self, k: usize, j: usize) -> bool {
        self.counts[k * self.n_features + j] > 0
    }

    /// `K × p` inclusion flags, row-major.
    pub fn inclusion(&self) -> Vec<bool> {
        self.counts.iter().map(|&c| c > 0).collect()
    }

    pub fn sigma2_path(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn mi_nodes(&self) -> Option<&[Vec<(u32, f64)>]> {
        self.mi_nodes.as_deref()
    }

    pub fn split_prob_row(&self, k: usize) -> Option<&[f64]> {
        self.split_probs
            .as_ref()
            .map(|s| &s[k * self.n_features..(k + 1) * self.n_features])
    }

    pub fn split_prob_path(&self) -> Option<&[f64]> {
        self.split_probs.as_deref()
    }

    pub fn alpha_path(&self) -> Option<&[f64]> {
        self.alpha.as_deref()
    }
}

fn push_optional<T>(slot: &mut Option<Vec<T>>, item: Option<T>, first: bool, what: &str) {
    match (slot.as_mut(), item) {
        (Some(all), Some(v)) => all.push(v),
        (None, Some(v)) if first => *slot = Some(vec![v]),
        (None, None) => {}
        _ => panic!("{what} present on some draws only"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::tree::SplitRule;

    #[test]
    fn draw_counts_match_internal_nodes() {
        let mut t1 = DecisionTree::new(0.0);
        let (l, _) = t1.grow(0, SplitRule::new(2, 1.0), 0.0, 0.0, Some(0.5));
        t1.grow(l, SplitRule::new(0, 0.0), 0.0, 0.0, Some(1.0));
        let t2 = DecisionTree::stump(SplitRule::new(2, 3.0), 1.0, 2.0);
        let d = DrawRecord::from_trees(&[t1.clone(), t2.clone()], 3, 1.0, true);
        assert_eq!(d.counts, vec![1, 0, 2]);
        let total: u32 = d.counts.iter().sum();
        assert_eq!(total as usize, t1.internal_count() + t2.internal_count());
        assert_eq!(d.mi_nodes.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn inclusion_follows_counts() {
        let t = PosteriorTrace::from_counts(3, &[vec![2, 0, 2], vec![1, 1, 0]]);
        assert_eq!(t.n_draws(), 2);
        assert_eq!(t.inclusion(), vec![true, false, true, true, true, false]);
        assert_eq!(t.count_row(1), &[1, 1, 0]);
    }
}
