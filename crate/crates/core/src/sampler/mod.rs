//! Metropolis-within-Gibbs sampler for the sum-of-trees model.
//!
//! Each iteration backfits every tree against its partial residual (one
//! BIRTH/DEATH/CHANGE proposal, then fresh leaf values), draws the noise
//! variance, and under the Dirichlet prior redraws the split probabilities
//! and their concentration. The response is min-max scaled to
//! `[-0.5, 0.5]` internally; traces and returned states are in response
//! units.

pub mod conjugate;
pub mod dart;
pub mod proposal;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{
    CutpointGrid, Dataset, DecisionTree, DrawRecord, EnsembleState, FitConfig, NodeId,
    PosteriorTrace, PriorKind, SplitRule,
};
use crate::error::{Error, Result};
use conjugate::{calibrate_lambda, sample_leaf_value, sample_sigma2, LeafSufficientStats};
use dart::{sample_alpha, update_split_probs};
use proposal::{
    available_cutpoints, birth_log_ratio, change_log_ratio, death_log_ratio, MoveKind, TreePrior,
};

pub use conjugate::LeafSufficientStats as LeafStats;
pub use proposal::p_split;

/// Noise-scale guess used for calibration when the scaled response has no
/// spread at all.
const DEGENERATE_SIGMA_HAT: f64 = 1e-3;

/// Proposal bookkeeping per move kind (indexed by [`MoveKind::index`]).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MoveStats {
    pub proposed: [u64; 3],
    pub accepted: [u64; 3],
    /// Sum of `min(1, r)` over every evaluated BIRTH proposal.
    pub birth_accept_prob_sum: f64,
    pub birth_evaluated: u64,
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub trace: PosteriorTrace,
    pub final_state: EnsembleState,
    /// Posterior mean of the in-sample fit over the kept draws.
    pub fitted_mean: Vec<f64>,
    /// Per kept draw, the average in-sample fitted value.
    pub mean_fit_path: Vec<f64>,
    pub moves: MoveStats,
    pub warnings: Vec<String>,
}

pub fn fit(data: &Dataset, config: &FitConfig) -> Result<PosteriorTrace> {
    fit_full(data, config).map(|o| o.trace)
}

pub fn fit_full(data: &Dataset, config: &FitConfig) -> Result<FitOutput> {
    config.validate(data.p())?;
    Sampler::new(data, config).run()
}

struct ResponseScale {
    min: f64,
    range: f64,
}

impl ResponseScale {
    fn new(y: &[f64]) -> Self {
        let min = y.iter().copied().fold(f64::INFINITY, f64::min);
        let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = if max > min { max - min } else { 1.0 };
        Self { min, range }
    }

    fn scale(&self, v: f64) -> f64 {
        (v - self.min) / self.range - 0.5
    }

    fn unscale(&self, v: f64) -> f64 {
        (v + 0.5) * self.range + self.min
    }
}

struct Sampler<'a> {
    data: &'a Dataset,
    config: &'a FitConfig,
    grid: CutpointGrid,
    rng: ChaCha8Rng,
    scale: ResponseScale,
    y: Vec<f64>,
    trees: Vec<DecisionTree>,
    /// Per tree, the leaf each observation falls in.
    leaf_of: Vec<Vec<NodeId>>,
    /// Per tree, its contribution to each observation's fit.
    tree_fit: Vec<Vec<f64>>,
    total_fit: Vec<f64>,
    resid: Vec<f64>,
    sigma2: f64,
    lambda: f64,
    prior: TreePrior,
    split_probs: Vec<f64>,
    split_cdf: Vec<f64>,
    alpha: f64,
    rho: f64,
    moves: MoveStats,
    warnings: Vec<String>,
    leaf_stats: Vec<LeafSufficientStats>,
}

impl<'a> Sampler<'a> {
    fn new(data: &'a Dataset, config: &'a FitConfig) -> Self {
        let n = data.n();
        let p = data.p();
        let t = config.n_trees;
        let scale = ResponseScale::new(data.y());
        let y: Vec<f64> = data.y().iter().map(|&v| scale.scale(v)).collect();
        let mean = y.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let sigma_hat = if sd > 0.0 { sd } else { DEGENERATE_SIGMA_HAT };
        let lambda = calibrate_lambda(sigma_hat, config.nu, config.q);
        let sigma_mu = 0.5 / (config.k_leaf * (t as f64).sqrt());
        let split_probs = config
            .split_probs
            .clone()
            .unwrap_or_else(|| vec![1.0 / p as f64; p]);
        let rho = config.dart.rho.unwrap_or(p as f64);
        let lambda0 = config.dart.a / (config.dart.a + config.dart.b);
        let mut s = Self {
            data,
            config,
            grid: CutpointGrid::new(data),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            scale,
            y,
            trees: vec![DecisionTree::new(0.0); t],
            leaf_of: vec![vec![0; n]; t],
            tree_fit: vec![vec![0.0; n]; t],
            total_fit: vec![0.0; n],
            resid: vec![0.0; n],
            sigma2: sigma_hat * sigma_hat,
            lambda,
            prior: TreePrior {
                gamma: config.gamma,
                beta: config.beta,
                sigma_mu2: sigma_mu * sigma_mu,
            },
            split_probs,
            split_cdf: Vec::with_capacity(p),
            alpha: rho * lambda0 / (1.0 - lambda0),
            rho,
            moves: MoveStats::default(),
            warnings: Vec::new(),
            leaf_stats: Vec::new(),
        };
        s.rebuild_cdf();
        s
    }

    fn rebuild_cdf(&mut self) {
        self.split_cdf.clear();
        let mut acc = 0.0;
        for &v in &self.split_probs {
            acc += v;
            self.split_cdf.push(acc);
        }
    }

    fn draw_feature(&mut self) -> usize {
        let total = *self.split_cdf.last().expect("p >= 1");
        let u = self.rng.random::<f64>() * total;
        self.split_cdf
            .partition_point(|&c| c <= u)
            .min(self.split_cdf.len() - 1)
    }

    fn run(mut self) -> Result<FitOutput> {
        let n = self.data.n();
        let p = self.data.p();
        let cfg = self.config;
        let mut trace = PosteriorTrace::new(p, cfg.clone());
        let mut fitted_sum = vec![0.0; n];
        let mut mean_fit_path = Vec::with_capacity(cfg.n_draws);
        let range2 = self.scale.range * self.scale.range;
        let dart = cfg.prior == PriorKind::Dart;

        for iter in 0..cfg.burn_in + cfg.n_draws {
            self.refresh_total_fit();
            for t in 0..cfg.n_trees {
                self.update_tree(t)?;
            }
            let sse: f64 = self
                .y
                .iter()
                .zip(&self.total_fit)
                .map(|(y, f)| (y - f) * (y - f))
                .sum();
            self.sigma2 = sample_sigma2(sse, n, cfg.nu, self.lambda, &mut self.rng);
            if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
                return Err(Error::Numeric(format!(
                    "sigma² draw {} at iteration {iter}",
                    self.sigma2
                )));
            }
            if dart {
                self.update_dart(iter);
            }
            if iter >= cfg.burn_in {
                let mut draw =
                    DrawRecord::from_trees(&self.trees, p, self.sigma2 * range2, cfg.record_mi);
                if dart {
                    draw.split_probs = Some(self.split_probs.clone());
                    draw.alpha = Some(self.alpha);
                }
                trace.push(draw);
                let mut mean = 0.0;
                for (acc, &f) in fitted_sum.iter_mut().zip(&self.total_fit) {
                    let v = self.scale.unscale(f);
                    *acc += v;
                    mean += v;
                }
                mean_fit_path.push(mean / n as f64);
            }
        }

        let kept = cfg.n_draws.max(1) as f64;
        let fitted_mean = fitted_sum.into_iter().map(|v| v / kept).collect();
        let mut trees = self.trees.clone();
        let shift = (0.5 * self.scale.range + self.scale.min) / cfg.n_trees as f64;
        for tree in &mut trees {
            tree.map_leaves(self.scale.range, shift);
        }
        let final_state = EnsembleState {
            trees,
            sigma2: self.sigma2 * range2,
            split_probs: dart.then(|| self.split_probs.clone()),
            alpha: dart.then_some(self.alpha),
        };
        Ok(FitOutput {
            trace,
            final_state,
            fitted_mean,
            mean_fit_path,
            moves: self.moves,
            warnings: self.warnings,
        })
    }

    fn refresh_total_fit(&mut self) {
        self.total_fit.iter_mut().for_each(|v| *v = 0.0);
        for fit in &self.tree_fit {
            for (acc, v) in self.total_fit.iter_mut().zip(fit) {
                *acc += v;
            }
        }
    }

    fn update_dart(&mut self, iter: usize) {
        let p = self.data.p();
        let mut counts = vec![0u32; p];
        for tree in &self.trees {
            for id in tree.internal_nodes() {
                counts[tree.rule(id).expect("internal").feature] += 1;
            }
        }
        self.split_probs = update_split_probs(&counts, self.alpha, &mut self.rng);
        self.rebuild_cdf();
        let h = &self.config.dart;
        let draw = sample_alpha(
            &self.split_probs,
            h.a,
            h.b,
            self.rho,
            h.grid_size,
            self.alpha,
            &mut self.rng,
        );
        if draw.degenerate {
            self.warnings
                .push(format!("alpha grid weights underflowed at iteration {iter}"));
        }
        self.alpha = draw.alpha;
    }

    fn update_tree(&mut self, t: usize) -> Result<()> {
        for i in 0..self.y.len() {
            self.resid[i] = self.y[i] - self.total_fit[i] + self.tree_fit[t][i];
        }
        let mv = MoveKind::from_uniform(self.rng.random());
        self.moves.proposed[mv.index()] += 1;
        let accepted = match mv {
            MoveKind::Birth => self.propose_birth(t)?,
            MoveKind::Death => self.propose_death(t)?,
            MoveKind::Change => self.propose_change(t)?,
        };
        if accepted {
            self.moves.accepted[mv.index()] += 1;
            debug_assert!(self.trees[t].check(Some(&self.grid)).is_ok());
        }
        self.redraw_leaves(t);
        Ok(())
    }

    /// Returns false (and leaves the tree alone) when the drawn feature has
    /// no usable cutpoint at `node`.
    fn draw_rule(&mut self, t: usize, node: NodeId) -> Option<SplitRule> {
        let feature = self.draw_feature();
        let range = available_cutpoints(&self.trees[t], node, feature, &self.grid);
        if range.is_empty() {
            return None;
        }
        let idx = self.rng.random_range(range);
        Some(SplitRule::new(feature, self.grid.values(feature)[idx]))
    }

    fn split_stats(
        &self,
        t: usize,
        nodes: &[NodeId],
        rule: SplitRule,
    ) -> (LeafSufficientStats, LeafSufficientStats) {
        let col = self.data.column(rule.feature);
        let mut left = LeafSufficientStats::default();
        let mut right = LeafSufficientStats::default();
        for (i, &leaf) in self.leaf_of[t].iter().enumerate() {
            if nodes.contains(&leaf) {
                if rule.goes_left(col[i]) {
                    left.push(self.resid[i]);
                } else {
                    right.push(self.resid[i]);
                }
            }
        }
        (left, right)
    }

    fn node_stats(&self, t: usize, node: NodeId) -> LeafSufficientStats {
        let mut s = LeafSufficientStats::default();
        for (i, &leaf) in self.leaf_of[t].iter().enumerate() {
            if leaf == node {
                s.push(self.resid[i]);
            }
        }
        s
    }

    fn accept(&mut self, log_r: f64, what: &str) -> Result<bool> {
        if log_r.is_nan() {
            return Err(Error::Numeric(format!(
                "{what} ratio is NaN (sigma² = {})",
                self.sigma2
            )));
        }
        let u: f64 = 1.0 - self.rng.random::<f64>();
        Ok(u.ln() < log_r)
    }

    fn propose_birth(&mut self, t: usize) -> Result<bool> {
        let leaves = self.trees[t].leaves();
        let leaf = leaves[self.rng.random_range(0..leaves.len())];
        let Some(rule) = self.draw_rule(t, leaf) else {
            return Ok(false);
        };
        let (left, right) = self.split_stats(t, &[leaf], rule);
        if left.n == 0 || right.n == 0 {
            return Ok(false);
        }
        let log_r = birth_log_ratio(&self.trees[t], leaf, &left, &right, self.sigma2, &self.prior);
        let prob = log_r.min(0.0).exp();
        self.moves.birth_accept_prob_sum += prob;
        self.moves.birth_evaluated += 1;
        if !self.accept(log_r, "BIRTH")? {
            return Ok(false);
        }
        let (l, r) = self.trees[t].grow(leaf, rule, 0.0, 0.0, Some(prob));
        let col = self.data.column(rule.feature);
        for (i, slot) in self.leaf_of[t].iter_mut().enumerate() {
            if *slot == leaf {
                *slot = if rule.goes_left(col[i]) { l } else { r };
            }
        }
        Ok(true)
    }

    fn propose_death(&mut self, t: usize) -> Result<bool> {
        if self.trees[t].is_leaf(self.trees[t].root()) {
            return Ok(false);
        }
        let nogs = self.trees[t].nogs();
        let node = nogs[self.rng.random_range(0..nogs.len())];
        let (l, r) = self.trees[t].children(node).expect("nog has children");
        let left = self.node_stats(t, l);
        let right = self.node_stats(t, r);
        let log_r = death_log_ratio(&self.trees[t], node, &left, &right, self.sigma2, &self.prior);
        if !self.accept(log_r, "DEATH")? {
            return Ok(false);
        }
        self.trees[t].prune(node, 0.0);
        for slot in self.leaf_of[t].iter_mut() {
            if *slot == l || *slot == r {
                *slot = node;
            }
        }
        Ok(true)
    }

    fn propose_change(&mut self, t: usize) -> Result<bool> {
        if self.trees[t].is_leaf(self.trees[t].root()) {
            return Ok(false);
        }
        let nogs = self.trees[t].nogs();
        let node = nogs[self.rng.random_range(0..nogs.len())];
        let (l, r) = self.trees[t].children(node).expect("nog has children");
        let Some(rule) = self.draw_rule(t, node) else {
            return Ok(false);
        };
        let old_left = self.node_stats(t, l);
        let old_right = self.node_stats(t, r);
        let (new_left, new_right) = self.split_stats(t, &[l, r], rule);
        if new_left.n == 0 || new_right.n == 0 {
            return Ok(false);
        }
        let log_r = change_log_ratio(
            &old_left,
            &old_right,
            &new_left,
            &new_right,
            self.sigma2,
            self.prior.sigma_mu2,
        );
        if !self.accept(log_r, "CHANGE")? {
            return Ok(false);
        }
        self.trees[t].set_rule(node, rule, Some(log_r.min(0.0).exp()));
        let col = self.data.column(rule.feature);
        for (i, slot) in self.leaf_of[t].iter_mut().enumerate() {
            if *slot == l || *slot == r {
                *slot = if rule.goes_left(col[i]) { l } else { r };
            }
        }
        Ok(true)
    }

    fn redraw_leaves(&mut self, t: usize) {
        let cap = self.trees[t].capacity();
        self.leaf_stats.clear();
        self.leaf_stats.resize(cap, LeafSufficientStats::default());
        for (i, &leaf) in self.leaf_of[t].iter().enumerate() {
            self.leaf_stats[leaf].push(self.resid[i]);
        }
        let mut values = vec![0.0; cap];
        for leaf in self.trees[t].leaves() {
            let v = sample_leaf_value(
                &self.leaf_stats[leaf],
                self.sigma2,
                self.prior.sigma_mu2,
                &mut self.rng,
            );
            self.trees[t].set_leaf_value(leaf, v);
            values[leaf] = v;
        }
        for i in 0..self.y.len() {
            let v = values[self.leaf_of[t][i]];
            self.total_fit[i] += v - self.tree_fit[t][i];
            self.tree_fit[t][i] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let x3: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = x1
            .iter()
            .map(|&a| if a > 0.5 { 2.0 } else { -2.0 } + 0.1 * rng.random_range(-1.0..1.0))
            .collect();
        Dataset::from_columns(y, vec![x1, x2, x3], None).unwrap()
    }

    fn quick(prior: PriorKind, seed: u64) -> FitConfig {
        FitConfig {
            n_trees: 10,
            burn_in: 100,
            n_draws: 100,
            prior,
            seed,
            ..FitConfig::default()
        }
    }

    #[test]
    fn counts_match_tree_structure_and_response_is_recovered() {
        let d = toy(200, 1);
        let out = fit_full(&d, &quick(PriorKind::Bart, 3)).unwrap();
        assert_eq!(out.trace.n_draws(), 100);
        let last = out.trace.count_row(99);
        let internals: usize = out.final_state.trees.iter().map(|t| t.internal_count()).sum();
        assert_eq!(last.iter().sum::<u32>() as usize, internals);
        for tree in &out.final_state.trees {
            tree.check(Some(&CutpointGrid::new(&d))).unwrap();
        }
        // feature 0 drives the response
        let vc: Vec<f64> = (0..3)
            .map(|j| out.trace.count_rows().map(|r| r[j] as f64).sum::<f64>())
            .collect();
        assert!(vc[0] > vc[1] && vc[0] > vc[2], "{vc:?}");
        let rmse = (d
            .y()
            .iter()
            .zip(&out.fitted_mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / 200.0)
            .sqrt();
        assert!(rmse < 0.5, "rmse {rmse}");
        // the unscaled final state reproduces the in-sample fit of the last draw
        let x0 = d.row(0);
        assert!(out.final_state.predict(&x0).is_finite());
    }

    #[test]
    fn deterministic_given_seed() {
        let d = toy(100, 2);
        let a = fit(&d, &quick(PriorKind::Dart, 9)).unwrap();
        let b = fit(&d, &quick(PriorKind::Dart, 9)).unwrap();
        assert_eq!(a.counts(), b.counts());
        assert_eq!(a.sigma2_path(), b.sigma2_path());
        let c = fit(&d, &quick(PriorKind::Dart, 10)).unwrap();
        assert_ne!(a.sigma2_path(), c.sigma2_path());
    }

    #[test]
    fn dart_paths_are_simplices() {
        let d = toy(100, 4);
        let tr = fit(&d, &quick(PriorKind::Dart, 1)).unwrap();
        let alpha = tr.alpha_path().unwrap();
        assert_eq!(alpha.len(), 100);
        for (k, &a) in alpha.iter().enumerate() {
            let s = tr.split_prob_row(k).unwrap();
            assert!(s.iter().all(|&v| v >= 0.0));
            assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(a > 0.0);
        }
    }

    #[test]
    fn degenerate_split_probs_force_the_feature() {
        let d = toy(100, 5);
        let cfg = FitConfig {
            split_probs: Some(vec![0.0, 1.0, 0.0]),
            ..quick(PriorKind::Bart, 2)
        };
        let tr = fit(&d, &cfg).unwrap();
        assert!(tr.count_rows().all(|r| r[0] == 0 && r[2] == 0));
        assert!(tr.count_rows().any(|r| r[1] > 0));
    }

    #[test]
    fn mi_tags_cover_every_interior_node() {
        let d = toy(100, 6);
        let cfg = FitConfig {
            record_mi: true,
            ..quick(PriorKind::Bart, 4)
        };
        let tr = fit(&d, &cfg).unwrap();
        let mi = tr.mi_nodes().unwrap();
        for (k, nodes) in mi.iter().enumerate() {
            let total: u32 = tr.count_row(k).iter().sum();
            assert_eq!(nodes.len(), total as usize);
            assert!(nodes.iter().all(|&(_, p)| (0.0..=1.0).contains(&p)));
        }
    }

    type Skeleton = Vec<(NodeId, Option<(NodeId, NodeId)>, Option<SplitRule>)>;

    fn skeleton(tree: &DecisionTree) -> Skeleton {
        let mut ids = tree.internal_nodes();
        ids.sort_unstable();
        ids.into_iter()
            .map(|id| (id, tree.children(id), tree.rule(id)))
            .collect()
    }

    #[test]
    fn accepted_moves_change_topology_as_labelled() {
        let d = toy(120, 9);
        let cfg = quick(PriorKind::Bart, 3);
        let mut s = Sampler::new(&d, &cfg);
        let mut seen = [0usize; 3];
        for _ in 0..200 {
            s.refresh_total_fit();
            for t in 0..cfg.n_trees {
                let before = skeleton(&s.trees[t]);
                let accepted = s.moves.accepted;
                s.update_tree(t).unwrap();
                let after = skeleton(&s.trees[t]);
                let delta: Vec<u64> = (0..3).map(|m| s.moves.accepted[m] - accepted[m]).collect();
                let (nb, na) = (before.len() as i64, after.len() as i64);
                match delta.iter().position(|&c| c == 1) {
                    None => assert_eq!(before, after),
                    Some(m) => {
                        seen[m] += 1;
                        match MoveKind::ALL[m] {
                            MoveKind::Birth => assert_eq!(na, nb + 1),
                            MoveKind::Death => assert_eq!(na, nb - 1),
                            MoveKind::Change => {
                                let shape = |k: &Skeleton| {
                                    k.iter().map(|e| (e.0, e.1)).collect::<Vec<_>>()
                                };
                                assert_eq!(shape(&before), shape(&after));
                                let changed = before.iter().zip(&after).filter(|(a, b)| a.2 != b.2).count();
                                assert!(changed <= 1);
                            }
                        }
                    }
                }
            }
        }
        assert!(seen.iter().all(|&c| c > 0), "{seen:?}");
    }

    #[test]
    fn invalid_config_rejected() {
        let d = toy(20, 7);
        let cfg = FitConfig {
            q: 1.5,
            ..FitConfig::default()
        };
        assert!(matches!(fit(&d, &cfg), Err(Error::Config(_))));
    }
}
