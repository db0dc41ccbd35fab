use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    /// Split features drawn from a fixed probability vector (uniform unless
    /// overridden).
    Bart,
    /// Split probabilities get a sparse Dirichlet prior with a Beta
    /// hyperprior on its concentration.
    Dart,
}

/// Hyperparameters of the Dirichlet split prior:
/// `alpha / (alpha + rho) ~ Beta(a, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DartHyper {
    pub a: f64,
    pub b: f64,
    /// `None` means `rho = p`.
    pub rho: Option<f64>,
    pub grid_size: usize,
}

impl Default for DartHyper {
    fn default() -> Self {
        Self {
            a: 0.5,
            b: 1.0,
            rho: None,
            grid_size: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub n_trees: usize,
    pub burn_in: usize,
    pub n_draws: usize,
    /// Base split probability of the depth prior.
    pub gamma: f64,
    /// Depth penalty exponent of the depth prior.
    pub beta: f64,
    /// Leaf prior scale: `sigma_mu = 0.5 / (k_leaf * sqrt(T))` on the
    /// scaled response.
    pub k_leaf: f64,
    /// Degrees of freedom of the scaled-inverse-chi-square prior on sigma².
    pub nu: f64,
    /// Prior quantile: `P(sigma < sd(y_scaled)) = q`.
    pub q: f64,
    pub prior: PriorKind,
    pub dart: DartHyper,
    /// Fixed split-feature probabilities under the BART prior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_probs: Option<Vec<f64>>,
    /// Tag internal nodes with move acceptance probabilities and keep them
    /// in the trace.
    pub record_mi: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_trees: 20,
            burn_in: 5000,
            n_draws: 5000,
            gamma: 0.95,
            beta: 2.0,
            k_leaf: 2.0,
            nu: 3.0,
            q: 0.9,
            prior: PriorKind::Bart,
            dart: DartHyper::default(),
            split_probs: None,
            record_mi: false,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn dart() -> Self {
        Self {
            prior: PriorKind::Dart,
            ..Self::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_trees == 0 {
            return bad("number of trees must be >= 1".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0,1), got {}", self.gamma));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if !(self.k_leaf > 0.0 && self.k_leaf.is_finite()) {
            return bad(format!("k_leaf must be > 0, got {}", self.k_leaf));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be > 0, got {}", self.nu));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q must lie in (0,1), got {}", self.q));
        }
        let d = &self.dart;
        if !(d.a > 0.0 && d.b > 0.0) || d.rho.is_some_and(|r| r.is_nan() || r <= 0.0) {
            return bad("dart hyperparameters a, b, rho must be > 0".into());
        }
        if d.grid_size == 0 {
            return bad("alpha grid must have at least one point".into());
        }
        if let Some(s) = &self.split_probs {
            if s.len() != p {
                return bad(format!("split_probs has length {}, p = {p}", s.len()));
            }
            let total: f64 = s.iter().sum();
            if s.iter().any(|v| v.is_nan() || *v < 0.0) || (total - 1.0).abs() > 1e-9 {
                return bad("split_probs must be a probability vector".into());
            }
        }
        Ok(())
    }
}
