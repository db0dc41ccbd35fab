//! Selection rules turning importance summaries into feature sets.

mod cluster;
pub mod hac;
mod permutation;

use serde::{Deserialize, Serialize};

pub use cluster::{cluster_select, standardize};
pub use hac::{cut_two, hac_average_linkage, Dendrogram, Merge};
pub use permutation::{
    gse_multiplier, null_moments, permutation_null, permutation_seed, permuted_response,
    threshold_gmax, threshold_gse, threshold_local, PERMUTATION_SEED_OFFSET,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_labels: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equal_cluster_means: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_threshold: Option<f64>,
}

/// Output of a selection rule. Indices are 0-based; an empty `selected` is
/// a valid no-selection outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: Vec<usize>,
    pub importance: Vec<f64>,
    /// Per-feature cutoffs, for threshold rules.
    pub thresholds: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

/// Median probability model: features with inclusion probability at least
/// one half.
pub fn mpm_select(pi_hat: &[f64]) -> SelectionResult {
    SelectionResult {
        selected: (0..pi_hat.len()).filter(|&j| pi_hat[j] >= 0.5).collect(),
        importance: pi_hat.to_vec(),
        thresholds: Some(vec![0.5; pi_hat.len()]),
        diagnostics: Diagnostics::default(),
    }
}
