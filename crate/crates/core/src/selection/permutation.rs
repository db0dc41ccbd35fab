//! Permutation nulls and the Local / G.SE / G.Max thresholds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Diagnostics, SelectionResult};
use crate::data::{Dataset, FitConfig};
use crate::error::{Error, Result};
use crate::sampler::fit;
use crate::summaries::{metropolis_importance, quantile_sorted, vip, ImportanceKind};

/// Offset separating permutation seeds from replicate-fit seeds.
pub const PERMUTATION_SEED_OFFSET: u64 = 10_000;

pub fn permutation_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(PERMUTATION_SEED_OFFSET)
        .wrapping_add(index as u64)
}

/// The `index`-th permuted response. The shuffle uses its own stream of the
/// permutation seed so it never shares draws with the fit.
pub fn permuted_response(y: &[f64], seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(permutation_seed(seed, index));
    rng.set_stream(1);
    let mut out = y.to_vec();
    out.shuffle(&mut rng);
    out
}

/// `l_perm × p` matrix of importances from fits on permuted responses.
pub fn permutation_null(
    data: &Dataset,
    kind: ImportanceKind,
    l_perm: usize,
    config: &FitConfig,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if l_perm == 0 {
        return Err(Error::Usage("permutation methods need L_perm >= 1".into()));
    }
    if !matches!(kind, ImportanceKind::Vip | ImportanceKind::Mi) {
        return Err(Error::Usage(format!(
            "permutation nulls support VIP or MI, not {kind:?}"
        )));
    }
    (0..l_perm)
        .into_par_iter()
        .map(|l| {
            let permuted = data.with_response(permuted_response(data.y(), seed, l))?;
            let mut cfg = config.with_seed(permutation_seed(seed, l));
            cfg.record_mi |= kind == ImportanceKind::Mi;
            let trace = fit(&permuted, &cfg)?;
            Ok(match kind {
                ImportanceKind::Mi => metropolis_importance(&trace)?.values,
                _ => vip(&trace).values,
            })
        })
        .collect::<Vec<Result<Vec<f64>>>>()
        .into_iter()
        .enumerate()
        .map(|(l, r)| {
            r.map_err(|e| Error::Permutation {
                index: l,
                source: Box::new(e),
            })
        })
        .collect()
}

fn check_shapes(observed: &[f64], null: &[Vec<f64>], alpha: f64) -> Result<()> {
    if null.is_empty() {
        return Err(Error::Config("empty null matrix".into()));
    }
    if let Some(row) = null.iter().find(|r| r.len() != observed.len()) {
        return Err(Error::Dimension(format!(
            "null row has {} columns, observed has {}",
            row.len(),
            observed.len()
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn sorted_column(null: &[Vec<f64>], j: usize) -> Vec<f64> {
    let mut col: Vec<f64> = null.iter().map(|r| r[j]).collect();
    col.sort_by(f64::total_cmp);
    col
}

fn select_by(observed: &[f64], thresholds: &[f64]) -> Vec<usize> {
    observed
        .iter()
        .zip(thresholds)
        .enumerate()
        .filter(|(_, (q, t))| q >= t)
        .map(|(j, _)| j)
        .collect()
}

/// Per-feature threshold at the `1 - alpha` quantile of that feature's null.
pub fn threshold_local(observed: &[f64], null: &[Vec<f64>], alpha: f64) -> Result<SelectionResult> {
    check_shapes(observed, null, alpha)?;
    let thresholds: Vec<f64> = (0..observed.len())
        .map(|j| quantile_sorted(&sorted_column(null, j), 1.0 - alpha))
        .collect();
    Ok(SelectionResult {
        selected: select_by(observed, &thresholds),
        importance: observed.to_vec(),
        thresholds: Some(thresholds),
        diagnostics: Diagnostics::default(),
    })
}

/// Single threshold at the `1 - alpha` quantile of per-permutation maxima.
pub fn threshold_gmax(observed: &[f64], null: &[Vec<f64>], alpha: f64) -> Result<SelectionResult> {
    check_shapes(observed, null, alpha)?;
    let mut maxima: Vec<f64> = null
        .iter()
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    maxima.sort_by(f64::total_cmp);
    let t = quantile_sorted(&maxima, 1.0 - alpha);
    let thresholds = vec![t; observed.len()];
    Ok(SelectionResult {
        selected: select_by(observed, &thresholds),
        importance: observed.to_vec(),
        thresholds: Some(thresholds),
        diagnostics: Diagnostics {
            global_threshold: Some(t),
            ..Diagnostics::default()
        },
    })
}

/// Per-column mean and sample SD of the null (SD is 0 for a single row).
pub fn null_moments(null: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let l = null.len() as f64;
    let p = null[0].len();
    // shifted by the first row so a constant column has exactly its value as mean
    let mean: Vec<f64> = (0..p)
        .map(|j| null[0][j] + null.iter().map(|r| r[j] - null[0][j]).sum::<f64>() / l)
        .collect();
    let sd = (0..p)
        .map(|j| {
            if null.len() < 2 {
                return 0.0;
            }
            let ss: f64 = null.iter().map(|r| (r[j] - mean[j]).powi(2)).sum();
            (ss / (l - 1.0)).sqrt()
        })
        .collect();
    (mean, sd)
}

/// Smallest `C >= 0` such that every non-constant column has more than a
/// `1 - alpha` fraction of its null at or below `mean + C * sd`. Coverage
/// only changes at standardized null values, so scanning those (and 0) in
/// increasing order finds the infimum exactly.
pub fn gse_multiplier(null: &[Vec<f64>], alpha: f64) -> f64 {
    let (mean, sd) = null_moments(null);
    let l = null.len();
    let z: Vec<Vec<f64>> = (0..mean.len())
        .filter(|&j| sd[j] > 0.0)
        .map(|j| {
            let mut c: Vec<f64> = null.iter().map(|r| (r[j] - mean[j]) / sd[j]).collect();
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    let covered = |c: f64| {
        z.iter().all(|col| {
            let k = col.partition_point(|&v| v <= c);
            k as f64 / l as f64 > 1.0 - alpha
        })
    };
    let mut candidates: Vec<f64> = z.iter().flatten().copied().filter(|&v| v > 0.0).collect();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates
        .into_iter()
        .find(|&c| covered(c))
        .expect("the largest standardized null value covers every column")
}

pub fn threshold_gse(observed: &[f64], null: &[Vec<f64>], alpha: f64) -> Result<SelectionResult> {
    check_shapes(observed, null, alpha)?;
    let (mean, sd) = null_moments(null);
    let c_star = gse_multiplier(null, alpha);
    let thresholds: Vec<f64> = mean.iter().zip(&sd).map(|(m, s)| m + c_star * s).collect();
    Ok(SelectionResult {
        selected: select_by(observed, &thresholds),
        importance: observed.to_vec(),
        thresholds: Some(thresholds),
        diagnostics: Diagnostics {
            c_star: Some(c_star),
            ..Diagnostics::default()
        },
    })
}
