//! Variable-importance summaries of posterior traces.

use serde::{Deserialize, Serialize};

use crate::data::PosteriorTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImportanceKind {
    Vip,
    Vc,
    Mpvip,
    Mi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceVector {
    pub kind: ImportanceKind,
    pub values: Vec<f64>,
}

impl ImportanceVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Variable inclusion proportion: the per-draw share of splitting rules that
/// use each feature, averaged over draws. Empty draws contribute zero.
pub fn vip(trace: &PosteriorTrace) -> ImportanceVector {
    let p = trace.n_features();
    let mut out = vec![0.0; p];
    for row in trace.count_rows() {
        let total: u32 = row.iter().sum();
        if total == 0 {
            continue;
        }
        for (o, &c) in out.iter_mut().zip(row) {
            *o += c as f64 / total as f64;
        }
    }
    average(&mut out, trace.n_draws());
    ImportanceVector {
        kind: ImportanceKind::Vip,
        values: out,
    }
}

/// Variable count: mean number of splitting rules per feature.
pub fn vc(trace: &PosteriorTrace) -> ImportanceVector {
    let mut out = vec![0.0; trace.n_features()];
    for row in trace.count_rows() {
        for (o, &c) in out.iter_mut().zip(row) {
            *o += c as f64;
        }
    }
    average(&mut out, trace.n_draws());
    ImportanceVector {
        kind: ImportanceKind::Vc,
        values: out,
    }
}

/// Marginal posterior inclusion probability: fraction of draws splitting on
/// each feature at least once.
pub fn mpvip(trace: &PosteriorTrace) -> ImportanceVector {
    let mut out = vec![0.0; trace.n_features()];
    for row in trace.count_rows() {
        for (o, &c) in out.iter_mut().zip(row) {
            if c > 0 {
                *o += 1.0;
            }
        }
    }
    average(&mut out, trace.n_draws());
    ImportanceVector {
        kind: ImportanceKind::Mpvip,
        values: out,
    }
}

/// Metropolis importance from the per-node acceptance tags.
pub fn metropolis_importance(trace: &PosteriorTrace) -> Result<ImportanceVector> {
    let log = trace.mi_nodes().ok_or(Error::MiUnavailable)?;
    let p = trace.n_features();
    let mut out = vec![0.0; p];
    let mut sum = vec![0.0; p];
    let mut count = vec![0u32; p];
    for nodes in log {
        sum.iter_mut().for_each(|v| *v = 0.0);
        count.iter_mut().for_each(|v| *v = 0);
        for &(j, prob) in nodes {
            sum[j as usize] += prob;
            count[j as usize] += 1;
        }
        let u: Vec<f64> = sum
            .iter()
            .zip(&count)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        let total: f64 = u.iter().sum();
        if total > 0.0 {
            for (o, v) in out.iter_mut().zip(&u) {
                *o += v / total;
            }
        }
    }
    average(&mut out, log.len());
    Ok(ImportanceVector {
        kind: ImportanceKind::Mi,
        values: out,
    })
}

fn average(v: &mut [f64], k: usize) {
    if k > 0 {
        for x in v {
            *x /= k as f64;
        }
    }
}

/// Descending midranks: the largest value gets rank 1, ties share the
/// average of the positions they span.
pub fn rank_descending(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mid;
        }
        start = end;
    }
    ranks
}

/// Sample quantile by linear interpolation between order statistics
/// (`h = (n - 1) q`, zero-based). Panics on empty input.
pub fn quantile_type7(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    VcMeasure,
    VipMeasure,
    VipRank,
}

/// Per-feature clustering features built from replicate fits.
///
/// For the count and proportion sources each row is
/// `(mean, 25th percentile, mean rank, 75th percentile of rank)`;
/// for `VipRank` each row holds only the mean VIP rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryMatrix {
    pub source: SourceKind,
    pub l_rep: usize,
    pub rows: Vec<Vec<f64>>,
}

impl SummaryMatrix {
    pub fn p(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[c]).collect()
    }
}

/// Builds the summary matrix from per-fit importance vectors (VC or VIP,
/// matching `source`).
pub fn summary_from_importances(per_fit: &[Vec<f64>], source: SourceKind) -> Result<SummaryMatrix> {
    let first = per_fit
        .first()
        .ok_or_else(|| Error::Config("at least one replicate fit is required".into()))?;
    let p = first.len();
    if let Some(bad) = per_fit.iter().find(|v| v.len() != p) {
        return Err(Error::Dimension(format!(
            "replicate fits disagree on p ({} vs {})",
            p,
            bad.len()
        )));
    }
    let l = per_fit.len();
    let ranks: Vec<Vec<f64>> = per_fit.iter().map(|v| rank_descending(v)).collect();
    let rows = (0..p)
        .map(|j| {
            let mut vals: Vec<f64> = per_fit.iter().map(|v| v[j]).collect();
            let mut rk: Vec<f64> = ranks.iter().map(|r| r[j]).collect();
            vals.sort_by(f64::total_cmp);
            rk.sort_by(f64::total_cmp);
            let mean_rank = rk.iter().sum::<f64>() / l as f64;
            match source {
                SourceKind::VipRank => vec![mean_rank],
                _ => vec![
                    vals.iter().sum::<f64>() / l as f64,
                    quantile_sorted(&vals, 0.25),
                    mean_rank,
                    quantile_sorted(&rk, 0.75),
                ],
            }
        })
        .collect();
    Ok(SummaryMatrix {
        source,
        l_rep: l,
        rows,
    })
}

pub fn build_summary_matrix(traces: &[PosteriorTrace], source: SourceKind) -> Result<SummaryMatrix> {
    let per_fit: Vec<Vec<f64>> = traces
        .iter()
        .map(|t| match source {
            SourceKind::VcMeasure => vc(t).values,
            SourceKind::VipMeasure | SourceKind::VipRank => vip(t).values,
        })
        .collect();
    summary_from_importances(&per_fit, source)
}
