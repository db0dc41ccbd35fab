use super::hac::{cut_two, hac_average_linkage};
use super::{Diagnostics, SelectionResult};
use crate::error::{Error, Result};
use crate::summaries::{SourceKind, SummaryMatrix};

/// `log1p` then per-column standardization with the sample SD. Constant
/// columns become all zeros.
pub fn standardize(z: &SummaryMatrix) -> Vec<Vec<f64>> {
    let p = z.p();
    let d = z.n_columns();
    let mut out: Vec<Vec<f64>> = z
        .rows
        .iter()
        .map(|r| r.iter().map(|v| v.ln_1p()).collect())
        .collect();
    for c in 0..d {
        let mean = out.iter().map(|r| r[c]).sum::<f64>() / p as f64;
        let var = out.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / (p as f64 - 1.0);
        let sd = var.sqrt();
        for r in &mut out {
            r[c] = if sd > 0.0 { (r[c] - mean) / sd } else { 0.0 };
        }
    }
    out
}

/// Clusters the features into two groups and keeps the high-importance one:
/// larger mean of the first (raw) column, or smaller mean rank for the
/// rank-only source.
pub fn cluster_select(z: &SummaryMatrix) -> Result<SelectionResult> {
    let p = z.p();
    if p < 2 {
        return Err(Error::Config(format!("clustering selection needs p >= 2, got {p}")));
    }
    let labels = cut_two(&hac_average_linkage(&standardize(z))?);
    let first = z.column(0);
    let mut sums = [0.0; 2];
    let mut sizes = [0usize; 2];
    for (&l, v) in labels.iter().zip(&first) {
        sums[l as usize] += v;
        sizes[l as usize] += 1;
    }
    let means = [sums[0] / sizes[0] as f64, sums[1] / sizes[1] as f64];
    let pick: u8 = match z.source {
        SourceKind::VipRank => u8::from(means[1] < means[0]),
        _ => u8::from(means[1] > means[0]),
    };
    let selected = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == pick)
        .map(|(j, _)| j)
        .collect();
    Ok(SelectionResult {
        selected,
        importance: first,
        thresholds: None,
        diagnostics: Diagnostics {
            cluster_means: Some(means.to_vec()),
            cluster_labels: Some(labels),
            equal_cluster_means: Some(means[0] == means[1]),
            ..Diagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::summaries::summary_from_importances;

    #[test]
    fn selects_high_count_cluster() {
        let fits = vec![vec![40.0, 38.0, 0.0, 1.0], vec![44.0, 42.0, 1.0, 0.0]];
        let z = summary_from_importances(&fits, SourceKind::VcMeasure).unwrap();
        assert_eq!(cluster_select(&z).unwrap().selected, vec![0, 1]);
        let scaled: Vec<Vec<f64>> = fits.iter().map(|f| f.iter().map(|v| v * 10.0).collect()).collect();
        let z = summary_from_importances(&scaled, SourceKind::VcMeasure).unwrap();
        assert_eq!(cluster_select(&z).unwrap().selected, vec![0, 1]);
    }

    #[test]
    fn rank_source_prefers_small_ranks() {
        let fits = vec![vec![0.4, 0.35, 0.1, 0.1, 0.05], vec![0.38, 0.4, 0.1, 0.07, 0.05]];
        let z = summary_from_importances(&fits, SourceKind::VipRank).unwrap();
        assert_eq!(cluster_select(&z).unwrap().selected, vec![0, 1]);
    }

    #[test]
    fn identical_rows_split_deterministically() {
        let z = SummaryMatrix {
            source: SourceKind::VcMeasure,
            l_rep: 1,
            rows: vec![vec![1.0, 1.0, 2.0, 2.0]; 3],
        };
        let a = cluster_select(&z).unwrap();
        let b = cluster_select(&z).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.diagnostics.equal_cluster_means, Some(true));
        assert_eq!(a.selected, vec![0, 1]);
    }
}
