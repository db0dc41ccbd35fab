use serde::{Deserialize, Serialize};

/// Selection accuracy against a known relevant set. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub f1: f64,
    pub no_selection: bool,
}

/// TPR is recall, `tp / (tp + fn)`. An empty selection scores zero on all
/// three rates.
pub fn compute_metrics(selected: &[usize], truth: &[usize], p: usize) -> MetricsRecord {
    let mut is_true = vec![false; p];
    for &j in truth {
        is_true[j] = true;
    }
    let mut chosen = vec![false; p];
    for &j in selected {
        chosen[j] = true;
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for j in 0..p {
        match (chosen[j], is_true[j]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let no_selection = tp + fp == 0;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (tpr, fpr, f1) = if no_selection {
        (0.0, 0.0, 0.0)
    } else {
        (
            ratio(tp, tp + fn_),
            ratio(fp, fp + tn),
            ratio(2 * tp, 2 * tp + fp + fn_),
        )
    };
    MetricsRecord {
        tp,
        fp,
        fn_,
        tn,
        tpr,
        fpr,
        f1,
        no_selection,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture() {
        let m = compute_metrics(&[0, 1, 2], &[0, 1], 102);
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (2, 1, 0, 99));
        assert_eq!((m.tpr, m.fpr, m.f1), (1.0, 0.01, 0.8));
        assert!(!m.no_selection);
    }

    #[test]
    fn perfect_and_empty() {
        let m = compute_metrics(&[0, 1], &[0, 1], 5);
        assert_eq!((m.tpr, m.fpr, m.f1), (1.0, 0.0, 1.0));
        let m = compute_metrics(&[], &[0, 1], 5);
        assert_eq!((m.tpr, m.fpr, m.f1), (0.0, 0.0, 0.0));
        assert!(m.no_selection);
        assert_eq!(m.fn_ + m.tp, 2);
    }
}
