use std::ops::Range;

use crate::error::{Error, Result};

/// Response vector plus an `n × p` feature matrix stored column-major.
///
/// Feature and truth indices are 0-based throughout the library; the
/// results documents written by the CLI report 1-based positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<f64>,
    columns: Vec<Vec<f64>>,
    feature_names: Vec<String>,
    truth: Option<Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset from a row-major numeric table. This is the
    /// validation entry point used by CSV ingestion.
    pub fn from_rows(y: Vec<f64>, rows: &[Vec<f64>], names: Option<Vec<String>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyData("table has no rows".into()));
        }
        let p = rows[0].len();
        let mut columns = vec![Vec::with_capacity(rows.len()); p];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Dimension(format!(
                    "row {} has {} entries, expected {p}",
                    i + 1,
                    row.len()
                )));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(y, columns, names)
    }

    pub fn from_columns(
        y: Vec<f64>,
        columns: Vec<Vec<f64>>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::EmptyData("n = 0".into()));
        }
        if columns.is_empty() {
            return Err(Error::EmptyData("p = 0".into()));
        }
        let feature_names = match names {
            Some(names) => {
                if names.len() != columns.len() {
                    return Err(Error::Dimension(format!(
                        "{} feature names for {} columns",
                        names.len(),
                        columns.len()
                    )));
                }
                names
            }
            None => (1..=columns.len()).map(|j| format!("x{j}")).collect(),
        };
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: row + 1,
                column: "y".into(),
            });
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::Dimension(format!(
                    "column {} has {} rows, response has {n}",
                    feature_names[j],
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column: feature_names[j].clone(),
                });
            }
        }
        Ok(Self {
            y,
            columns,
            feature_names,
            truth: None,
        })
    }

    /// Attaches the ground-truth relevant set (0-based indices).
    pub fn with_truth(mut self, truth: impl IntoIterator<Item = usize>) -> Result<Self> {
        let p = self.p();
        let mut set: Vec<usize> = truth.into_iter().collect();
        if let Some(&bad) = set.iter().find(|&&j| j >= p) {
            return Err(Error::TruthOutOfRange { index: bad, p });
        }
        set.sort_unstable();
        set.dedup();
        self.truth = Some(set);
        Ok(self)
    }

    /// Same features, different response. Used for permutation nulls.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Dimension(format!(
                "response length {} != n = {}",
                y.len(),
                self.n()
            )));
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: row + 1,
                column: "y".into(),
            });
        }
        Ok(Self {
            y,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn truth(&self) -> Option<&[usize]> {
        self.truth.as_deref()
    }
}

/// Candidate split values: the sorted distinct observed values of each
/// feature.
#[derive(Debug, Clone, PartialEq)]
pub struct CutpointGrid {
    values: Vec<Vec<f64>>,
}

impl CutpointGrid {
    pub fn new(data: &Dataset) -> Self {
        let values = (0..data.p())
            .map(|j| {
                let mut v = data.column(j).to_vec();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        Self { values }
    }

    pub fn p(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self, feature: usize) -> &[f64] {
        &self.values[feature]
    }

    /// Index range of grid values usable as a cutpoint `c` for a node whose
    /// region on `feature` is `(lower, upper]`. A usable `c` satisfies
    /// `lower < c < upper` and leaves at least one grid value above it, so
    /// neither side of the rule is empty under the prior.
    pub fn available(&self, feature: usize, lower: f64, upper: f64) -> Range<usize> {
        let grid = &self.values[feature];
        let Some(&max) = grid.last() else {
            return 0..0;
        };
        let upper = upper.min(max);
        let start = grid.partition_point(|&v| v <= lower);
        let end = grid.partition_point(|&v| v < upper);
        start..end.max(start)
    }

    pub fn contains(&self, feature: usize, value: f64) -> bool {
        self.values[feature]
            .binary_search_by(|v| v.total_cmp(&value))
            .is_ok()
    }
}
