//! Results documents (JSON) and per-feature importance tables (CSV).
//!
//! Feature positions in these files are 1-based.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmark::{compute_metrics, MetricsRecord};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pipeline::{MethodOutput, RunConfig};
use crate::selection::Diagnostics;
use crate::summaries::SourceKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub index: usize,
    pub name: String,
    pub importance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Clustering features for this feature, when the method clusters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Vec<f64>>,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub schema_version: u32,
    pub config: RunConfig,
    pub n: usize,
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_source: Option<SourceKind>,
    pub features: Vec<FeatureEntry>,
    pub selected: Vec<SelectedFeature>,
    pub no_selection: bool,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsRecord>,
    pub seconds: f64,
    pub fit_seeds: Vec<u64>,
    pub permutation_seeds: Vec<u64>,
}

impl ResultsDocument {
    pub fn new(data: &Dataset, config: &RunConfig, out: &MethodOutput, seconds: f64) -> Self {
        let sel = &out.selection;
        let names = data.feature_names();
        let mut chosen = vec![false; data.p()];
        for &j in &sel.selected {
            chosen[j] = true;
        }
        let features = (0..data.p())
            .map(|j| FeatureEntry {
                index: j + 1,
                name: names[j].clone(),
                importance: sel.importance[j],
                threshold: sel.thresholds.as_ref().map(|t| t[j]),
                summary: out.summary.as_ref().map(|z| z.rows[j].clone()),
                selected: chosen[j],
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            n: data.n(),
            p: data.p(),
            summary_source: out.summary.as_ref().map(|z| z.source),
            features,
            selected: sel
                .selected
                .iter()
                .map(|&j| SelectedFeature {
                    index: j + 1,
                    name: names[j].clone(),
                })
                .collect(),
            no_selection: sel.selected.is_empty(),
            diagnostics: sel.diagnostics.clone(),
            metrics: data
                .truth()
                .map(|t| compute_metrics(&sel.selected, t, data.p())),
            seconds,
            fit_seeds: out.fit_seeds.clone(),
            permutation_seeds: out.permutation_seeds.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Flat table: one row per feature in feature order. Contains no
    /// timing, so it is byte-identical across reruns with the same seed.
    pub fn importance_csv(&self) -> Result<String> {
        let width = self
            .features
            .iter()
            .filter_map(|f| f.summary.as_ref().map(Vec::len))
            .max()
            .unwrap_or(0);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["index", "name", "importance", "threshold", "selected"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((1..=width).map(|c| format!("z{c}")));
        w.write_record(&header)?;
        for f in &self.features {
            let mut rec = vec![
                f.index.to_string(),
                f.name.clone(),
                f.importance.to_string(),
                f.threshold.map(|t| t.to_string()).unwrap_or_default(),
                u8::from(f.selected).to_string(),
            ];
            if let Some(z) = &f.summary {
                rec.extend(z.iter().map(|v| v.to_string()));
            }
            rec.resize(header.len(), String::new());
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}
