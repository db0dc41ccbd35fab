//! End-to-end selection methods: replicate fits, summaries, and the
//! matching selection rule.
//!
//! Seeds: replicate fit `i` uses `seed + i`; permutation `l` uses
//! `seed + 10_000 + l`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FitConfig, PriorKind};
use crate::error::{Error, Result};
use crate::sampler::fit;
use crate::selection::{
    cluster_select, mpm_select, permutation_null, threshold_gmax, threshold_gse, threshold_local,
    SelectionResult,
};
use crate::summaries::{
    metropolis_importance, mpvip, summary_from_importances, vc, vip, ImportanceKind, SourceKind,
    SummaryMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BartVipLocal,
    BartVipGse,
    BartVipGmax,
    BartMiLocal,
    BartVipRank,
    DartMpm,
    BartVcMeasure,
    DartVcMeasure,
    BartVipMeasure,
    DartVipMeasure,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::BartVipLocal,
        Method::BartVipGse,
        Method::BartVipGmax,
        Method::BartMiLocal,
        Method::BartVipRank,
        Method::DartMpm,
        Method::BartVcMeasure,
        Method::DartVcMeasure,
        Method::BartVipMeasure,
        Method::DartVipMeasure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::BartVipLocal => "bart-vip-local",
            Method::BartVipGse => "bart-vip-gse",
            Method::BartVipGmax => "bart-vip-gmax",
            Method::BartMiLocal => "bart-mi-local",
            Method::BartVipRank => "bart-vip-rank",
            Method::DartMpm => "dart-mpm",
            Method::BartVcMeasure => "bart-vc-measure",
            Method::DartVcMeasure => "dart-vc-measure",
            Method::BartVipMeasure => "bart-vip-measure",
            Method::DartVipMeasure => "dart-vip-measure",
        }
    }

    pub fn prior(self) -> PriorKind {
        match self {
            Method::DartMpm | Method::DartVcMeasure | Method::DartVipMeasure => PriorKind::Dart,
            _ => PriorKind::Bart,
        }
    }

    pub fn default_l_rep(self) -> usize {
        match self {
            Method::DartMpm => 1,
            Method::BartVipRank => 20,
            _ => 10,
        }
    }

    pub fn is_permutation(self) -> bool {
        matches!(
            self,
            Method::BartVipLocal | Method::BartVipGse | Method::BartVipGmax | Method::BartMiLocal
        )
    }

    pub fn needs_mi(self) -> bool {
        self == Method::BartMiLocal
    }

    /// Clustering source, for the clustering-based methods.
    pub fn summary_source(self) -> Option<SourceKind> {
        match self {
            Method::BartVcMeasure | Method::DartVcMeasure => Some(SourceKind::VcMeasure),
            Method::BartVipMeasure | Method::DartVipMeasure => Some(SourceKind::VipMeasure),
            Method::BartVipRank => Some(SourceKind::VipRank),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if matches!(s, "bart-mi-gse" | "bart-mi-gmax") {
            return Err(Error::Usage(format!(
                "'{s}': MI importance supports only the local permutation criterion"
            )));
        }
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Usage(format!("unknown method '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub fit: FitConfig,
    pub l_rep: usize,
    pub l_perm: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        let fit = FitConfig {
            prior: method.prior(),
            record_mi: method.needs_mi(),
            ..FitConfig::default()
        };
        Self {
            method,
            fit,
            l_rep: method.default_l_rep(),
            l_perm: 50,
            alpha: 0.05,
            seed: 0,
        }
    }

    /// Forces the fit settings the method implies (prior, MI logging).
    pub fn close(mut self) -> Self {
        self.fit.prior = self.method.prior();
        self.fit.record_mi |= self.method.needs_mi();
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.l_rep == 0 {
            return Err(Error::Usage("L_rep must be at least 1".into()));
        }
        if self.method.is_permutation() && self.l_perm == 0 {
            return Err(Error::Usage(format!(
                "{} needs L_perm >= 1",
                self.method
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Usage(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.method.summary_source().is_some() && p < 2 {
            return Err(Error::Usage(format!("{} needs at least 2 features", self.method)));
        }
        self.fit.validate(p)
    }

    pub fn fit_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}

/// Importance vectors of one replicate fit; the trace itself is dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub seed: u64,
    pub vip: Vec<f64>,
    pub vc: Vec<f64>,
    pub mpvip: Vec<f64>,
    pub mi: Option<Vec<f64>>,
    pub seconds: f64,
}

pub fn summarize_fit(data: &Dataset, config: &FitConfig) -> Result<FitSummary> {
    let start = Instant::now();
    let trace = fit(data, config)?;
    let mi = if config.record_mi {
        Some(metropolis_importance(&trace)?.values)
    } else {
        None
    };
    Ok(FitSummary {
        seed: config.seed,
        vip: vip(&trace).values,
        vc: vc(&trace).values,
        mpvip: mpvip(&trace).values,
        mi,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Fits replicates `0..count` on the original data, concurrently.
pub fn fit_replicates(data: &Dataset, run: &RunConfig, count: usize) -> Result<Vec<FitSummary>> {
    (0..count)
        .into_par_iter()
        .map(|i| summarize_fit(data, &run.fit.with_seed(run.fit_seed(i))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutput {
    pub selection: SelectionResult,
    pub summary: Option<SummaryMatrix>,
    pub null: Option<Vec<Vec<f64>>>,
    pub fit_seeds: Vec<u64>,
    pub permutation_seeds: Vec<u64>,
}

fn mean_columns(rows: &[&Vec<f64>]) -> Vec<f64> {
    let p = rows[0].len();
    (0..p)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect()
}

/// Applies the method's selection rule to the first `l_rep` replicate fits.
/// Permutation methods additionally fit `l_perm` permuted-response models.
pub fn select_from_fits(data: &Dataset, run: &RunConfig, fits: &[FitSummary]) -> Result<MethodOutput> {
    let fits = &fits[..run.l_rep.min(fits.len())];
    if fits.is_empty() {
        return Err(Error::Usage("L_rep must be at least 1".into()));
    }
    let fit_seeds = fits.iter().map(|f| f.seed).collect();
    let m = run.method;
    if let Some(source) = m.summary_source() {
        let per_fit: Vec<Vec<f64>> = fits
            .iter()
            .map(|f| match source {
                SourceKind::VcMeasure => f.vc.clone(),
                _ => f.vip.clone(),
            })
            .collect();
        let z = summary_from_importances(&per_fit, source)?;
        let selection = cluster_select(&z)?;
        return Ok(MethodOutput {
            selection,
            summary: Some(z),
            null: None,
            fit_seeds,
            permutation_seeds: vec![],
        });
    }
    if m == Method::DartMpm {
        let rows: Vec<&Vec<f64>> = fits.iter().map(|f| &f.mpvip).collect();
        return Ok(MethodOutput {
            selection: mpm_select(&mean_columns(&rows)),
            summary: None,
            null: None,
            fit_seeds,
            permutation_seeds: vec![],
        });
    }
    let kind = if m.needs_mi() {
        ImportanceKind::Mi
    } else {
        ImportanceKind::Vip
    };
    let rows: Vec<&Vec<f64>> = match kind {
        ImportanceKind::Mi => fits
            .iter()
            .map(|f| f.mi.as_ref().ok_or(Error::MiUnavailable))
            .collect::<Result<_>>()?,
        _ => fits.iter().map(|f| &f.vip).collect(),
    };
    let observed = mean_columns(&rows);
    let null = permutation_null(data, kind, run.l_perm, &run.fit, run.seed)?;
    let selection = match m {
        Method::BartVipGse => threshold_gse(&observed, &null, run.alpha)?,
        Method::BartVipGmax => threshold_gmax(&observed, &null, run.alpha)?,
        _ => threshold_local(&observed, &null, run.alpha)?,
    };
    Ok(MethodOutput {
        selection,
        summary: None,
        null: Some(null),
        fit_seeds,
        permutation_seeds: (0..run.l_perm)
            .map(|l| crate::selection::permutation_seed(run.seed, l))
            .collect(),
    })
}

pub fn run_method(data: &Dataset, run: &RunConfig) -> Result<MethodOutput> {
    let run = run.clone().close();
    run.validate(data.p())?;
    let fits = fit_replicates(data, &run, run.l_rep)?;
    select_from_fits(data, &run, &fits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!(matches!("bart-gse".parse::<Method>(), Err(Error::Usage(_))));
        assert!(matches!("bart-mi-gse".parse::<Method>(), Err(Error::Usage(_))));
    }

    #[test]
    fn defaults_and_closure() {
        assert_eq!(RunConfig::new(Method::DartMpm).l_rep, 1);
        assert_eq!(RunConfig::new(Method::BartVipRank).l_rep, 20);
        let r = RunConfig::new(Method::BartVipGse);
        assert_eq!((r.l_rep, r.l_perm, r.alpha), (10, 50, 0.05));
        let mut r = RunConfig::new(Method::BartVcMeasure);
        r.method = Method::BartMiLocal;
        let r = r.close();
        assert!(r.fit.record_mi);
        assert_eq!(r.fit.prior, PriorKind::Bart);
    }

    #[test]
    fn usage_errors() {
        let mut r = RunConfig::new(Method::BartVipGse);
        r.l_perm = 0;
        assert!(r.validate(5).unwrap_err().is_usage());
        let mut r = RunConfig::new(Method::DartVcMeasure);
        r.l_rep = 0;
        assert!(r.validate(5).unwrap_err().is_usage());
    }
}
