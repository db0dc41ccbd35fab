//! Experiment grids: scenario expansion, concurrent execution with the
//! replicate-prefix protocol, and aggregation.
//!
//! Replicate `r` of a scenario uses seed `settings.seed + 100_000 * r` for
//! data generation and as the base seed of every method run on that data,
//! so all methods see the same datasets.

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::generate::{generate_dataset, lookup, EquationSpec, Snr};
use super::metrics::compute_metrics;
use crate::data::FitConfig;
use crate::error::{Error, Result};
use crate::pipeline::{fit_replicates, select_from_fits, Method, RunConfig};

pub const REPLICATE_SEED_STRIDE: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    pub trees: usize,
    pub burn_in: usize,
    pub draws: usize,
    pub l_perm: usize,
    pub alpha: f64,
    pub seed: u64,
    pub replicates: usize,
}

impl Default for GridSettings {
    fn default() -> Self {
        let fit = FitConfig::default();
        Self {
            trees: fit.n_trees,
            burn_in: fit.burn_in,
            draws: fit.n_draws,
            l_perm: 50,
            alpha: 0.05,
            seed: 0,
            replicates: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// One `[[scenario]]` block of a grid file. The equation is either a
/// registry id or an `expression` with explicit `ranges`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub equation: Option<String>,
    #[serde(default)]
    pub expression: Option<String>,
    #[serde(default)]
    pub ranges: Option<Vec<[f64; 2]>>,
    pub n: OneOrMany<usize>,
    pub snr: OneOrMany<Snr>,
    #[serde(default = "default_copies")]
    pub s: usize,
    pub methods: Vec<Method>,
    /// Replicate-fit counts evaluated as prefixes of one set of fits.
    #[serde(default)]
    pub l_rep: Option<Vec<usize>>,
    #[serde(default)]
    pub replicates: Option<usize>,
}

fn default_copies() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    #[serde(default)]
    pub settings: GridSettings,
    pub scenario: Vec<ScenarioSpec>,
}

/// One unit of work: a dataset replicate and a method, evaluated at one or
/// more `L_rep` prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridUnit {
    pub index: usize,
    pub equation: EquationSpec,
    pub n: usize,
    pub snr: Snr,
    pub s: usize,
    pub method: Method,
    pub l_reps: Vec<usize>,
    pub replicate: usize,
    pub seed: u64,
    pub run: RunConfig,
}

impl GridUnit {
    pub fn row_key(&self, l_rep: usize) -> String {
        row_key(&self.equation.id, self.n, &self.snr.to_string(), self.s, self.method.name(), l_rep, self.replicate, self.seed)
    }
}

#[allow(clippy::too_many_arguments)]
fn row_key(eq: &str, n: usize, snr: &str, s: usize, method: &str, l_rep: usize, rep: usize, seed: u64) -> String {
    format!("{eq}|{n}|{snr}|{s}|{method}|{l_rep}|{rep}|{seed}")
}

fn scenario_equation(sc: &ScenarioSpec) -> Result<EquationSpec> {
    match (&sc.equation, &sc.expression) {
        (Some(id), None) => lookup(id).ok_or_else(|| Error::Config(format!("unknown equation id '{id}'"))),
        (id, Some(src)) => {
            let ranges = sc
                .ranges
                .as_ref()
                .ok_or_else(|| Error::Config(format!("expression '{src}' needs ranges")))?;
            Ok(EquationSpec {
                id: id.clone().unwrap_or_else(|| src.clone()),
                expr: Expr::parse(src)?,
                ranges: ranges.iter().map(|r| (r[0], r[1])).collect(),
            })
        }
        (None, None) => Err(Error::Config("scenario needs 'equation' or 'expression'".into())),
    }
}

/// Expands scenarios into units ordered by scenario, n, snr, method,
/// replicate. Equation validity is checked at run time so that a bad
/// scenario becomes error rows rather than aborting the grid.
pub fn expand_grid(grid: &GridFile) -> Result<Vec<GridUnit>> {
    let st = &grid.settings;
    let mut units = Vec::new();
    for sc in &grid.scenario {
        let equation = scenario_equation(sc)?;
        if sc.methods.is_empty() {
            return Err(Error::Config("scenario lists no methods".into()));
        }
        for n in sc.n.to_vec() {
            for snr in sc.snr.to_vec() {
                for &method in &sc.methods {
                    let mut l_reps = sc.l_rep.clone().unwrap_or_else(|| vec![method.default_l_rep()]);
                    l_reps.sort_unstable();
                    l_reps.dedup();
                    if l_reps.first() == Some(&0) {
                        return Err(Error::Config("l_rep entries must be at least 1".into()));
                    }
                    for replicate in 0..sc.replicates.unwrap_or(st.replicates) {
                        let seed = st.seed.wrapping_add(REPLICATE_SEED_STRIDE * replicate as u64);
                        let mut run = RunConfig::new(method);
                        run.fit.n_trees = st.trees;
                        run.fit.burn_in = st.burn_in;
                        run.fit.n_draws = st.draws;
                        run.l_perm = st.l_perm;
                        run.alpha = st.alpha;
                        run.seed = seed;
                        run.l_rep = *l_reps.last().expect("nonempty");
                        units.push(GridUnit {
                            index: units.len(),
                            equation: equation.clone(),
                            n,
                            snr,
                            s: sc.s,
                            method,
                            l_reps: l_reps.clone(),
                            replicate,
                            seed,
                            run,
                        });
                    }
                }
            }
        }
    }
    Ok(units)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub equation: String,
    pub n: usize,
    pub snr: String,
    pub s: usize,
    pub p: usize,
    pub method: String,
    pub l_rep: usize,
    pub replicate: usize,
    pub seed: u64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub f1: f64,
    pub no_selection: bool,
    pub runtime: f64,
    pub error: String,
}

impl MetricsRow {
    pub fn key(&self) -> String {
        row_key(&self.equation, self.n, &self.snr, self.s, &self.method, self.l_rep, self.replicate, self.seed)
    }

    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }

    fn blank(unit: &GridUnit, l_rep: usize) -> Self {
        Self {
            equation: unit.equation.id.clone(),
            n: unit.n,
            snr: unit.snr.to_string(),
            s: unit.s,
            p: unit.equation.p0() * (1 + unit.s),
            method: unit.method.name().to_string(),
            l_rep,
            replicate: unit.replicate,
            seed: unit.seed,
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 0,
            tpr: 0.0,
            fpr: 0.0,
            f1: 0.0,
            no_selection: false,
            runtime: 0.0,
            error: String::new(),
        }
    }
}

/// Runs one unit: generates its dataset, fits `max(l_reps)` replicates
/// once, and evaluates the selection on each prefix. Failures become rows
/// carrying the error message.
pub fn run_unit(unit: &GridUnit) -> Vec<MetricsRow> {
    match try_run_unit(unit) {
        Ok(rows) => rows,
        Err(e) => unit
            .l_reps
            .iter()
            .map(|&l| MetricsRow {
                error: e.to_string(),
                ..MetricsRow::blank(unit, l)
            })
            .collect(),
    }
}

fn try_run_unit(unit: &GridUnit) -> Result<Vec<MetricsRow>> {
    let data = generate_dataset(&unit.equation, unit.n, unit.snr, unit.s, unit.seed)?.dataset;
    unit.run.validate(data.p())?;
    let fits = fit_replicates(&data, &unit.run, unit.run.l_rep)?;
    let truth = data.truth().expect("synthetic data has truth").to_vec();
    let mut rows = Vec::with_capacity(unit.l_reps.len());
    for &l in &unit.l_reps {
        let mut run = unit.run.clone();
        run.l_rep = l;
        let start = Instant::now();
        let out = select_from_fits(&data, &run, &fits)?;
        let fit_time: f64 = fits[..l].iter().map(|f| f.seconds).sum();
        let m = compute_metrics(&out.selection.selected, &truth, data.p());
        rows.push(MetricsRow {
            p: data.p(),
            tp: m.tp,
            fp: m.fp,
            fn_: m.fn_,
            tn: m.tn,
            tpr: m.tpr,
            fpr: m.fpr,
            f1: m.f1,
            no_selection: m.no_selection,
            runtime: fit_time + start.elapsed().as_secs_f64(),
            ..MetricsRow::blank(unit, l)
        });
    }
    Ok(rows)
}

/// Runs every unit not already present in `completed` (keyed by
/// [`MetricsRow::key`]), calling `on_done` as each unit finishes. Returns
/// all rows in grid order regardless of completion order.
pub fn run_grid<F>(units: &[GridUnit], completed: &HashMap<String, MetricsRow>, on_done: F) -> Vec<MetricsRow>
where
    F: Fn(&[MetricsRow]) + Sync,
{
    units
        .par_iter()
        .map(|unit| {
            let cached: Option<Vec<MetricsRow>> = unit
                .l_reps
                .iter()
                .map(|&l| completed.get(&unit.row_key(l)).cloned())
                .collect();
            cached.unwrap_or_else(|| {
                let rows = run_unit(unit);
                on_done(&rows);
                rows
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub l_rep: usize,
    pub n: usize,
    pub snr: String,
    pub count: usize,
    pub errors: usize,
    pub mean_tpr: f64,
    pub mean_fpr: f64,
    pub mean_f1: f64,
    pub mean_runtime: f64,
}

/// Means over successful rows per `(method, l_rep, n, snr)`, in order of
/// first appearance.
pub fn aggregate(rows: &[MetricsRow]) -> Vec<AggregateRow> {
    let mut order: Vec<(String, usize, usize, String)> = Vec::new();
    let mut groups: HashMap<(String, usize, usize, String), Vec<&MetricsRow>> = HashMap::new();
    for r in rows {
        let key = (r.method.clone(), r.l_rep, r.n, r.snr.clone());
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let ok: Vec<&&MetricsRow> = members.iter().filter(|r| !r.is_error()).collect();
            let mean = |f: fn(&MetricsRow) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            AggregateRow {
                method: key.0.clone(),
                l_rep: key.1,
                n: key.2,
                snr: key.3.clone(),
                count: ok.len(),
                errors: members.len() - ok.len(),
                mean_tpr: mean(|r| r.tpr),
                mean_fpr: mean(|r| r.fpr),
                mean_f1: mean(|r| r.f1),
                mean_runtime: mean(|r| r.runtime),
            }
        })
        .collect()
}
