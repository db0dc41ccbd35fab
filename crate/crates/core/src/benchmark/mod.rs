//! Synthetic benchmark: data generation, selection metrics, and grid runs.

pub mod expr;
mod generate;
mod grid;
mod metrics;

pub use expr::Expr;
pub use generate::{generate_dataset, lookup, registry, sample_variance, EquationSpec, GeneratedData, Snr};
pub use grid::{
    aggregate, expand_grid, run_grid, run_unit, AggregateRow, GridFile, GridSettings, GridUnit,
    MetricsRow, OneOrMany, ScenarioSpec, REPLICATE_SEED_STRIDE,
};
pub use metrics::{compute_metrics, MetricsRecord};
