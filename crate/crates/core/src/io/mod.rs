//! File formats: CSV datasets, binary traces, results documents, grid
//! files and metric tables.

mod grid_file;
mod results;
mod table;
pub mod trace_file;

pub use grid_file::{
    append_partial_metrics, parse_grid, read_grid, read_metrics, read_partial_metrics,
    write_aggregate, write_metrics, write_rows,
};
pub use results::{FeatureEntry, ResultsDocument, SelectedFeature, SCHEMA_VERSION};
pub use table::{read_dataset, read_dataset_from, write_dataset};
pub use trace_file::{load_trace, read_trace, save_trace, write_trace};
