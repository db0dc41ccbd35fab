pub mod benchmark;
pub mod data;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod sampler;
pub mod selection;
pub mod summaries;

pub use error::{Error, Result};
