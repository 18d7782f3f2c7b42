//! Batch command-line harness over `disambig-core`: synthetic corpora,
//! training, clustering, evaluation and ablations.

pub mod commands;
pub mod config;
mod error;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{exit, CliError};
