//! Experiment harness: dataset generation and ingestion, flat key=value
//! configuration, plan expansion with cached runs, result tables and plots,
//! and the `unlearn` command-line interface.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod pipeline;
pub mod plan;
pub mod report;

pub use error::{Error, Result};
