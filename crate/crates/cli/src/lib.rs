//! Ingestion, the fitting/testing/ranking pipeline, and report output for the
//! `citysize` command-line tool.

pub mod ingest;
pub mod pipeline;
pub mod plot;
pub mod report;

pub use ingest::{ingest, Dataset, InputFormat};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineReport};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "CITYSIZE_WORKERS";
