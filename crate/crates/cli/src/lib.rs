//! Pipeline around the attribution library: data ingestion and validation,
//! run configuration, per-site orchestration, synthetic-site generation for
//! validation, and machine-readable outputs.
//!
//! The `floodattr` binary exposes four subcommands:
//!
//! - `ingest-check`: validate a data directory and print a summary
//! - `run`: full per-site analysis (covariates, fits, WAIC, attribution,
//!   trend statistics) with report files
//! - `synth`: generate seeded synthetic sites in the input format
//! - `report`: rebuild the aggregate/plot files from stored site results
//!
//! Everything is deterministic given the data, the config and the seed:
//! identical runs produce byte-identical outputs, independent of the worker
//! thread count.

pub mod config;
pub mod error;
pub mod ingest;
pub mod report;
pub mod runner;
pub mod synth;

pub use config::RunConfig;
pub use error::PipelineError;
pub use ingest::{ingest, SiteRecord};
pub use runner::{run_all, run_site, RunOutput, SiteResult};
