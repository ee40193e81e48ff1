//! Command-line front end: single solves, sweeps, figure datasets, oracles
//! and complex-scaling spectra, with a content-addressed result cache.

pub mod app;
pub mod cache;
pub mod config;
pub mod error;
pub mod figures;
pub mod record;
pub mod run;

pub use error::CliError;
