//! Pipeline behind the `wavefit` binary: load agency extracts, build the
//! normalised series, fit every nation × place × wave cell and write reports.
//!
//! # Output tree
//!
//! `wavefit fit --out DIR` writes:
//!
//! | file | contents |
//! |---|---|
//! | `run.json` | inputs, wave windows and optimiser settings |
//! | `series.csv` | `nation,place,kind,iso_year,iso_week,value`; empty value where undefined |
//! | `diagnostics.csv` | the sum of per-place ratios, same layout |
//! | `fits.{csv,json,md}` | one row per cell: status, parameters, R², iterations, final damping, start vector, flags |
//! | `peaks.{csv,json,md}` | fitted-curve peak (0.1-week grid) and raw-data peak per converged cell |
//! | `beta_signs.{csv,json,md}` | sign of β per Weibull cell, `NA` where nothing was fitted |
//! | `plots/<nation>_<place>_<wave>_<model>.csv` | `t,iso_week,observed,fitted` on a 0.1-week grid |
//! | `quarantine/<nation>_<place>_<wave>_<model>.json` | cells that failed or did not converge |
//!
//! Numbers use `.` as the decimal separator and Rust's shortest round-trip
//! formatting, so identical inputs give byte-identical trees.

pub mod commands;
pub mod config;
pub mod error;
pub mod fixture;
pub mod pipeline;
pub mod report;

pub use commands::{cmd_compare, cmd_fit, cmd_validate, CompareRow, FitSummary, ValidationReport};
pub use config::{Format, RunConfig};
pub use error::CliError;
