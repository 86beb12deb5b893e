//! File formats, scenario presets and the command-line front end around `drawmpc-core`.
//!
//! Inputs are two-column point CSVs, PBM glyphs and waypoint CSVs. Outputs are waypoint
//! CSVs, full-state trajectory CSVs, JSON metrics with a provenance block, and labeled
//! plain-text matrix dumps of the linear model and of a condensed QP.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod formats;
pub mod metrics;
pub mod pbm;
pub mod pipeline;

pub use error::{AppError, AppResult};
