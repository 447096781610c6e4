//! Command-line front end and file formats for `surropt-core`.
//!
//! Runs read a strict JSON config (see [`config::RunConfig`]) and write
//! their artifacts into the configured output directory: datasets as CSV,
//! models and summaries as JSON, per-iteration logs as JSON Lines.

pub mod commands;
pub mod config;
pub mod external;
pub mod formats;
