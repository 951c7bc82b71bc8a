//! Configuration, snapshot files and CSV reports.

pub mod config;
pub mod report;
pub mod snapshot;
