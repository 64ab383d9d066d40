//! Driver for `ymflow-core`: JSON configuration, `YMF1` snapshots and JSON/CSV reports.

pub mod config;
pub mod report;
pub mod run;
pub mod snapshot;
