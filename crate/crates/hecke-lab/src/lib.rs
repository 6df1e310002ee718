//! Command-line frontend for `hecke-lab-core`: JSON reports, the
//! modular-polynomial cache and a thread-pool executor.

pub mod cache;
pub mod cli;
pub mod exec;
pub mod report;
