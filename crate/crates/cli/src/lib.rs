//! Library half of the `huo-lab` binary: configuration, experiment
//! drivers, run records, and golden-file comparison.

pub mod config;
pub mod experiments;
pub mod golden;
pub mod record;
