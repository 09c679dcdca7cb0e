//! Command-line front end: metric documents, report serialization and
//! command dispatch for the `mroot` binary.

pub mod commands;
pub mod metric_file;
pub mod report;

pub use commands::run_command;
pub use report::{Format, Report};
