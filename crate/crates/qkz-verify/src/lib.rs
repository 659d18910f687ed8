//! Verification suites for the `qkz` library, with a seeded, reproducible
//! JSON or text report.

#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod report;
pub mod suites;

pub use config::{load_config, Format, Overrides, RunConfig, Suite};
pub use error::{Result, VerifyError};
pub use report::{emit_report, CheckRecord, VerificationReport};
pub use suites::{run_one, run_suite};
