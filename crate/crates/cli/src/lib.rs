//! Scenario-file front end for `coupled_consensus`: coupling analysis, gain
//! synthesis, simulation to CSV, and the built-in five-agent reference runs.
//!
//! Exit statuses are a stable contract: [`EXIT_OK`] on success,
//! [`EXIT_NEGATIVE`] for a negative verdict or a numerical failure on valid
//! input, [`EXIT_INVALID`] for malformed input or usage errors.

pub mod commands;
pub mod csv;
mod error;
pub mod reference;
pub mod scenario;

pub use error::{CliError, EXIT_INVALID, EXIT_NEGATIVE, EXIT_OK};
