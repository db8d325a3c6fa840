//! Experiment driver for `machflow-core`: Mach-number sweeps against the
//! limit systems, small-divisor scans, randomised identity checks and the
//! files they produce.

pub mod config;
pub mod converge;
pub mod divisor;
pub mod emit;
pub mod error;
pub mod identities;
pub mod setup;
pub mod simulate;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
