//! Experiment harness for the `polent` model: TOML-configured scenarios,
//! parameter sweeps, oracle runs, acceptance checks and result tables.

pub mod config;
pub mod error;
pub mod model;
pub mod oracle;
pub mod plots;
pub mod scenario;
pub mod sweep;
pub mod table;
pub mod verify;

pub use error::{HarnessError, HarnessResult};
