//! Scenario files, run orchestration, comparison and convergence sweeps for
//! the `dissipa` solvers. The `dissipa` binary is a thin layer over this.

pub mod compare;
pub mod config;
pub mod error;
pub mod io;
pub mod runner;
pub mod stats;
pub mod sweep;

pub use config::{parse_config, RunKind, Scenario};
pub use error::{HarnessError, Result};
