//! Lorenz-96 twin-experiment harness for `riot-core`.
//!
//! Builds twin problems from a TOML [`ExperimentSpec`], runs solver grids,
//! rank sweeps and spectrum reports, and writes CSV tables with a TOML run
//! manifest. The `riot` binary wraps these entry points.

pub mod check;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod grid;
pub mod output;
pub mod problem;
pub mod spectrum;
pub mod sweep;

pub use config::{ExperimentSpec, SolverSpec};
pub use error::HarnessError;
pub use exec::Pool;
pub use grid::{run_grid, ResultRow};
pub use problem::Experiment;
