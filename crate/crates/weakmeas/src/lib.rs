//! Experiment orchestration for weak-measurement circuit ensembles: run
//! configuration, multi-chain sampling, exact reports, CSV/JSON artifacts
//! and the `weakmeas` command line.

pub mod cli;
pub mod config;
pub mod exact;
pub mod io;
pub mod run;

pub use weakmeas_core as core;
