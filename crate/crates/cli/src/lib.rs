//! Library surface of the benchmark harness; the `iht-bench` binary is a
//! thin argument parser over these modules.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod instance;
pub mod runner;
