//! Experiment runner for `snorelab-core`: JSON configs, seeded ensembles on a
//! thread pool, trace/image artifacts and the certification commands behind
//! the `snorelab` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod problem;

pub use config::{parse_config, parse_config_str, ExperimentConfig};
pub use error::{Error, Result};
pub use problem::{build_problem, Problem};
