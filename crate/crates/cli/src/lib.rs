//! Driver for the `kkbeam` command: configuration, file formats and the
//! simulate / compress / beamform / support / bench stages.

pub mod bench;
pub mod commands;
pub mod config;
pub mod container;
pub mod error;
pub mod images;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
