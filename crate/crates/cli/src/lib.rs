//! Command-line front end for `koopid-core`: run configuration, series and
//! model files, and the `simulate`, `fit`, `predict` and `analyze` commands.

pub mod archive;
mod commands;
pub mod config;
pub mod series;

pub use archive::ModelArchive;
pub use commands::{execute, exit_code, run, Cli, Command, Common, Task};
pub use config::RunConfig;
