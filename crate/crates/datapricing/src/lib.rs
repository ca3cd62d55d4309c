//! File formats, parallel execution and the command-line front end for
//! `datapricing-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;
pub mod pipeline;
pub mod report;

pub use cli::run;
pub use config::ResolvedConfig;
pub use error::CliError;
pub use exec::RayonExecutor;
