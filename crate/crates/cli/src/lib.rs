//! Pipeline stages behind the `linkbias` binary.

pub mod config;
pub mod curves;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod report;

pub use config::{RunConfig, SplitConfig};
pub use error::{CliError, CliResult};
pub use pipeline::{cmd_run, cmd_split};
pub use report::cmd_report;
