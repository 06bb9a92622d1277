//! Command-line front end: configuration, pipeline and artifact output.

pub mod config;
pub mod output;
pub mod pipeline;

pub use config::{Overrides, RunConfig};
pub use pipeline::{run, Command, Outcome};
