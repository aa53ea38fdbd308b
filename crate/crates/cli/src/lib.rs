//! Command-line frontend and HTTP search service for `looksearch`.

mod commands;
pub mod config;
pub mod request;
pub mod server;

pub use commands::{run, Cli};
