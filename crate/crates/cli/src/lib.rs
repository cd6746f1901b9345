//! Command-line front end for `solvmetric`: JSON documents, a bundled
//! catalog and one subcommand per analysis.

pub mod catalog;
pub mod commands;
pub mod document;

pub use commands::{run, Cli, Outcome, Status};
pub use document::AlgebraDocument;
