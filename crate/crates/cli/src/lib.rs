//! JSON network documents and the `abnet` subcommands.

pub mod commands;
pub mod document;
pub mod report;
