//! Workbench front end: file formats, run manifests, configuration, and the
//! subcommand implementations behind the `forge` binary.

pub mod commands;
pub mod config;
pub mod formats;
pub mod manifest;
