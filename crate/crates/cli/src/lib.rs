//! Scenario configuration, subcommands and CSV reports for the `elswap`
//! binary.

pub mod commands;
pub mod config;
pub mod report;
