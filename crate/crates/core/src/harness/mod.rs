//! Verification checks, configuration and the command-line front end.

pub mod checks;
pub mod cli;
pub mod config;
pub mod output;
pub mod report;
pub mod rng;
