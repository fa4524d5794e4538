//! Configuration, experiment orchestration and file output for the
//! `chordwig` command-line harness.

pub mod commands;
pub mod config;
pub mod experiments;
