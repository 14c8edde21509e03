//! File formats, experiment harness, and command-line front end for the
//! core black-box-checking engine.
//!
//! Machines and properties travel as DOT graph files in the dialect
//! implemented by [`dot`]; experiment matrices are described by the flat
//! key=value format in [`config`], executed by [`experiment`], and driven
//! from the `bbckit` binary in [`cli`].

pub mod cli;
pub mod config;
pub mod dot;
pub mod experiment;
