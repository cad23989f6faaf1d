//! Command-line front end for `heralded-core`: configuration, run execution
//! and manifest replay.

pub mod config;
pub mod run;
