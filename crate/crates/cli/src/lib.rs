//! Command-line front end over the core simulation crate: a scenario
//! catalog, config-file loading, batch comparisons and frequency studies,
//! and deterministic CSV/summary artifact emission.

pub mod artifacts;
pub mod commands;
pub mod configfile;
pub mod scenario;
