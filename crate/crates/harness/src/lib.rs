//! Orchestration around `bkmr-core`: file formats, the command-line
//! pipeline, deterministic parallel replication, and the evaluation tables.

pub mod chain_io;
pub mod config;
pub mod csv_io;
pub mod manifest;
pub mod params_io;
pub mod report;
pub mod runner;
