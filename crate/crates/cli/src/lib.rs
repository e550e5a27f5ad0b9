//! Configuration, orchestration and file formats around `semiflow-core`.

pub mod commands;
pub mod config;
pub mod export;
pub mod fixture;
