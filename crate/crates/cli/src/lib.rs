//! Experiment driver for `fraclap-core`: TOML configurations, named recipes
//! that write CSV/JSON artifacts with a manifest, and the acceptance suite.

pub mod checks;
pub mod config;
pub mod oracle;
pub mod output;
pub mod recipes;
