//! Experiment harness: flat-file configs in, seeded runs, CSV out.

pub mod config;
pub mod csv;
pub mod experiment;
pub mod files;
