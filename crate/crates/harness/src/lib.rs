//! Experiment harness for the string GP library: dataset loading and
//! generation, JSON model configs, hyperparameter search drivers, metric
//! evaluation, named experiments, and report emission.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod report;

pub use error::{Error, Result};
