//! Configuration-driven experiment drivers behind the `fdlab` binary.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod random;
pub mod simulate;
pub mod spectrum;

pub use config::{ExperimentConfig, GridKindSpec, GridSpec, ParamsSpec, RatesSpec, RunSpec, SpectrumSpec, Tolerances};
