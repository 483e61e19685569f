//! File formats, experiment plumbing and the command-line front end for `vrgrad-core`.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod runner;
pub mod setup;

pub use config::ExperimentConfig;
pub use error::CliError;

/// Shortest round-trip decimal; scientific notation for very small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
