//! Conditional switching mixed logit toolkit for shared mobility hub choice
//! experiments: design generation, synthetic data, maximum simulated
//! likelihood estimation, and forward scenario simulation.

pub mod designer;
pub mod draws;
pub mod error;
pub mod estimator;
pub mod io;
pub mod likelihood;
pub mod model;
pub mod presets;
pub mod simulator;
pub mod synthesizer;

pub use error::{Error, Result};
