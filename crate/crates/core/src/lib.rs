//! Numerical toolkit for continuous-time recurrent networks with certified
//! stability: weight parameterizations with spectrum control, fixed-step
//! integrators with exact backpropagation, stability probes, dataset tasks,
//! and robustness diagnostics.

pub mod autodiff;
pub mod cell;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod params;
pub mod rng;
pub mod robustness;
pub mod stability;
pub mod train;

pub use error::{ConfigError, DataError, LinalgError, ModelError};
