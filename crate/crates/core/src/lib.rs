//! Optimal sampling and MMSE reconstruction of bandpass periodic random signals.

pub mod bounds;
pub mod compression;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod montecarlo;
pub mod schemes;
pub mod search;
pub mod signal;

pub use error::{Error, Result};
pub use estimator::{EstimatorBundle, FilterConfig, FilterSpec, Regime};
pub use schemes::SamplingScheme;
pub use signal::{CoefficientVector, DiscreteSignalSpec, SignalSpec};
