//! Finite-resolution laboratory for random oscillations.

pub mod dioph;
pub mod error;
pub mod geometry;
pub mod hamel;
pub mod interval;
pub mod measures;
pub mod minimizers;
pub mod paths;
pub mod randomness;
pub mod scalar;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use interval::{Interval, RationalInterval};
pub use randomness::{BitSource, BitWord, ComplexityScore, SourceSpec, Tape};
pub use scalar::Scalar;
pub use paths::{DyadicPath, WalkCode};

/// Atomic measure over `f64`.
pub type Measure = measures::DiscreteMeasure<f64>;
/// Atomic measure over `f32`.
pub type Measure32 = measures::DiscreteMeasure<f32>;
pub type Spectrum = spectral::SpectrumSample<f64>;
