//! Numerical study of periodically damped transport and wave equations:
//! exact and split-step solvers, monodromy operators, spectral diagnostics,
//! observability constants and convergence-rate fits.

pub mod config;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod observability;
pub mod output;
pub mod pipeline;
pub mod quadrature;
pub mod rates;
pub mod reproduce;
pub mod spectral;
pub mod states;
pub mod transport;
pub mod wave;

pub use error::{Error, Result};
pub use geometry::{DampingRegion, LineAverageProfile, Rect, RegionKind};
