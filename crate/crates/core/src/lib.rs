//! Weak-scaling multifractal analysis of one-dimensional signals.

pub mod analysis;
pub mod config;
pub mod error;
pub mod fit;
pub mod io;
pub mod multiscale;
pub mod par;
pub mod report;
pub mod scaling;
pub mod sparsity;
pub mod spectrum;
pub mod synth;
pub mod wavelet;

pub use error::{Error, ErrorClass, Result};
