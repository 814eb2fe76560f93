use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised across the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("signal of length {len} is too short for the requested scales ({reason})")]
    SignalTooShort { len: usize, reason: String },
    #[error("non-finite sample at index {index}")]
    NonFiniteInput { index: usize },
    #[error("invalid wavelet specification: {0}")]
    InvalidWavelet(String),
    #[error("pyramid levels are inconsistent: {0}")]
    InconsistentPyramid(String),
    #[error("not enough scales: {0}")]
    InsufficientScales(String),
    #[error("p must be positive, got {0}")]
    NonPositiveP(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("multiscale field has no usable level")]
    EmptyField,
    #[error("negative moment q = {0} is not defined on raw wavelet coefficients")]
    NegativeMomentOnCoefficients(f64),
    #[error("every quantity at scale j = {j} is zero; moment q = {q} < 0 is undefined")]
    AllZeroAtNegativeQ { j: i32, q: f64 },
    #[error("scale range [{j1}, {j2}] is too narrow or outside the usable scales ({reason})")]
    ScaleRangeTooNarrow { j1: i32, j2: i32, reason: String },
    #[error("all coefficients vanish at scale j = {0}")]
    AllZeroLevel(i32),
    #[error("moment grid lacks small positive q values")]
    GridLacksSmallPositiveQ,
    #[error("negative moments require leaders or (theta,omega)-leaders, field kind is {0}")]
    IncompatibleQRestriction(String),
    #[error("degenerate histogram: {0}")]
    DegenerateHistogram(String),
    #[error("spectrum is below the floor on the whole H grid")]
    EmptySpectrum,
    #[error("sparsity exponent delta = {0} must be < 1")]
    DeltaOutOfRange(f64),
    #[error("model is not supported here: {0}")]
    UnsupportedModel(String),
    #[error("circulant embedding is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    EmbeddingNotPsd { min_eigenvalue: f64 },
    #[error("law violates the uniform bound: {0}")]
    LawViolatesUniformBound(String),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse { row: usize, column: usize, message: String },
    #[error("channel {channel} out of range (input has {available} channels)")]
    ChannelOutOfRange { channel: usize, available: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("channel '{channel}': {source}")]
    Channel {
        channel: String,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Serialization(String),
}

/// Broad failure classes, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Compute,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Channel { source, .. } => source.class(),
            Io { .. } | Serialization(_) => ErrorClass::Io,
            SignalTooShort { .. }
            | NonFiniteInput { .. }
            | InvalidWavelet(_)
            | NonPositiveP(_)
            | InvalidParameter(_)
            | NegativeMomentOnCoefficients(_)
            | ScaleRangeTooNarrow { .. }
            | GridLacksSmallPositiveQ
            | IncompatibleQRestriction(_)
            | DeltaOutOfRange(_)
            | UnsupportedModel(_)
            | LawViolatesUniformBound(_)
            | Parse { .. }
            | ChannelOutOfRange { .. }
            | LengthMismatch(_)
            | Config(_) => ErrorClass::Validation,
            InconsistentPyramid(_)
            | InsufficientScales(_)
            | EmptyField
            | AllZeroAtNegativeQ { .. }
            | AllZeroLevel(_)
            | DegenerateHistogram(_)
            | EmptySpectrum
            | EmbeddingNotPsd { .. } => ErrorClass::Compute,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Compute => 3,
            ErrorClass::Io => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_channel(self, channel: &str) -> Self {
        Error::Channel {
            channel: channel.to_string(),
            source: Box::new(self),
        }
    }
}
