//! Stateless signal-processing primitives.

pub mod autocorr;
pub mod envelope;
pub mod entropy;
pub mod fft;
pub mod filter;
pub mod lpc;
pub mod mfcc;
pub mod resample;
pub mod spectral;
pub mod stats;
pub mod wavelet;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("signal too short: need {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("empty input")]
    Empty,
}
