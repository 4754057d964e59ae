//! Error types shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A constitutive law violates its structural assumptions.
    #[error("constitutive law error: {0}")]
    Constitutive(String),

    /// Invalid numerical or configuration parameter.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A field state violates validity requirements (vacuum, degenerate phase).
    #[error("state validity error: {0}")]
    StateValidity(String),

    /// A solver run left the pointwise guard bounds.
    #[error("guard violation at t={time}: {channel}={value} outside [{lo}, {hi}]")]
    GuardViolation {
        time: f64,
        channel: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Non-finite values appeared during time integration.
    #[error("blow-up detected at t={time}: non-finite {channel}")]
    BlowUp { time: f64, channel: &'static str },

    /// Kernel evaluation at t=0 where the kernel is singular.
    #[error("singular kernel: {0}")]
    SingularKernel(String),

    /// Frequency-regime certification failed; carries the witness wavenumber.
    #[error("certification failure at xi={xi} ({regime}): Re lambda={re_lambda} exceeds bound {bound}")]
    Certification {
        xi: f64,
        regime: &'static str,
        re_lambda: f64,
        bound: f64,
    },

    /// Rate fitting failed (too few samples or non-positive values).
    #[error("fit error: {0}")]
    Fit(String),

    /// Bad CLI usage, configuration key, or experiment name.
    #[error("usage error: {0}")]
    Usage(String),

    /// Manifest bookkeeping failure (missing file, checksum mismatch).
    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
