//! Faster-than-Nyquist (FTN) PAPR analysis with Gaussian symbols.
//!
//! The crate builds the input covariance matrices used by FTN transmitters
//! (capacity-optimal and the usual baselines), draws Gaussian symbol blocks
//! with those covariances, synthesizes the resulting cyclostationary
//! waveforms and measures or predicts the complementary CDF of their
//! instantaneous power.
//!
//! Module map:
//!
//! - [`pulse`]: root-raised-cosine pulse, raised-cosine autocorrelation and spectrum.
//! - [`gram`]: Toeplitz Gram matrix, its generating function and DFT-domain samples.
//! - [`covariance`]: input covariance per allocation scheme and power constraint.
//! - [`channel`]: Rayleigh MIMO channels and spatial power allocation.
//! - [`synth`]: colored symbol draws and waveform synthesis.
//! - [`papr`]: empirical and theoretical CCDF curves.
//! - [`scenario`], [`figure`], [`verify`]: the campaign runner behind the CLI.

pub mod channel;
pub mod covariance;
mod error;
pub mod figure;
pub mod gram;
pub mod par;
pub mod papr;
pub mod plot;
pub mod pulse;
pub mod scenario;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};

pub use num_complex::Complex64;
