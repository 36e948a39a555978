//! Analytical and simulation models for a full-duplex secondary user sharing a channel with a
//! primary user that follows ON/OFF traffic.
//!
//! - [`dettheory`]: energy-detector false-alarm and detection probabilities with residual
//!   self-interference.
//! - [`traffic`]: the primary user's exponential ON/OFF process.
//! - [`outage`]: collision probability of the transmit-only, transmit-sense and transmit-receive
//!   modes.
//! - [`throughput`]: secondary-user spectral efficiency per mode.
//! - [`optimize`]: constrained grid search for the sensing and transmission durations and the
//!   traffic-load threshold between modes.
//! - [`sim`]: Monte Carlo counterparts of the closed forms.
//! - [`cli`]: configuration files and batch experiments.

pub mod cli;
pub mod dettheory;
pub mod error;
pub mod optimize;
pub mod outage;
pub mod sim;
pub mod throughput;
pub mod traffic;

pub use error::{Error, Result};

/// `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `10·log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
