//! Primary-user activity: an alternating ON/OFF renewal process with exponential periods.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// PU activity parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    /// Rate (1/s) of the exponential OFF (idle) duration.
    pub lambda_off: f64,
    /// Stationary probability that the PU is ON.
    pub beta: f64,
}

impl TrafficModel {
    pub fn new(lambda_off: f64, beta: f64) -> Result<Self> {
        let m = Self { lambda_off, beta };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.lambda_off > 0.0 && self.lambda_off.is_finite(), || {
            format!("lambda_off must be positive, got {}", self.lambda_off)
        })?;
        ensure(self.beta > 0.0 && self.beta < 1.0, || format!("beta must be in (0, 1), got {}", self.beta))
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }

    pub fn mean_off(&self) -> f64 {
        1.0 / self.lambda_off
    }

    pub fn mean_on(&self) -> f64 {
        1.0 / on_rate(self)
    }
}

/// CDF of the forward recurrence time of the OFF period, `1 - exp(-λ_OFF t)`.
pub fn f_tau(model: &TrafficModel, t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::Domain(format!("recurrence time must be non-negative, got {t}")));
    }
    Ok(forward_cdf(model.lambda_off, t))
}

#[inline]
pub(crate) fn forward_cdf(lambda_off: f64, t: f64) -> f64 {
    -(-lambda_off * t).exp_m1()
}

/// Rate of the exponential ON period chosen so that the long-run ON fraction equals `beta`.
pub fn on_rate(model: &TrafficModel) -> f64 {
    model.lambda_off * (1.0 - model.beta) / model.beta
}
