//! Energy-detector statistics for half-duplex (HD) and full-duplex (FD) sensing.
//!
//! The decision metric is the average energy `M = (1/N) Σ |r(n)|²` of `N` samples. Under the
//! central limit theorem `M` is approximately Gaussian; the closed forms below use the moments
//! obtained for circularly-symmetric complex Gaussian noise and unit-modulus (PSK) signals. In FD
//! operation a fraction `chi` of the node's own transmit signal leaks into the sensing chain.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Complementary distribution function of a standard Gaussian, `Q(x) = P[Z > x]`.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("Q(x) requires a finite argument, got {x}")));
    }
    Ok(q(x))
}

#[inline]
pub(crate) fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`q_function`]: returns `x` with `Q(x) = p`.
///
/// Acklam's rational approximation followed by Halley steps against the erfc-based `Q`.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("Q⁻¹(p) requires 0 < p < 1, got {p}")));
    }
    // Work with the lower-tail quantile z = Φ⁻¹(1 - p) = -Φ⁻¹(p).
    let mut x = -acklam_probit(p);
    for _ in 0..3 {
        let err = q(x) - p;
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf == 0.0 {
            break;
        }
        // Q'(x) = -pdf(x), Q''(x) = x pdf(x)
        let u = err / -pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

fn acklam_probit(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Energy-detector parameters. All SNRs are linear ratios; `gamma` shares the units of `sigma_w2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingConfig {
    /// Residual self-interference factor after suppression, in `[0, 1]`.
    pub chi: f64,
    /// SU self-SNR `σ_s²/σ_w²` at its own sensing receiver.
    pub alpha_s: f64,
    /// PU SNR `σ_l²/σ_w²` at the SU.
    pub alpha_l: f64,
    /// Noise variance.
    pub sigma_w2: f64,
    /// Detection threshold on the average energy.
    pub gamma: f64,
    /// Sampling rate in samples per second.
    pub f_s: f64,
}

impl SensingConfig {
    pub fn validate(&self) -> Result<()> {
        ensure((0.0..=1.0).contains(&self.chi), || format!("chi must be in [0, 1], got {}", self.chi))?;
        ensure(self.alpha_s > 0.0 && self.alpha_s.is_finite(), || {
            format!("alpha_s must be positive, got {}", self.alpha_s)
        })?;
        ensure(self.alpha_l > 0.0 && self.alpha_l.is_finite(), || {
            format!("alpha_l must be positive, got {}", self.alpha_l)
        })?;
        ensure(self.sigma_w2 > 0.0 && self.sigma_w2.is_finite(), || {
            format!("sigma_w2 must be positive, got {}", self.sigma_w2)
        })?;
        ensure(self.gamma > 0.0 && self.gamma.is_finite(), || format!("gamma must be positive, got {}", self.gamma))?;
        ensure(self.f_s > 0.0 && self.f_s.is_finite(), || format!("f_s must be positive, got {}", self.f_s))
    }

    /// Same detector with a different threshold.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    pub fn with_chi(&self, chi: f64) -> Self {
        Self { chi, ..*self }
    }

    pub fn sigma_s2(&self) -> f64 {
        self.alpha_s * self.sigma_w2
    }

    pub fn sigma_l2(&self) -> f64 {
        self.alpha_l * self.sigma_w2
    }

    /// Residual self-interference-to-noise ratio `χ² α_s`.
    pub fn residual_si(&self) -> f64 {
        self.chi * self.chi * self.alpha_s
    }

    /// Number of samples collected in a sensing window of `t_s` seconds.
    pub fn samples(&self, t_s: f64) -> Result<SampleCount> {
        SampleCount::from_duration(t_s, self.f_s)
    }
}

/// Number of detector samples in one sensing window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SampleCount(u64);

impl SampleCount {
    pub fn new(n: u64) -> Result<Self> {
        ensure(n >= 1, || "sample count must be at least 1".to_string())?;
        Ok(Self(n))
    }

    /// `N = round(t_s · f_s)`.
    pub fn from_duration(t_s: f64, f_s: f64) -> Result<Self> {
        if !(t_s > 0.0 && t_s.is_finite()) {
            return Err(Error::Config(format!("sensing duration must be positive, got {t_s} s")));
        }
        let n = (t_s * f_s).round();
        if n < 1.0 {
            return Err(Error::Config(format!("sensing window of {t_s} s at {f_s} Hz holds fewer than one sample")));
        }
        if n > 9.007_199_254_740_992e15 {
            return Err(Error::Config(format!("sample count {n} exceeds 2^53")));
        }
        Ok(Self(n as u64))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

/// Mean and variance of the decision metric `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Half-duplex (sensing-only) or full-duplex (sensing while transmitting).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Duplex {
    Half,
    Full,
}

/// Fourth moments `E|s|⁴`, `E|l|⁴`, `E|w|⁴` for the unspecialized variance expressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourthMoments {
    pub e_s4: f64,
    pub e_l4: f64,
    pub e_w4: f64,
}

impl FourthMoments {
    /// Unit-modulus (PSK) signals in circularly-symmetric complex Gaussian noise.
    pub fn psk_in_cscg(cfg: &SensingConfig) -> Self {
        let s2 = cfg.sigma_s2();
        let l2 = cfg.sigma_l2();
        Self { e_s4: s2 * s2, e_l4: l2 * l2, e_w4: 2.0 * cfg.sigma_w2 * cfg.sigma_w2 }
    }
}

/// Moments of `M` when the PU is idle (PSK self-signal, CSCG noise).
pub fn moments_h0(cfg: &SensingConfig, n: SampleCount) -> DetectorMoments {
    let w2 = cfg.sigma_w2;
    let si = cfg.residual_si();
    DetectorMoments { mean: si * w2 + w2, variance: (2.0 * si + 1.0) * w2 * w2 / n.as_f64() }
}

/// Moments of `M` when the PU is active (PSK self and PU signals, CSCG noise).
pub fn moments_h1(cfg: &SensingConfig, n: SampleCount) -> DetectorMoments {
    let w2 = cfg.sigma_w2;
    let si = cfg.residual_si();
    let al = cfg.alpha_l;
    DetectorMoments {
        mean: cfg.sigma_l2() + si * w2 + w2,
        variance: (2.0 * si + 2.0 * si * al + 2.0 * al + 1.0) * w2 * w2 / n.as_f64(),
    }
}

/// H0 moments for arbitrary signal fourth moments.
pub fn moments_h0_general(cfg: &SensingConfig, n: SampleCount, fm: &FourthMoments) -> DetectorMoments {
    let chi2 = cfg.chi * cfg.chi;
    let s2 = cfg.sigma_s2();
    let w2 = cfg.sigma_w2;
    let d = chi2 * s2 - w2;
    DetectorMoments { mean: chi2 * s2 + w2, variance: (chi2 * chi2 * fm.e_s4 + fm.e_w4 - d * d) / n.as_f64() }
}

/// H1 moments for arbitrary signal fourth moments.
pub fn moments_h1_general(cfg: &SensingConfig, n: SampleCount, fm: &FourthMoments) -> DetectorMoments {
    let chi2 = cfg.chi * cfg.chi;
    let s2 = cfg.sigma_s2();
    let l2 = cfg.sigma_l2();
    let w2 = cfg.sigma_w2;
    let d = l2 - chi2 * s2 - w2;
    DetectorMoments {
        mean: l2 + chi2 * s2 + w2,
        variance: (fm.e_l4 + chi2 * chi2 * fm.e_s4 + fm.e_w4 - d * d + 4.0 * chi2 * s2 * w2) / n.as_f64(),
    }
}

/// False-alarm probability of FD sensing over `t_s` seconds.
pub fn pf_fd(cfg: &SensingConfig, t_s: f64) -> Result<f64> {
    let n = cfg.samples(t_s)?.as_f64();
    let si = cfg.residual_si();
    Ok(q((cfg.gamma / cfg.sigma_w2 - si - 1.0) * (n / (2.0 * si + 1.0)).sqrt()))
}

/// Detection probability of FD sensing over `t_s` seconds.
pub fn pd_fd(cfg: &SensingConfig, t_s: f64) -> Result<f64> {
    let n = cfg.samples(t_s)?.as_f64();
    let si = cfg.residual_si();
    let al = cfg.alpha_l;
    Ok(q((cfg.gamma / cfg.sigma_w2 - si - al - 1.0) * (n / (2.0 * si + 2.0 * si * al + 2.0 * al + 1.0)).sqrt()))
}

/// False-alarm probability of HD (sensing-only) operation.
pub fn pf_hd(cfg: &SensingConfig, t_s: f64) -> Result<f64> {
    let n = cfg.samples(t_s)?.as_f64();
    Ok(q((cfg.gamma / cfg.sigma_w2 - 1.0) * n.sqrt()))
}

/// Detection probability of HD (sensing-only) operation.
pub fn pd_hd(cfg: &SensingConfig, t_s: f64) -> Result<f64> {
    let n = cfg.samples(t_s)?.as_f64();
    let al = cfg.alpha_l;
    Ok(q((cfg.gamma / cfg.sigma_w2 - al - 1.0) * (n / (2.0 * al + 1.0)).sqrt()))
}

pub fn pf(cfg: &SensingConfig, t_s: f64, duplex: Duplex) -> Result<f64> {
    match duplex {
        Duplex::Half => pf_hd(cfg, t_s),
        Duplex::Full => pf_fd(cfg, t_s),
    }
}

pub fn pd(cfg: &SensingConfig, t_s: f64, duplex: Duplex) -> Result<f64> {
    match duplex {
        Duplex::Half => pd_hd(cfg, t_s),
        Duplex::Full => pd_fd(cfg, t_s),
    }
}

/// Threshold that yields false-alarm probability `target_pf` over `t_s` seconds.
///
/// `cfg.gamma` is ignored. Fails with [`Error::Infeasible`] when the required threshold is not
/// positive.
pub fn threshold_for_pf(cfg: &SensingConfig, t_s: f64, target_pf: f64, duplex: Duplex) -> Result<f64> {
    if !(target_pf > 0.0 && target_pf < 1.0) {
        return Err(Error::Infeasible(format!("target false-alarm {target_pf} is not in (0, 1)")));
    }
    let n = cfg.samples(t_s)?.as_f64();
    let si = match duplex {
        Duplex::Half => 0.0,
        Duplex::Full => cfg.residual_si(),
    };
    let z = q_inverse(target_pf)?;
    let gamma = cfg.sigma_w2 * (1.0 + si + z * ((2.0 * si + 1.0) / n).sqrt());
    if gamma > 0.0 {
        Ok(gamma)
    } else {
        Err(Error::Infeasible(format!("false-alarm {target_pf} over {n} samples needs a non-positive threshold")))
    }
}
