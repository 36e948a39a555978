//! PU collision (outage) probability for the TO, TS and TR operating modes.
//!
//! A collision is any overlap between an SU transmission and PU activity. With imperfect sensing
//! the probability is conditioned on the SU attempting a transmission, i.e. divided by
//! `W = β(1-P_d) + (1-β)(1-P_f)` of the initial half-duplex sensing period.

use serde::{Deserialize, Serialize};

use crate::dettheory::{self, Duplex, SensingConfig};
use crate::error::{ensure, Error, Result};
use crate::traffic::{forward_cdf, TrafficModel};

/// SU operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Transmission only (half duplex).
    #[serde(rename = "TO")]
    TransmitOnly,
    /// Transmit while sensing in `m` windows.
    #[serde(rename = "TS")]
    TransmitSense,
    /// Transmit while receiving from the peer.
    #[serde(rename = "TR")]
    TransmitReceive,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::TransmitOnly, Mode::TransmitSense, Mode::TransmitReceive];

    pub fn label(self) -> &'static str {
        match self {
            Mode::TransmitOnly => "TO",
            Mode::TransmitSense => "TS",
            Mode::TransmitReceive => "TR",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "TO" => Ok(Mode::TransmitOnly),
            "TS" => Ok(Mode::TransmitSense),
            "TR" => Ok(Mode::TransmitReceive),
            other => Err(Error::Config(format!("unknown mode `{other}` (expected TO, TS or TR)"))),
        }
    }
}

/// Frame timing: an initial sensing-only period followed by a transmission period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSchedule {
    pub mode: Mode,
    /// Initial half-duplex sensing duration (s).
    pub t_s0: f64,
    /// Transmission duration (s).
    pub t: f64,
    /// Reception duration (s), TR only.
    pub t_r: f64,
    /// Number of in-transmission sensing windows, TS only.
    pub m: u32,
    /// Duration of each in-transmission sensing window (s), TS only.
    pub t_si: f64,
}

impl FrameSchedule {
    pub fn transmit_only(t_s0: f64, t: f64) -> Self {
        Self { mode: Mode::TransmitOnly, t_s0, t, t_r: 0.0, m: 0, t_si: 0.0 }
    }

    /// TR schedule with reception as long as transmission.
    pub fn transmit_receive(t_s0: f64, t: f64) -> Self {
        Self { mode: Mode::TransmitReceive, t_s0, t, t_r: t, m: 0, t_si: 0.0 }
    }

    /// TS schedule whose `m` equal windows partition `t` (`m = 0` means one window of length `t`).
    pub fn transmit_sense(t_s0: f64, t: f64, m: u32) -> Self {
        let t_si = if m == 0 { t } else { t / f64::from(m) };
        Self { mode: Mode::TransmitSense, t_s0, t, t_r: 0.0, m, t_si }
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        let mut s = *self;
        s.mode = mode;
        match mode {
            Mode::TransmitSense if s.t_si <= 0.0 => {
                s.t_si = if s.m == 0 { s.t } else { s.t / f64::from(s.m) };
            }
            Mode::TransmitReceive if s.t_r <= 0.0 => s.t_r = s.t,
            _ => {}
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.t_s0 > 0.0 && self.t_s0.is_finite(), || format!("t_s0 must be positive, got {}", self.t_s0))?;
        ensure(self.t > 0.0 && self.t.is_finite(), || format!("t must be positive, got {}", self.t))?;
        match self.mode {
            Mode::TransmitSense => ensure(self.t_si > 0.0 && self.t_si.is_finite(), || {
                format!("TS windows must be positive, got t_si = {}", self.t_si)
            }),
            Mode::TransmitReceive => ensure(self.t_r > 0.0 && self.t_r.is_finite(), || {
                format!("TR reception duration must be positive, got {}", self.t_r)
            }),
            Mode::TransmitOnly => Ok(()),
        }
    }
}

/// Collision probability with its constituent masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionBreakdown {
    /// Collision probability conditioned on a transmission attempt.
    pub total: f64,
    /// Joint mass of a missed detection in the initial sensing.
    pub term_a: f64,
    /// Joint mass of the PU returning during the SU transmission.
    pub term_b: f64,
    /// Probability that the SU attempts a transmission.
    pub w: f64,
}

impl CollisionBreakdown {
    /// `term_a` is the missed-detection mass, `idle_go` the mass of a correct idle verdict and
    /// `returns` the probability that the PU comes back while the SU still transmits.
    fn from_masses(term_a: f64, idle_go: f64, returns: f64) -> Result<Self> {
        let w = term_a + idle_go;
        if w <= 0.0 {
            return Err(Error::UndefinedConditional);
        }
        // split so that a vanishing term_a leaves exactly `returns`
        let total = (term_a / w + (idle_go / w) * returns).min(1.0);
        Ok(Self { total, term_a, term_b: idle_go * returns, w })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensingQuality {
    Perfect,
    Imperfect,
}

/// Upper limit of the TS return-time sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BSumMode {
    /// Sum over `m + 1` window boundaries, up to `(m+1)·t_si`.
    #[default]
    Literal,
    /// Sum over the `m` windows that partition the transmission.
    Partition,
}

/// Threshold used by the in-transmission (FD) sensing windows of the TS mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum WindowThreshold {
    /// Same `gamma` as the initial sensing period.
    #[default]
    Shared,
    /// Per-window threshold giving this FD false-alarm probability at the window length.
    TargetPf(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TsOptions {
    pub b_sum: BSumMode,
    pub window_threshold: WindowThreshold,
}

/// Threshold applied in each TS window of length `t_si`.
pub fn window_gamma(sense: &SensingConfig, t_si: f64, policy: WindowThreshold) -> Result<f64> {
    match policy {
        WindowThreshold::Shared => Ok(sense.gamma),
        WindowThreshold::TargetPf(p) => dettheory::threshold_for_pf(sense, t_si, p, Duplex::Full),
    }
}

/// FD false-alarm probability of one TS window.
pub fn window_false_alarm(sense: &SensingConfig, t_si: f64, policy: WindowThreshold) -> Result<f64> {
    let g = window_gamma(sense, t_si, policy)?;
    dettheory::pf_fd(&sense.with_gamma(g), t_si)
}

/// Collision probability of TO (and TR) under perfect sensing: `F_τ(T)`.
pub fn collision_to_perfect(model: &TrafficModel, sched: &FrameSchedule) -> f64 {
    forward_cdf(model.lambda_off, sched.t.max(0.0))
}

/// Collision probability of TS under perfect sensing, idealized as zero.
pub fn collision_ts_perfect() -> f64 {
    0.0
}

/// Collision probability of TO (and TR) under imperfect initial sensing.
pub fn collision_to_imperfect(
    model: &TrafficModel,
    sched: &FrameSchedule,
    sense: &SensingConfig,
) -> Result<CollisionBreakdown> {
    let pd0 = dettheory::pd_hd(sense, sched.t_s0)?;
    let pf0 = dettheory::pf_hd(sense, sched.t_s0)?;
    let beta = model.beta;
    let idle_go = (1.0 - beta) * (1.0 - pf0);
    let term_a = beta * (1.0 - pd0);
    CollisionBreakdown::from_masses(term_a, idle_go, forward_cdf(model.lambda_off, sched.t))
}

/// Collision probability of TS under imperfect sensing with equal windows.
pub fn collision_ts_imperfect(
    model: &TrafficModel,
    sched: &FrameSchedule,
    sense: &SensingConfig,
    opts: &TsOptions,
) -> Result<CollisionBreakdown> {
    ensure(sched.t_si > 0.0, || format!("TS windows must be positive, got t_si = {}", sched.t_si))?;
    let pd0 = dettheory::pd_hd(sense, sched.t_s0)?;
    let pf0 = dettheory::pf_hd(sense, sched.t_s0)?;
    let pfw = window_false_alarm(sense, sched.t_si, opts.window_threshold)?;
    let beta = model.beta;
    let idle_go = (1.0 - beta) * (1.0 - pf0);
    let term_a = beta * (1.0 - pd0);
    let terms = match opts.b_sum {
        BSumMode::Literal => sched.m as u64 + 1,
        BSumMode::Partition => (sched.m as u64).max(1),
    };
    let returns = return_sum_equal(model.lambda_off, sched.t_si, pfw, terms);
    CollisionBreakdown::from_masses(term_a, idle_go, returns)
}

/// `Σ_{i=1}^{K} (1-p)^{i-1} [F(i·t) - F((i-1)·t)]` in closed form (a geometric series).
pub fn return_sum_equal(lambda_off: f64, t_si: f64, p: f64, terms: u64) -> f64 {
    if terms == 0 {
        return 0.0;
    }
    let step = forward_cdf(lambda_off, t_si);
    // ratio q = (1-p) e^{-λt}; 1-q = p + (1-p)(1-e^{-λt})
    let one_minus_q = p + (1.0 - p) * step;
    if one_minus_q <= 0.0 {
        return step * terms as f64;
    }
    let ln_q = (-p).ln_1p() - lambda_off * t_si;
    let one_minus_qk = -(terms as f64 * ln_q).exp_m1();
    step * one_minus_qk / one_minus_q
}

/// Same sum for arbitrary windows: `Σ_i [F(S_i) - F(S_{i-1})] Π_{j<i} (1 - p_j)` where `S_i` is
/// the cumulative window length. `windows` and `false_alarms` pair up index by index.
pub fn return_sum_general(lambda_off: f64, windows: &[f64], false_alarms: &[f64]) -> Result<f64> {
    ensure(windows.len() == false_alarms.len(), || {
        format!("{} windows but {} false-alarm probabilities", windows.len(), false_alarms.len())
    })?;
    let mut elapsed = 0.0;
    let mut survive = 1.0;
    let mut sum = 0.0;
    for (&w, &p) in windows.iter().zip(false_alarms) {
        let next = elapsed + w;
        sum += survive * (forward_cdf(lambda_off, next) - forward_cdf(lambda_off, elapsed));
        survive *= 1.0 - p;
        elapsed = next;
    }
    Ok(sum)
}

/// Collision breakdown for any mode; TR uses the TO expressions.
pub fn collision(
    model: &TrafficModel,
    sched: &FrameSchedule,
    sense: &SensingConfig,
    quality: SensingQuality,
    opts: &TsOptions,
) -> Result<CollisionBreakdown> {
    match (quality, sched.mode) {
        (SensingQuality::Perfect, Mode::TransmitSense) => {
            Ok(CollisionBreakdown { total: collision_ts_perfect(), term_a: 0.0, term_b: 0.0, w: 1.0 - model.beta })
        }
        (SensingQuality::Perfect, _) => {
            CollisionBreakdown::from_masses(0.0, 1.0 - model.beta, collision_to_perfect(model, sched))
        }
        (SensingQuality::Imperfect, Mode::TransmitSense) => collision_ts_imperfect(model, sched, sense, opts),
        (SensingQuality::Imperfect, _) => collision_to_imperfect(model, sched, sense),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> TrafficModel {
        TrafficModel::new(0.01, 0.5).unwrap()
    }

    fn sense() -> SensingConfig {
        SensingConfig { chi: 0.235, alpha_s: 100.0, alpha_l: 10f64.powf(-1.5), sigma_w2: 1.0, gamma: 1.016, f_s: 6e6 }
    }

    #[test]
    fn perfect_sensing_to_and_tr() {
        let m = model();
        let to = FrameSchedule::transmit_only(4e-3, 100.0);
        let expected = 1.0 - (-1.0f64).exp();
        assert!((collision_to_perfect(&m, &to) - expected).abs() < 1e-15);
        assert_eq!(collision_to_perfect(&m, &FrameSchedule::transmit_only(4e-3, 0.0)), 0.0);
        let tr = FrameSchedule::transmit_receive(4e-3, 100.0);
        assert_eq!(collision_to_perfect(&m, &tr), collision_to_perfect(&m, &to));
    }

    #[test]
    fn ts_perfect_is_zero_for_any_t() {
        let m = model();
        for t in [0.1, 1.0, 100.0] {
            let s = FrameSchedule::transmit_sense(4e-3, t, 500);
            let b = collision(&m, &s, &sense(), SensingQuality::Perfect, &TsOptions::default()).unwrap();
            assert_eq!(b.total, 0.0);
        }
    }

    #[test]
    fn certain_detection_leaves_only_returns() {
        // alpha_l so large that P_d rounds to 1
        let s = SensingConfig { alpha_l: 1e4, ..sense() };
        let sched = FrameSchedule::transmit_only(4e-3, 3.0);
        let b = collision_to_imperfect(&model(), &sched, &s).unwrap();
        assert_eq!(b.term_a, 0.0);
        assert_eq!(b.total, collision_to_perfect(&model(), &sched));
    }

    #[test]
    fn vanishing_load_approaches_perfect_sensing() {
        let m = TrafficModel::new(0.01, 1e-9).unwrap();
        let sched = FrameSchedule::transmit_only(4e-3, 10.0);
        let b = collision_to_imperfect(&m, &sched, &sense()).unwrap();
        assert!((b.total - collision_to_perfect(&m, &sched)).abs() < 1e-7);
    }

    #[test]
    fn undefined_when_never_attempting() {
        // P_f = P_d = 1: the detector always reports busy
        let s = SensingConfig { gamma: 1e-6, ..sense() };
        let sched = FrameSchedule::transmit_only(4e-3, 1.0);
        assert_eq!(collision_to_imperfect(&model(), &sched, &s), Err(Error::UndefinedConditional));
    }

    #[test]
    fn closed_form_sum_matches_series() {
        for &(lambda, t, p, k) in &[
            (0.01, 2e-3, 0.004, 501u64),
            (0.01, 2e-3, 0.0, 501),
            (0.5, 0.01, 0.3, 40),
            (0.01, 1.0, 0.99, 3),
            (2.0, 0.25, 1e-9, 1),
        ] {
            let closed = return_sum_equal(lambda, t, p, k);
            let windows = vec![t; k as usize];
            let pfs = vec![p; k as usize];
            let series = return_sum_general(lambda, &windows, &pfs).unwrap();
            assert!((closed - series).abs() < 1e-12, "{lambda} {t} {p} {k}: {closed} vs {series}");
        }
        assert_eq!(return_sum_equal(0.01, 1.0, 0.0, 0), 0.0);
        assert!(return_sum_general(0.01, &[1.0], &[]).is_err());
    }

    #[test]
    fn no_window_false_alarms_telescopes() {
        let lambda = 0.01;
        let (t, m) = (1.0, 500u32);
        let t_si = t / f64::from(m);
        let s = return_sum_equal(lambda, t_si, 0.0, m as u64 + 1);
        assert!((s - forward_cdf(lambda, (f64::from(m) + 1.0) * t_si)).abs() < 1e-14);
    }

    #[test]
    fn single_window_ts_equals_to() {
        let m = model();
        let s = sense();
        for t in [0.2, 1.0, 5.0] {
            let ts = FrameSchedule::transmit_sense(5e-3, t, 0);
            let to = FrameSchedule::transmit_only(5e-3, t);
            let a = collision_ts_imperfect(&m, &ts, &s, &TsOptions::default()).unwrap();
            let b = collision_to_imperfect(&m, &to, &s).unwrap();
            assert!((a.total - b.total).abs() < 1e-14);
        }
    }

    #[test]
    fn breakdown_identity_and_ordering() {
        let m = model();
        let s = sense();
        let opts = TsOptions { window_threshold: WindowThreshold::TargetPf(0.004), ..Default::default() };
        let ts = FrameSchedule::transmit_sense(4e-3, 1.0, 500);
        let b = collision_ts_imperfect(&m, &ts, &s, &opts).unwrap();
        assert!((b.total * b.w - (b.term_a + b.term_b)).abs() < 1e-12);
        let to = collision_to_imperfect(&m, &ts.with_mode(Mode::TransmitOnly), &s).unwrap();
        assert!(b.total < to.total);
        assert_eq!(b.term_a, to.term_a);
        assert_eq!(b.w, to.w);
    }

    #[test]
    fn partition_sum_is_never_larger() {
        let m = model();
        let s = sense();
        let ts = FrameSchedule::transmit_sense(4e-3, 1.0, 500);
        for wt in [WindowThreshold::Shared, WindowThreshold::TargetPf(1e-4)] {
            let lit = TsOptions { b_sum: BSumMode::Literal, window_threshold: wt };
            let part = TsOptions { b_sum: BSumMode::Partition, window_threshold: wt };
            let a = collision_ts_imperfect(&m, &ts, &s, &lit).unwrap();
            let b = collision_ts_imperfect(&m, &ts, &s, &part).unwrap();
            assert!(b.term_b <= a.term_b);
        }
    }

    #[test]
    fn dispatch_by_mode() {
        let m = model();
        let s = sense();
        let o = TsOptions::default();
        let base = FrameSchedule::transmit_sense(4e-3, 1.0, 500);
        let q = SensingQuality::Imperfect;
        let to = collision(&m, &base.with_mode(Mode::TransmitOnly), &s, q, &o).unwrap();
        assert_eq!(to, collision_to_imperfect(&m, &base, &s).unwrap());
        let tr = collision(&m, &base.with_mode(Mode::TransmitReceive), &s, q, &o).unwrap();
        assert_eq!(tr, to);
        let ts = collision(&m, &base, &s, q, &o).unwrap();
        assert_eq!(ts, collision_ts_imperfect(&m, &base, &s, &o).unwrap());
    }

    #[test]
    fn schedule_validation() {
        assert!(FrameSchedule::transmit_sense(4e-3, 1.0, 500).validate().is_ok());
        assert!(FrameSchedule::transmit_only(0.0, 1.0).validate().is_err());
        let mut tr = FrameSchedule::transmit_receive(4e-3, 1.0);
        tr.t_r = 0.0;
        assert!(tr.validate().is_err());
        assert_eq!("TS".parse::<Mode>().unwrap(), Mode::TransmitSense);
        assert!("XX".parse::<Mode>().is_err());
    }
}
