//! SU throughput of the TO, TS and TR modes over a path-loss link.
//!
//! Throughput is `(1 - P_collision) · duty · log2(1 + SNR)` in bits/s/Hz, where the duty factor
//! `T / (T + T_S0)` charges the initial sensing period. In TR both nodes transmit, so each receiver
//! sees its own residual self-interference `χ² P` (the self channel has unit gain).

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::outage::{CollisionBreakdown, FrameSchedule};

/// Two-node SU link `i ↔ j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    /// Transmit power of node i (W).
    pub p_i: f64,
    /// Transmit power of node j (W).
    pub p_j: f64,
    /// Distance i → j (m).
    pub d_ij: f64,
    /// Distance j → i (m).
    pub d_ji: f64,
    /// Path-loss constant.
    pub c: f64,
    /// Path-loss exponent.
    pub eta: f64,
    /// Noise variance at node i (W).
    pub sigma_i2: f64,
    /// Noise variance at node j (W).
    pub sigma_j2: f64,
    pub chi_i: f64,
    pub chi_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// From node i to node j.
    IJ,
    /// From node j to node i.
    JI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    I,
    J,
}

impl LinkModel {
    /// Symmetric link (equal powers, noise, distances and SIS factors) with the given forward SNR
    /// and self-interference-to-noise ratio `P/σ²`, both linear. The distance is solved from the
    /// path-loss law.
    pub fn symmetric_from_snr(snr: f64, si_to_noise: f64, chi: f64, power: f64, c: f64, eta: f64) -> Result<Self> {
        ensure(snr > 0.0 && si_to_noise > 0.0, || "link SNRs must be positive".to_string())?;
        ensure(power > 0.0 && c > 0.0 && eta > 0.0, || "power, C and eta must be positive".to_string())?;
        let sigma2 = power / si_to_noise;
        let gain = (snr / si_to_noise).sqrt();
        let d = (c / gain).powf(1.0 / eta);
        let link = Self {
            p_i: power,
            p_j: power,
            d_ij: d,
            d_ji: d,
            c,
            eta,
            sigma_i2: sigma2,
            sigma_j2: sigma2,
            chi_i: chi,
            chi_j: chi,
        };
        link.validate()?;
        Ok(link)
    }

    pub fn with_chi(&self, chi: f64) -> Self {
        Self { chi_i: chi, chi_j: chi, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_i", self.p_i),
            ("p_j", self.p_j),
            ("d_ij", self.d_ij),
            ("d_ji", self.d_ji),
            ("c", self.c),
            ("eta", self.eta),
            ("sigma_i2", self.sigma_i2),
            ("sigma_j2", self.sigma_j2),
        ];
        for (name, v) in positive {
            ensure(v > 0.0 && v.is_finite(), || format!("{name} must be positive, got {v}"))?;
        }
        for (name, v) in [("chi_i", self.chi_i), ("chi_j", self.chi_j)] {
            ensure((0.0..=1.0).contains(&v), || format!("{name} must be in [0, 1], got {v}"))?;
        }
        Ok(())
    }
}

/// Path-loss gain `C · d^{-η}` of the cross link in `dir`.
pub fn channel_gain(link: &LinkModel, dir: Direction) -> f64 {
    let d = match dir {
        Direction::IJ => link.d_ij,
        Direction::JI => link.d_ji,
    };
    link.c * d.powf(-link.eta)
}

/// Gain of a node's own transmitter into its receiver; path loss is ignored at that range.
pub const SELF_CHANNEL_GAIN: f64 = 1.0;

/// Half-duplex SNR at node j for a transmission from node i.
pub fn snr_to(link: &LinkModel) -> f64 {
    let h = channel_gain(link, Direction::IJ);
    link.p_i * h * h / link.sigma_j2
}

/// Half-duplex SNR at node i for a transmission from node j.
pub fn snr_to_reverse(link: &LinkModel) -> f64 {
    let h = channel_gain(link, Direction::JI);
    link.p_j * h * h / link.sigma_i2
}

/// SINR at a receiving node while both nodes transmit.
pub fn snr_tr(link: &LinkModel, at: Node) -> f64 {
    let self_gain2 = SELF_CHANNEL_GAIN * SELF_CHANNEL_GAIN;
    match at {
        Node::J => {
            let h = channel_gain(link, Direction::IJ);
            link.p_i * h * h / (link.sigma_j2 + link.chi_j * link.chi_j * link.p_j * self_gain2)
        }
        Node::I => {
            let h = channel_gain(link, Direction::JI);
            link.p_j * h * h / (link.sigma_i2 + link.chi_i * link.chi_i * link.p_i * self_gain2)
        }
    }
}

/// `log2(1 + SNR_TO)`.
pub fn capacity_to(link: &LinkModel) -> f64 {
    snr_to(link).ln_1p() / std::f64::consts::LN_2
}

/// `log2(1 + SNR_TR(j)) + log2(1 + SNR_TR(i))`.
pub fn capacity_tr(link: &LinkModel) -> f64 {
    (snr_tr(link, Node::J).ln_1p() + snr_tr(link, Node::I).ln_1p()) / std::f64::consts::LN_2
}

/// Spectral efficiency of one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    /// Total throughput (bits/s/Hz).
    pub value: f64,
    /// Component carried i → j.
    pub forward: f64,
    /// Component carried j → i (TR only).
    pub reverse: f64,
    /// Collision probability used.
    pub collision_prob: f64,
}

/// Duty factor applied to the TR reverse direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverseDuty {
    /// `T_R / (T_R + T_S0)`.
    #[default]
    OwnFrame,
    /// `T_R / (T + T_S0)`, i.e. the reception shares the forward frame.
    SharedFrame,
}

fn duty(active: f64, t_s0: f64) -> f64 {
    if active <= 0.0 {
        0.0
    } else {
        active / (active + t_s0)
    }
}

fn check_prob(p: f64) -> Result<()> {
    ensure((0.0..=1.0).contains(&p), || format!("collision probability must be in [0, 1], got {p}"))
}

/// TO throughput for a given collision probability.
pub fn rate_to(link: &LinkModel, sched: &FrameSchedule, collision_prob: f64) -> Result<ThroughputReport> {
    check_prob(collision_prob)?;
    let forward = (1.0 - collision_prob) * duty(sched.t, sched.t_s0) * capacity_to(link);
    Ok(ThroughputReport { value: forward, forward, reverse: 0.0, collision_prob })
}

/// TS throughput; the in-transmission windows run in parallel, so only the collision term differs
/// from TO.
pub fn rate_ts(link: &LinkModel, sched: &FrameSchedule, collision: &CollisionBreakdown) -> Result<ThroughputReport> {
    rate_to(link, sched, collision.total)
}

/// TR throughput: forward and reverse directions summed, each with its self-interference SINR.
pub fn rate_tr(
    link: &LinkModel,
    sched: &FrameSchedule,
    collision_prob: f64,
    reverse_duty: ReverseDuty,
) -> Result<ThroughputReport> {
    check_prob(collision_prob)?;
    if sched.t_r <= 0.0 {
        // nothing comes back, so node j never transmits and i → j is a plain TO link
        return rate_to(link, sched, collision_prob);
    }
    let ok = 1.0 - collision_prob;
    let forward = ok * duty(sched.t, sched.t_s0) * snr_tr(link, Node::J).ln_1p() / std::f64::consts::LN_2;
    let rev_duty = match reverse_duty {
        ReverseDuty::OwnFrame => duty(sched.t_r, sched.t_s0),
        ReverseDuty::SharedFrame => sched.t_r / (sched.t + sched.t_s0),
    };
    let reverse = ok * rev_duty * snr_tr(link, Node::I).ln_1p() / std::f64::consts::LN_2;
    Ok(ThroughputReport { value: forward + reverse, forward, reverse, collision_prob })
}
