use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::detector::{draw_metric, SampleGenerator};
use super::{binomial_std_err, check_trials, chunked, RngSeed};
use crate::dettheory::{self, Duplex, SampleCount, SensingConfig};
use crate::error::{ensure, Result};
use crate::outage::{self, BSumMode, FrameSchedule, Mode, SensingQuality, TsOptions};
use crate::throughput::{self, LinkModel, ReverseDuty};
use crate::traffic::{on_rate, TrafficModel};

/// How sensing verdicts are produced in the frame-level simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorModel {
    /// Bernoulli verdicts with the closed-form `P_d` / `P_f`.
    #[default]
    Analytic,
    /// Verdicts from simulated sample statistics.
    Sampled(SampleGenerator),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSimConfig {
    pub frames: u64,
    pub seed: RngSeed,
    pub detector: DetectorModel,
    pub quality: SensingQuality,
    pub ts: TsOptions,
    pub reverse_duty: ReverseDuty,
}

impl SystemSimConfig {
    pub fn new(frames: u64, seed: u64) -> Self {
        Self {
            frames,
            seed: RngSeed(seed),
            detector: DetectorModel::Analytic,
            quality: SensingQuality::Imperfect,
            ts: TsOptions::default(),
            reverse_duty: ReverseDuty::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemTrialResult {
    pub frames: u64,
    pub attempts: u64,
    pub collisions: u64,
    /// `collisions / attempts`.
    pub collision_rate: f64,
    pub std_err: f64,
    /// Mode throughput evaluated at the simulated collision rate (bits/s/Hz).
    pub throughput_estimate: f64,
    /// Collision-free air time per attempt, scaled by the collision-free mode throughput.
    pub realized_throughput: f64,
    /// Total SU/PU overlap over all frames (s).
    pub overlap_time_total: f64,
    /// Largest overlap within one frame (s).
    pub max_overlap: f64,
    /// Transmissions stopped early by a busy window verdict (TS only).
    pub aborts: u64,
}

/// ON intervals `[start, end)` of the PU within `[0, horizon)`, starting ON or OFF at time 0.
pub fn on_intervals<R: Rng>(rng: &mut R, model: &TrafficModel, start_on: bool, horizon: f64) -> Vec<(f64, f64)> {
    let off = Exp::new(model.lambda_off).expect("positive OFF rate");
    let on = Exp::new(on_rate(model)).expect("positive ON rate");
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut is_on = start_on;
    while t < horizon {
        let d = if is_on { on.sample(rng) } else { off.sample(rng) };
        if is_on {
            out.push((t, (t + d).min(horizon)));
        }
        t += d;
        is_on = !is_on;
    }
    out
}

fn overlap(intervals: &[(f64, f64)], from: f64, to: f64) -> f64 {
    intervals.iter().map(|&(a, b)| (b.min(to) - a.max(from)).max(0.0)).sum()
}

/// Verdict probabilities and sample counts resolved once per run.
struct Plan {
    mode: Mode,
    t: f64,
    t_si: f64,
    windows: u64,
    beta: f64,
    pd0: f64,
    pf0: f64,
    pdw: f64,
    pfw: f64,
    gamma_w: f64,
    n0: u64,
    nw: u64,
}

#[derive(Default)]
struct Tally {
    attempts: u64,
    collisions: u64,
    aborts: u64,
    overlap: f64,
    max_overlap: f64,
    clean_time: f64,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.attempts += o.attempts;
        self.collisions += o.collisions;
        self.aborts += o.aborts;
        self.overlap += o.overlap;
        self.max_overlap = self.max_overlap.max(o.max_overlap);
        self.clean_time += o.clean_time;
        self
    }
}

struct Frame<'a> {
    model: &'a TrafficModel,
    sense: &'a SensingConfig,
    plan: &'a Plan,
    quality: SensingQuality,
    detector: DetectorModel,
}

impl Frame<'_> {
    /// Initial half-duplex verdict given the PU state, which is held for the whole sensing period.
    fn initial_busy<R: Rng>(&self, rng: &mut R, on: bool) -> bool {
        match (self.quality, self.detector) {
            (SensingQuality::Perfect, _) => on,
            (_, DetectorModel::Analytic) => rng.gen_bool(if on { self.plan.pd0 } else { self.plan.pf0 }),
            (_, DetectorModel::Sampled(g)) => {
                let n = self.plan.n0;
                let m = draw_metric(rng, self.sense, sample_count(n), if on { n } else { 0 }, Duplex::Half, g);
                m > self.sense.gamma
            }
        }
    }

    /// Full-duplex verdict of the window `[a, b)`.
    fn window_busy<R: Rng>(&self, rng: &mut R, ivs: &[(f64, f64)], a: f64, b: f64) -> bool {
        let active = overlap(ivs, a, b);
        match (self.quality, self.detector) {
            (SensingQuality::Perfect, _) => active > 0.0,
            (_, DetectorModel::Analytic) => rng.gen_bool(if active > 0.0 { self.plan.pdw } else { self.plan.pfw }),
            (_, DetectorModel::Sampled(g)) => {
                let n = self.plan.nw;
                let pu = ((active / (b - a)) * n as f64).round() as u64;
                let pu = if active > 0.0 { pu.max(1) } else { 0 };
                let sense = self.sense.with_gamma(self.plan.gamma_w);
                draw_metric(rng, &sense, sample_count(n), pu, Duplex::Full, g) > sense.gamma
            }
        }
    }

    /// Index of the first false alarm among PU-free windows, if it comes before `limit`.
    fn first_false_alarm<R: Rng>(&self, rng: &mut R, ivs: &[(f64, f64)], limit: u64) -> Option<u64> {
        match (self.quality, self.detector) {
            (SensingQuality::Perfect, _) => None,
            (_, DetectorModel::Analytic) => {
                // geometric skip over the idle windows instead of one draw per window
                let p = self.plan.pfw;
                if p <= 0.0 {
                    return None;
                }
                if p >= 1.0 {
                    return (limit > 0).then_some(0);
                }
                let u: f64 = rng.gen();
                let k = ((1.0 - u).ln() / (-p).ln_1p()).floor();
                (k < limit as f64).then_some(k as u64)
            }
            (_, DetectorModel::Sampled(_)) => {
                let w = self.plan.t_si;
                (0..limit).find(|&i| self.window_busy(rng, ivs, i as f64 * w, (i + 1) as f64 * w))
            }
        }
    }

    /// Simulates one frame and adds it to the tally.
    fn run<R: Rng>(&self, rng: &mut R, tally: &mut Tally) {
        let on = rng.gen_bool(self.plan.beta);
        if self.initial_busy(rng, on) {
            return;
        }
        tally.attempts += 1;
        let plan = self.plan;
        let (ivs, end) = match plan.mode {
            Mode::TransmitOnly | Mode::TransmitReceive => (on_intervals(rng, self.model, on, plan.t), plan.t),
            Mode::TransmitSense => {
                let horizon = plan.windows as f64 * plan.t_si;
                let ivs = on_intervals(rng, self.model, on, horizon);
                let onset = ivs.first().map_or(plan.windows, |iv| ((iv.0 / plan.t_si) as u64).min(plan.windows));
                let stop = match self.first_false_alarm(rng, &ivs, onset) {
                    Some(i) => Some(i),
                    None => (onset..plan.windows)
                        .find(|&i| self.window_busy(rng, &ivs, i as f64 * plan.t_si, (i + 1) as f64 * plan.t_si)),
                };
                match stop {
                    Some(i) => {
                        tally.aborts += 1;
                        (ivs, (i + 1) as f64 * plan.t_si)
                    }
                    None => (ivs, horizon),
                }
            }
        };
        let ov = overlap(&ivs, 0.0, end);
        if ov > 0.0 {
            tally.collisions += 1;
            tally.overlap += ov;
            tally.max_overlap = tally.max_overlap.max(ov);
        } else {
            tally.clean_time += end.min(plan.t) / plan.t;
        }
    }
}

fn sample_count(n: u64) -> SampleCount {
    SampleCount::new(n).expect("sample counts are checked when the plan is built")
}

fn plan(model: &TrafficModel, sched: &FrameSchedule, sense: &SensingConfig, cfg: &SystemSimConfig) -> Result<Plan> {
    let sampled = matches!(cfg.detector, DetectorModel::Sampled(_));
    let n0 = if sampled { sense.samples(sched.t_s0)?.get() } else { 0 };
    let mut p = Plan {
        mode: sched.mode,
        t: sched.t,
        t_si: sched.t_si,
        windows: 0,
        beta: model.beta,
        pd0: dettheory::pd_hd(sense, sched.t_s0)?,
        pf0: dettheory::pf_hd(sense, sched.t_s0)?,
        pdw: 0.0,
        pfw: 0.0,
        gamma_w: sense.gamma,
        n0,
        nw: 0,
    };
    if sched.mode == Mode::TransmitSense {
        p.windows = match cfg.ts.b_sum {
            BSumMode::Literal => sched.m as u64 + 1,
            BSumMode::Partition => (sched.m as u64).max(1),
        };
        p.gamma_w = outage::window_gamma(sense, sched.t_si, cfg.ts.window_threshold)?;
        let ws = sense.with_gamma(p.gamma_w);
        p.pdw = dettheory::pd_fd(&ws, sched.t_si)?;
        p.pfw = dettheory::pf_fd(&ws, sched.t_si)?;
        if sampled {
            p.nw = sense.samples(sched.t_si)?.get();
        }
    }
    Ok(p)
}

/// Frame-level Monte Carlo of PU activity and SU behaviour in one mode.
///
/// Every frame restarts the PU process from stationarity: the PU is ON at the end of the initial
/// sensing with probability `β`, and the remaining ON/OFF periods are exponential. TS transmissions
/// stop at the end of the first window declared busy. A collision is any overlap between the SU
/// transmission and PU activity.
pub fn simulate_system(
    model: &TrafficModel,
    sched: &FrameSchedule,
    sense: &SensingConfig,
    link: &LinkModel,
    cfg: &SystemSimConfig,
) -> Result<SystemTrialResult> {
    check_trials(cfg.frames)?;
    model.validate()?;
    sched.validate()?;
    sense.validate()?;
    link.validate()?;
    ensure(sched.mode != Mode::TransmitSense || sched.t_si > 0.0, || "TS windows must be positive".into())?;
    let plan = plan(model, sched, sense, cfg)?;
    let frame = Frame { model, sense, plan: &plan, quality: cfg.quality, detector: cfg.detector };
    let tally = chunked(cfg.seed, cfg.frames, |rng, count| {
        let mut t = Tally::default();
        for _ in 0..count {
            frame.run(rng, &mut t);
        }
        t
    })
    .into_iter()
    .fold(Tally::default(), Tally::merge);

    let (rate, std_err) = if tally.attempts == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let r = tally.collisions as f64 / tally.attempts as f64;
        (r, binomial_std_err(r, tally.attempts))
    };
    let mode_rate = |p: f64| -> Result<f64> {
        Ok(match sched.mode {
            Mode::TransmitReceive => throughput::rate_tr(link, sched, p, cfg.reverse_duty)?.value,
            _ => throughput::rate_to(link, sched, p)?.value,
        })
    };
    let clean = mode_rate(0.0)?;
    let (throughput_estimate, realized_throughput) = if tally.attempts == 0 {
        (0.0, 0.0)
    } else {
        (mode_rate(rate)?, clean * tally.clean_time / tally.attempts as f64)
    };
    Ok(SystemTrialResult {
        frames: cfg.frames,
        attempts: tally.attempts,
        collisions: tally.collisions,
        collision_rate: rate,
        std_err,
        throughput_estimate,
        realized_throughput,
        overlap_time_total: tally.overlap,
        max_overlap: tally.max_overlap,
        aborts: tally.aborts,
    })
}
