//! Throughput formulas: recomputed SINR, limiting cases and sweep shapes.

use fdcr::cli::config;
use fdcr::dettheory::SensingConfig;
use fdcr::outage::{self, FrameSchedule, SensingQuality, TsOptions};
use fdcr::sim::{self, SystemSimConfig};
use fdcr::throughput::{self, LinkModel, Node, ReverseDuty};
use fdcr::traffic::TrafficModel;
use proptest::prelude::*;

fn preset() -> (SensingConfig, LinkModel, TrafficModel) {
    let cfg = config::load("experiment = \"simulate\"", Some(config::PRESET_SECTION_6)).unwrap();
    (cfg.sensing, cfg.link.unwrap(), cfg.traffic.unwrap())
}

#[test]
fn preset_snr_is_15_db() {
    let (_, link, _) = preset();
    assert!((throughput::snr_to(&link) - 10f64.powf(1.5)).abs() < 1e-9);
    assert!((throughput::snr_to_reverse(&link) - 10f64.powf(1.5)).abs() < 1e-9);
}

#[test]
fn tr_sinr_recomputed_from_the_link() {
    let (_, link, _) = preset();
    assert_eq!(link.chi_i, 0.235);
    // P |C d^-η|² / (σ² + χ² P), self channel of unit gain
    let h = link.c / link.d_ij.powf(link.eta);
    let want = link.p_i * h * h / (link.sigma_j2 + 0.235 * 0.235 * link.p_j);
    let got = throughput::snr_tr(&link, Node::J);
    assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
    assert!(got < throughput::snr_to(&link));
}

#[test]
fn full_self_interference_makes_tr_lose() {
    let link = LinkModel::symmetric_from_snr(10f64.powf(1.5), 1e6, 1.0, 1.0, 1.0, 4.0).unwrap();
    let sched = FrameSchedule::transmit_receive(4e-3, 1.0);
    let tr = throughput::rate_tr(&link, &sched, 0.02, ReverseDuty::OwnFrame).unwrap();
    let to = throughput::rate_to(&link, &sched, 0.02).unwrap();
    assert!(tr.value < to.value, "{} vs {}", tr.value, to.value);
}

#[test]
fn rate_over_t_rises_then_falls() {
    let (sense, link, model) = preset();
    let rates: Vec<f64> = fdcr::optimize::log_grid(0.01, 100.0, 81)
        .into_iter()
        .map(|t| {
            let sched = FrameSchedule::transmit_only(4e-3, t);
            let p = outage::collision_to_imperfect(&model, &sched, &sense).unwrap().total;
            throughput::rate_to(&link, &sched, p).unwrap().value
        })
        .collect();
    let peak = rates.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(peak > 0 && peak < rates.len() - 1, "peak at index {peak}");
    assert!(rates[..=peak].windows(2).all(|w| w[1] >= w[0]));
    assert!(rates[peak..].windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn estimate_matches_simulator_within_two_percent() {
    let (sense, link, model) = preset();
    let sched = FrameSchedule::transmit_only(4e-3, 1.0);
    let p = outage::collision_to_imperfect(&model, &sched, &sense).unwrap().total;
    let analytic = throughput::rate_to(&link, &sched, p).unwrap().value;
    let r = sim::simulate_system(&model, &sched, &sense, &link, &SystemSimConfig::new(100_000, 91)).unwrap();
    assert!(((r.throughput_estimate - analytic) / analytic).abs() <= 0.02, "{} vs {analytic}", r.throughput_estimate);

    let sched = FrameSchedule::transmit_sense(4e-3, 1.0, 500);
    let mut cfg = SystemSimConfig::new(100_000, 92);
    cfg.quality = SensingQuality::Imperfect;
    cfg.ts = TsOptions { window_threshold: outage::WindowThreshold::TargetPf(0.004), ..TsOptions::default() };
    let c = outage::collision_ts_imperfect(&model, &sched, &sense, &cfg.ts).unwrap();
    let analytic = throughput::rate_ts(&link, &sched, &c).unwrap().value;
    let r = sim::simulate_system(&model, &sched, &sense, &link, &cfg).unwrap();
    assert!(((r.throughput_estimate - analytic) / analytic).abs() <= 0.02, "{} vs {analytic}", r.throughput_estimate);
}

#[test]
fn tr_without_reception_is_to() {
    let (_, link, _) = preset();
    let mut sched = FrameSchedule::transmit_receive(4e-3, 1.0);
    sched.t_r = 0.0;
    let tr = throughput::rate_tr(&link, &sched, 0.1, ReverseDuty::OwnFrame).unwrap();
    assert_eq!(tr.value, throughput::rate_to(&link, &sched, 0.1).unwrap().value);
    assert!(throughput::rate_to(&link, &sched, 1.5).is_err());
}

fn link() -> impl Strategy<Value = LinkModel> {
    (1.0..1e4f64, 1.0..1e6f64, 0.0..=1.0f64, 0.1..10.0f64, 2.0..6.0f64)
        .prop_map(|(snr, si, chi, p, eta)| LinkModel::symmetric_from_snr(snr, si, chi, p, 1.0, eta).unwrap())
}

proptest! {
    #[test]
    fn tr_is_forward_plus_reverse(link in link(), t_s0 in 1e-3..0.05f64, t in 0.01..20.0f64, t_r in 0.01..20.0f64, p in 0.0..=1.0f64, shared in any::<bool>()) {
        let mut sched = FrameSchedule::transmit_receive(t_s0, t);
        sched.t_r = t_r;
        let duty = if shared { ReverseDuty::SharedFrame } else { ReverseDuty::OwnFrame };
        let r = throughput::rate_tr(&link, &sched, p, duty).unwrap();
        prop_assert!(r.value >= 0.0 && r.forward >= 0.0 && r.reverse >= 0.0);
        prop_assert!((r.value - (r.forward + r.reverse)).abs() <= 1e-12);
    }

    #[test]
    fn perfect_cancellation_doubles_the_rate(link in link(), t_s0 in 1e-3..0.05f64, t in 0.01..20.0f64, p in 0.0..=1.0f64) {
        let link = link.with_chi(0.0);
        let sched = FrameSchedule::transmit_receive(t_s0, t);
        let tr = throughput::rate_tr(&link, &sched, p, ReverseDuty::OwnFrame).unwrap().value;
        let to = throughput::rate_to(&link, &sched, p).unwrap().value;
        prop_assert!((tr - 2.0 * to).abs() <= 1e-12 * to.max(1.0));
    }

    #[test]
    fn tr_rate_does_not_grow_with_chi(link in link(), t_s0 in 1e-3..0.05f64, t in 0.01..20.0f64, p in 0.0..=1.0f64, c in 0.0..1.0f64, dc in 0.0..0.5f64) {
        let sched = FrameSchedule::transmit_receive(t_s0, t);
        let lo = throughput::rate_tr(&link.with_chi(c), &sched, p, ReverseDuty::OwnFrame).unwrap().value;
        let hi = throughput::rate_tr(&link.with_chi((c + dc).min(1.0)), &sched, p, ReverseDuty::OwnFrame).unwrap().value;
        prop_assert!(hi <= lo);
    }
}
