//! Grid optimizer checked against an independent exhaustive loop and known limiting cases.

use fdcr::cli::config;
use fdcr::dettheory::SensingConfig;
use fdcr::optimize::{self, linear_grid, log_grid, Action, Constraints, SearchOptions, SearchSpace, WindowPolicy};
use fdcr::outage::{self, BSumMode, FrameSchedule, TsOptions, WindowThreshold};
use fdcr::throughput::{self, LinkModel, ReverseDuty};
use fdcr::traffic::TrafficModel;

fn preset() -> (SensingConfig, LinkModel, TrafficModel) {
    let cfg = config::load("experiment = \"optimize-p1\"", Some(config::PRESET_SECTION_6)).unwrap();
    (cfg.sensing, cfg.link.unwrap(), cfg.traffic.unwrap())
}

fn opts() -> SearchOptions {
    SearchOptions {
        ts: TsOptions { b_sum: BSumMode::Literal, window_threshold: WindowThreshold::TargetPf(0.004) },
        ..SearchOptions::default()
    }
}

fn coarse(refinement: u32) -> SearchSpace {
    SearchSpace {
        t_s0_grid: log_grid(1e-3, 5e-2, 15),
        t_grid: log_grid(0.05, 20.0, 15),
        windows: WindowPolicy::EqualWindows { m: 500 },
        refinement,
    }
}

/// (rate, collision) of TS and TR at one point, recomputed from the module formulas.
fn evaluate(model: &TrafficModel, sense: &SensingConfig, link: &LinkModel, t_s0: f64, t: f64) -> [(f64, f64); 2] {
    let ts = FrameSchedule::transmit_sense(t_s0, t, 500);
    let c = outage::collision_ts_imperfect(model, &ts, sense, &opts().ts).unwrap();
    let r_ts = throughput::rate_ts(link, &ts, &c).unwrap().value;
    let tr = FrameSchedule::transmit_receive(t_s0, t);
    let p = outage::collision_to_imperfect(model, &tr, sense).unwrap().total;
    let r_tr = throughput::rate_tr(link, &tr, p, ReverseDuty::OwnFrame).unwrap().value;
    [(r_ts, c.total), (r_tr, p)]
}

#[test]
fn no_feasible_grid_point_beats_the_optimum() {
    let (sense, link, model) = preset();
    for constraint in [0.02, 0.04, 0.2] {
        let space = coarse(0);
        let p1 = optimize::solve_p1(&model, &sense, &link, &space, constraint, &opts()).unwrap();
        let p2 = optimize::solve_p2(&model, &sense, &link, &space, constraint, &opts()).unwrap();
        let mut best = [f64::NEG_INFINITY; 2];
        for &a in &space.t_s0_grid {
            for &b in &space.t_grid {
                for (k, (rate, col)) in evaluate(&model, &sense, &link, a, b).into_iter().enumerate() {
                    if col <= constraint {
                        best[k] = best[k].max(rate);
                    }
                }
            }
        }
        assert!(p1.feasible && p2.feasible);
        assert_eq!(p1.rate_star, best[0], "P1 at constraint {constraint}");
        assert_eq!(p2.rate_star, best[1], "P2 at constraint {constraint}");
        assert!(p1.collision_at_opt <= constraint + 1e-12 && p2.collision_at_opt <= constraint + 1e-12);

        let refined = optimize::solve_p1(&model, &sense, &link, &coarse(2), constraint, &opts()).unwrap();
        assert!(refined.rate_star >= p1.rate_star && refined.collision_at_opt <= constraint + 1e-12);
        let [(rate, col), _] = evaluate(&model, &sense, &link, refined.t_s0_star, refined.t_star);
        assert_eq!((rate, col), (refined.rate_star, refined.collision_at_opt));
    }
}

#[test]
fn search_is_deterministic() {
    let (sense, link, model) = preset();
    let a = optimize::solve_p3(&model, &sense, &link, &coarse(2), Constraints::both(0.04), &opts()).unwrap();
    let b = optimize::solve_p3(&model, &sense, &link, &coarse(2), Constraints::both(0.04), &opts()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unit_constraint_is_the_unconstrained_maximum() {
    let (sense, link, model) = preset();
    let space = coarse(0);
    let p1 = optimize::solve_p1(&model, &sense, &link, &space, 1.0, &opts()).unwrap();
    let best = space
        .t_s0_grid
        .iter()
        .flat_map(|&a| space.t_grid.iter().map(move |&b| (a, b)))
        .map(|(a, b)| evaluate(&model, &sense, &link, a, b)[0].0)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(p1.rate_star, best);
}

#[test]
fn unreachable_constraint_is_flagged() {
    let (sense, link, model) = preset();
    let p1 = optimize::solve_p1(&model, &sense, &link, &coarse(2), 1e-9, &opts()).unwrap();
    assert!(!p1.feasible);
    assert!(p1.collision_at_opt > 1e-9);
    assert!(optimize::solve_p1(&model, &sense, &link, &coarse(0), 0.0, &opts()).is_err());
    let mut bad = coarse(0);
    bad.t_grid = vec![1.0, 0.5];
    assert!(optimize::solve_p1(&model, &sense, &link, &bad, 0.04, &opts()).is_err());
}

#[test]
fn perfect_cancellation_never_switches_to_ts() {
    let (sense, link, model) = preset();
    let link = link.with_chi(0.0);
    let r = optimize::find_beta_star(
        &model,
        &sense,
        &link,
        &coarse(1),
        Constraints::both(0.04),
        &linear_grid(0.02, 0.98, 10),
        &opts(),
    )
    .unwrap();
    assert!(!r.crossed && r.crossings.is_empty());
    assert!(r.decisions.iter().all(|d| d.action == Action::TransmitReceive), "{:?}", r.decisions);
}

#[test]
fn light_load_prefers_transmit_receive() {
    let (sense, link, model) = preset();
    let space = SearchSpace::log((1e-3, 5e-2), (0.05, 20.0), 500, 2);
    let d = optimize::solve_p3(&model.with_beta(0.3), &sense, &link, &space, Constraints::both(0.04), &opts()).unwrap();
    assert_eq!(d.action, Action::TransmitReceive, "{d:?}");
}

#[test]
fn single_load_reports_no_crossing() {
    let (sense, link, model) = preset();
    let r =
        optimize::find_beta_star(&model, &sense, &link, &coarse(0), Constraints::both(0.04), &[0.5], &opts()).unwrap();
    assert!(!r.crossed && r.crossings.is_empty() && r.interpolated.is_none() && !r.single_crossing());
    assert_eq!(r.decisions.len(), 1);
    assert!(optimize::find_beta_star(&model, &sense, &link, &coarse(0), Constraints::both(0.04), &[], &opts()).is_err());
}

#[test]
fn p2_without_self_interference_shares_the_to_optimum() {
    let (sense, link, model) = preset();
    let link = link.with_chi(0.0);
    let space = coarse(0);
    let p2 = optimize::solve_p2(&model, &sense, &link, &space, 0.04, &opts()).unwrap();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for &a in &space.t_s0_grid {
        for &b in &space.t_grid {
            let sched = FrameSchedule::transmit_only(a, b);
            let p = outage::collision_to_imperfect(&model, &sched, &sense).unwrap().total;
            let r = throughput::rate_to(&link, &sched, p).unwrap().value;
            if p <= 0.04 && r > best.0 {
                best = (r, a, b);
            }
        }
    }
    assert_eq!((p2.t_s0_star, p2.t_star), (best.1, best.2));
    assert!((p2.rate_star - 2.0 * best.0).abs() < 1e-12);
}

#[test]
fn ties_go_to_ts() {
    let (sense, link, model) = preset();
    let ts = optimize::solve_p1(&model, &sense, &link, &coarse(0), 0.04, &opts()).unwrap();
    let d = optimize::decide(0.5, ts, ts);
    assert_eq!(d.action, Action::TransmitSense);
    assert_eq!((Action::TransmitSense.code(), Action::TransmitReceive.code()), (0, 1));
}
