//! Constrained grid search over the initial sensing duration `t_s0` and the transmission
//! duration `T`.
//!
//! The TS and TR objectives are nonconvex in `(t_s0, T)`, so the search is exhaustive on a coarse
//! grid followed by zoom passes around the incumbent. All reductions are sequential in grid order,
//! so results do not depend on how candidate evaluations are scheduled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dettheory::{self, Duplex, SensingConfig};
use crate::error::{ensure, Error, Result};
use crate::outage::{self, FrameSchedule, TsOptions};
use crate::throughput::{self, LinkModel, ReverseDuty};
use crate::traffic::TrafficModel;

/// Points inserted per coarse spacing by one zoom pass.
const ZOOM: usize = 10;

/// `n` log-spaced points from `start` to `stop` inclusive.
pub fn log_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    let (a, b) = (start.ln(), stop.ln());
    (0..n)
        .map(|k| match k {
            0 => start,
            k if k == n - 1 => stop,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect()
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linear_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|k| match k {
            k if k == n - 1 => stop,
            k => start + (stop - start) * k as f64 / (n - 1) as f64,
        })
        .collect()
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    ensure(!grid.is_empty(), || format!("{name} grid is empty"))?;
    ensure(grid.iter().all(|&v| v > 0.0 && v.is_finite()), || format!("{name} grid must be positive"))?;
    ensure(grid.windows(2).all(|w| w[0] < w[1]), || format!("{name} grid must be strictly increasing"))
}

/// How the TS in-transmission windows scale with `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindowPolicy {
    /// `m` equal windows partitioning `T`.
    EqualWindows { m: u32 },
    /// Windows of fixed length; their number follows `T`.
    FixedWindow { t_si: f64 },
}

impl WindowPolicy {
    pub fn schedule(&self, t_s0: f64, t: f64) -> FrameSchedule {
        match *self {
            WindowPolicy::EqualWindows { m } => FrameSchedule::transmit_sense(t_s0, t, m),
            WindowPolicy::FixedWindow { t_si } => {
                let m = (t / t_si).round().max(1.0) as u32;
                let mut s = FrameSchedule::transmit_sense(t_s0, t, m);
                s.t_si = t_si;
                s
            }
        }
    }
}

/// How the initial-sensing threshold is chosen for each candidate `t_s0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum GammaPolicy {
    /// Use the template's `gamma` everywhere.
    #[default]
    Fixed,
    /// Re-derive `gamma` so the initial HD sensing has this false-alarm probability.
    TargetPf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub t_s0_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub windows: WindowPolicy,
    /// Number of zoom passes around the incumbent.
    pub refinement: u32,
}

impl SearchSpace {
    /// Default 40×40 log grid.
    pub fn log(t_s0: (f64, f64), t: (f64, f64), m: u32, refinement: u32) -> Self {
        Self {
            t_s0_grid: log_grid(t_s0.0, t_s0.1, 40),
            t_grid: log_grid(t.0, t.1, 40),
            windows: WindowPolicy::EqualWindows { m },
            refinement,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid("t_s0", &self.t_s0_grid)?;
        check_grid("T", &self.t_grid)?;
        if let WindowPolicy::FixedWindow { t_si } = self.windows {
            ensure(t_si > 0.0, || format!("window length must be positive, got {t_si}"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchOptions {
    pub ts: TsOptions,
    pub gamma: GammaPolicy,
    pub reverse_duty: ReverseDuty,
}

/// Best grid point found by a search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub t_s0_star: f64,
    pub t_star: f64,
    pub rate_star: f64,
    pub collision_at_opt: f64,
    /// False when no grid point met the constraint; the other fields then describe the point
    /// with the smallest collision probability.
    pub feasible: bool,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    rate: f64,
    collision: f64,
}

fn sensing_for(sense: &SensingConfig, t_s0: f64, policy: GammaPolicy) -> Result<SensingConfig> {
    match policy {
        GammaPolicy::Fixed => Ok(*sense),
        GammaPolicy::TargetPf(p) => Ok(sense.with_gamma(dettheory::threshold_for_pf(sense, t_s0, p, Duplex::Half)?)),
    }
}

/// Objective of one mode at one grid point.
trait Objective: Sync {
    fn eval(&self, t_s0: f64, t: f64) -> Result<Candidate>;
}

struct TsObjective<'a> {
    model: &'a TrafficModel,
    sense: &'a SensingConfig,
    link: &'a LinkModel,
    windows: WindowPolicy,
    opts: SearchOptions,
}

impl Objective for TsObjective<'_> {
    fn eval(&self, t_s0: f64, t: f64) -> Result<Candidate> {
        let sense = sensing_for(self.sense, t_s0, self.opts.gamma)?;
        let sched = self.windows.schedule(t_s0, t);
        let col = outage::collision_ts_imperfect(self.model, &sched, &sense, &self.opts.ts)?;
        let r = throughput::rate_ts(self.link, &sched, &col)?;
        Ok(Candidate { rate: r.value, collision: col.total })
    }
}

struct TrObjective<'a> {
    model: &'a TrafficModel,
    sense: &'a SensingConfig,
    link: &'a LinkModel,
    opts: SearchOptions,
}

impl Objective for TrObjective<'_> {
    fn eval(&self, t_s0: f64, t: f64) -> Result<Candidate> {
        let sense = sensing_for(self.sense, t_s0, self.opts.gamma)?;
        let sched = FrameSchedule::transmit_receive(t_s0, t);
        let col = outage::collision_to_imperfect(self.model, &sched, &sense)?;
        let r = throughput::rate_tr(self.link, &sched, col.total, self.opts.reverse_duty)?;
        Ok(Candidate { rate: r.value, collision: col.total })
    }
}

struct Incumbent {
    best: Option<(usize, usize, Candidate)>,
    safest: Option<(usize, usize, Candidate)>,
}

fn scan(obj: &dyn Objective, t_s0s: &[f64], ts: &[f64], constraint: f64) -> Incumbent {
    let rows: Vec<Vec<Option<Candidate>>> =
        t_s0s.par_iter().map(|&a| ts.iter().map(|&b| obj.eval(a, b).ok()).collect()).collect();
    let mut inc = Incumbent { best: None, safest: None };
    for (i, row) in rows.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            let Some(c) = *c else { continue };
            if c.collision <= constraint && inc.best.is_none_or(|(_, _, b)| c.rate > b.rate) {
                inc.best = Some((i, j, c));
            }
            if inc.safest.is_none_or(|(_, _, b)| c.collision < b.collision) {
                inc.safest = Some((i, j, c));
            }
        }
    }
    inc
}

/// Log-spaced points between the neighbours of `grid[k]`, `ZOOM` per original spacing.
fn zoom(grid: &[f64], k: usize) -> Vec<f64> {
    if grid.len() < 2 {
        return grid.to_vec();
    }
    let (lo, hi) = (k.saturating_sub(1), (k + 1).min(grid.len() - 1));
    let mut g = log_grid(grid[lo], grid[hi], (hi - lo) * ZOOM + 1);
    // keep the incumbent exactly
    if let Some(slot) = g.iter_mut().min_by(|a, b| (**a - grid[k]).abs().total_cmp(&(**b - grid[k]).abs())) {
        *slot = grid[k];
    }
    g.dedup();
    g
}

fn search(obj: &dyn Objective, space: &SearchSpace, constraint: f64) -> Result<Optimum> {
    space.validate()?;
    if !(constraint > 0.0 && constraint <= 1.0) {
        return Err(Error::Config(format!("collision constraint must be in (0, 1], got {constraint}")));
    }
    let mut a = space.t_s0_grid.clone();
    let mut b = space.t_grid.clone();
    let mut evaluations = (a.len() * b.len()) as u64;
    let mut inc = scan(obj, &a, &b, constraint);
    let Some((mut bi, mut bj, mut best)) = inc.best else {
        let (i, j, c) =
            inc.safest.ok_or_else(|| Error::Infeasible("no grid point has a defined collision probability".into()))?;
        return Ok(Optimum {
            t_s0_star: a[i],
            t_star: b[j],
            rate_star: c.rate,
            collision_at_opt: c.collision,
            feasible: false,
            evaluations,
        });
    };
    for _ in 0..space.refinement {
        let na = zoom(&a, bi);
        let nb = zoom(&b, bj);
        evaluations += (na.len() * nb.len()) as u64;
        inc = scan(obj, &na, &nb, constraint);
        let (i, j, c) = inc.best.expect("incumbent is on the refined grid");
        if c.rate >= best.rate {
            (bi, bj, best) = (i, j, c);
            a = na;
            b = nb;
        } else {
            break;
        }
    }
    Ok(Optimum {
        t_s0_star: a[bi],
        t_star: b[bj],
        rate_star: best.rate,
        collision_at_opt: best.collision,
        feasible: true,
        evaluations,
    })
}

/// Maximize the TS throughput subject to `P_TS ≤ constraint`.
pub fn solve_p1(
    model: &TrafficModel,
    sense: &SensingConfig,
    link: &LinkModel,
    space: &SearchSpace,
    constraint: f64,
    opts: &SearchOptions,
) -> Result<Optimum> {
    let obj = TsObjective { model, sense, link, windows: space.windows, opts: *opts };
    search(&obj, space, constraint)
}

/// Maximize the TR throughput (with `T_R = T`) subject to `P_TR ≤ constraint`.
pub fn solve_p2(
    model: &TrafficModel,
    sense: &SensingConfig,
    link: &LinkModel,
    space: &SearchSpace,
    constraint: f64,
    opts: &SearchOptions,
) -> Result<Optimum> {
    let obj = TrObjective { model, sense, link, opts: *opts };
    search(&obj, space, constraint)
}

/// SU action: simultaneous transmit-and-receive (1) or transmit-and-sense (0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "TS")]
    TransmitSense,
    #[serde(rename = "TR")]
    TransmitReceive,
}

impl Action {
    pub fn code(self) -> u8 {
        match self {
            Action::TransmitReceive => 1,
            Action::TransmitSense => 0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Action::TransmitReceive => "TR",
            Action::TransmitSense => "TS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub ts: f64,
    pub tr: f64,
}

impl Constraints {
    pub fn both(c: f64) -> Self {
        Self { ts: c, tr: c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyDecision {
    pub action: Action,
    pub rate_ts: f64,
    pub rate_tr: f64,
    pub beta: f64,
    pub ts: Optimum,
    pub tr: Optimum,
}

/// Pick TS or TR from their optima. A feasible mode beats an infeasible one; ties go to TS.
pub fn decide(beta: f64, ts: Optimum, tr: Optimum) -> StrategyDecision {
    let action = match (ts.feasible, tr.feasible) {
        (false, true) => Action::TransmitReceive,
        (true, true) if tr.rate_star > ts.rate_star => Action::TransmitReceive,
        _ => Action::TransmitSense,
    };
    StrategyDecision { action, rate_ts: ts.rate_star, rate_tr: tr.rate_star, beta, ts, tr }
}

/// Solve both modes and keep the one with the higher constrained throughput.
pub fn solve_p3(
    model: &TrafficModel,
    sense: &SensingConfig,
    link: &LinkModel,
    space: &SearchSpace,
    constraints: Constraints,
    opts: &SearchOptions,
) -> Result<StrategyDecision> {
    let ts = solve_p1(model, sense, link, space, constraints.ts, opts)?;
    let tr = solve_p2(model, sense, link, space, constraints.tr, opts)?;
    Ok(decide(model.beta, ts, tr))
}

/// Outcome of a load sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaThreshold {
    /// Smallest grid load at which TS is chosen; the last grid point when TS never wins.
    pub beta_star: f64,
    /// True when the sweep starts in TR and switches to TS somewhere.
    pub crossed: bool,
    /// Every grid load at which the chosen action differs from the previous point.
    pub crossings: Vec<f64>,
    /// Load where `rate_tr - rate_ts` changes sign, linearly interpolated between the grid points
    /// around the first TR → TS switch.
    pub interpolated: Option<f64>,
    pub decisions: Vec<StrategyDecision>,
}

impl BetaThreshold {
    pub fn single_crossing(&self) -> bool {
        self.crossed && self.crossings.len() == 1
    }
}

/// Sweep the PU load and locate the TR → TS switch point.
pub fn find_beta_star(
    model: &TrafficModel,
    sense: &SensingConfig,
    link: &LinkModel,
    space: &SearchSpace,
    constraints: Constraints,
    beta_grid: &[f64],
    opts: &SearchOptions,
) -> Result<BetaThreshold> {
    ensure(!beta_grid.is_empty(), || "beta grid is empty".to_string())?;
    ensure(beta_grid.iter().all(|&b| b > 0.0 && b < 1.0), || "beta grid must lie in (0, 1)".to_string())?;
    ensure(beta_grid.windows(2).all(|w| w[0] < w[1]), || "beta grid must be increasing".to_string())?;
    let decisions = beta_grid
        .iter()
        .map(|&b| solve_p3(&model.with_beta(b), sense, link, space, constraints, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(threshold_from_decisions(decisions))
}

/// Summarize a sequence of decisions ordered by increasing load.
pub fn threshold_from_decisions(decisions: Vec<StrategyDecision>) -> BetaThreshold {
    let crossings: Vec<f64> = decisions.windows(2).filter(|w| w[0].action != w[1].action).map(|w| w[1].beta).collect();
    let first_ts = decisions.iter().position(|d| d.action == Action::TransmitSense);
    let last = decisions.last().map_or(f64::NAN, |d| d.beta);
    let (beta_star, crossed) = match first_ts {
        Some(k) => (decisions[k].beta, k > 0),
        None => (last, false),
    };
    let interpolated = match first_ts {
        Some(k) if k > 0 => {
            let (p, q) = (&decisions[k - 1], &decisions[k]);
            let (dp, dq) = (p.rate_tr - p.rate_ts, q.rate_tr - q.rate_ts);
            if p.ts.feasible && p.tr.feasible && q.ts.feasible && q.tr.feasible && dp > dq {
                Some(p.beta + (q.beta - p.beta) * dp / (dp - dq))
            } else {
                None
            }
        }
        _ => None,
    };
    BetaThreshold { beta_star, crossed, crossings, interpolated, decisions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outage::WindowThreshold;

    fn sense() -> SensingConfig {
        SensingConfig { chi: 0.235, alpha_s: 100.0, alpha_l: 10f64.powf(-1.5), sigma_w2: 1.0, gamma: 1.016, f_s: 6e6 }
    }

    fn link(chi: f64) -> LinkModel {
        LinkModel::symmetric_from_snr(10f64.powf(1.5), 100.0, chi, 0.1, 1.0, 4.0).unwrap()
    }

    fn opts() -> SearchOptions {
        SearchOptions {
            ts: TsOptions { window_threshold: WindowThreshold::TargetPf(0.004), ..Default::default() },
            ..Default::default()
        }
    }

    fn small_space() -> SearchSpace {
        SearchSpace {
            t_s0_grid: log_grid(1e-3, 3e-2, 12),
            t_grid: log_grid(0.05, 10.0, 12),
            windows: WindowPolicy::EqualWindows { m: 500 },
            refinement: 0,
        }
    }

    #[test]
    fn grids() {
        let g = log_grid(1e-3, 1.0, 4);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[3], 1.0);
        assert!((g[1] - 1e-2).abs() < 1e-15);
        assert_eq!(linear_grid(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(log_grid(2.0, 3.0, 1), vec![2.0]);
    }

    #[test]
    fn zoom_keeps_incumbent_and_refines() {
        let g = log_grid(1e-3, 1.0, 4);
        let z = zoom(&g, 1);
        assert_eq!(z.first(), Some(&g[0]));
        assert_eq!(z.last(), Some(&g[2]));
        assert!(z.contains(&g[1]));
        assert_eq!(z.len(), 2 * ZOOM + 1);
        let edge = zoom(&g, 0);
        assert_eq!(edge.len(), ZOOM + 1);
        assert_eq!(zoom(&[5.0], 0), vec![5.0]);
    }

    #[test]
    fn empty_or_unsorted_grids_are_rejected() {
        let mut s = small_space();
        s.t_grid.clear();
        let r = solve_p1(&TrafficModel::new(0.01, 0.5).unwrap(), &sense(), &link(0.235), &s, 0.04, &opts());
        assert!(matches!(r, Err(Error::Config(_))));
        let mut s = small_space();
        s.t_s0_grid = vec![2e-3, 1e-3];
        assert!(s.validate().is_err());
    }

    #[test]
    fn impossible_constraint_is_reported_infeasible() {
        let m = TrafficModel::new(0.01, 0.5).unwrap();
        let o = solve_p1(&m, &sense(), &link(0.235), &small_space(), 1e-9, &opts()).unwrap();
        assert!(!o.feasible);
        assert!(o.collision_at_opt > 1e-9);
    }

    #[test]
    fn vacuous_constraint_gives_unconstrained_maximum() {
        let m = TrafficModel::new(0.01, 0.5).unwrap();
        let s = small_space();
        let o = solve_p2(&m, &sense(), &link(0.235), &s, 1.0, &opts()).unwrap();
        let obj = TrObjective { model: &m, sense: &sense(), link: &link(0.235), opts: opts() };
        let best = s
            .t_s0_grid
            .iter()
            .flat_map(|&a| s.t_grid.iter().map(move |&b| (a, b)))
            .filter_map(|(a, b)| obj.eval(a, b).ok())
            .map(|c| c.rate)
            .fold(f64::MIN, f64::max);
        assert_eq!(o.rate_star, best);
    }

    #[test]
    fn decision_rules() {
        let opt = |rate: f64, feasible: bool| Optimum {
            t_s0_star: 1e-3,
            t_star: 1.0,
            rate_star: rate,
            collision_at_opt: 0.01,
            feasible,
            evaluations: 1,
        };
        assert_eq!(decide(0.3, opt(1.0, true), opt(2.0, true)).action, Action::TransmitReceive);
        assert_eq!(decide(0.3, opt(2.0, true), opt(1.0, true)).action, Action::TransmitSense);
        assert_eq!(decide(0.3, opt(1.0, true), opt(1.0, true)).action, Action::TransmitSense);
        assert_eq!(decide(0.3, opt(1.0, true), opt(2.0, false)).action, Action::TransmitSense);
        assert_eq!(decide(0.3, opt(3.0, false), opt(2.0, true)).action, Action::TransmitReceive);
        assert_eq!(Action::TransmitReceive.code(), 1);
        assert_eq!(Action::TransmitSense.code(), 0);
    }

    #[test]
    fn threshold_summary() {
        let opt = |rate: f64| Optimum {
            t_s0_star: 1e-3,
            t_star: 1.0,
            rate_star: rate,
            collision_at_opt: 0.01,
            feasible: true,
            evaluations: 1,
        };
        let d = |beta: f64, ts: f64, tr: f64| decide(beta, opt(ts), opt(tr));
        let t = threshold_from_decisions(vec![d(0.1, 1.0, 1.2), d(0.2, 1.0, 1.1), d(0.3, 1.0, 0.9)]);
        assert!(t.crossed && t.single_crossing());
        assert_eq!(t.beta_star, 0.3);
        assert!((t.interpolated.unwrap() - 0.25).abs() < 1e-12);

        let none = threshold_from_decisions(vec![d(0.1, 1.0, 1.2)]);
        assert!(!none.crossed);
        assert_eq!(none.beta_star, 0.1);
        assert!(none.crossings.is_empty());

        let twice = threshold_from_decisions(vec![d(0.1, 1.0, 1.2), d(0.2, 1.0, 0.9), d(0.3, 1.0, 1.3)]);
        assert_eq!(twice.crossings, vec![0.2, 0.3]);
        assert!(!twice.single_crossing());
    }
}
