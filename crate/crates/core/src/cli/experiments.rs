use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{Config, Experiment};
use super::CliError;
use crate::dettheory;
use crate::optimize::{self, Constraints, Optimum};
use crate::outage::{self, Mode, SensingQuality};
use crate::sim::{self, DetectorModel, SystemSimConfig};
use crate::throughput::{self, LinkModel, ReverseDuty};
use crate::traffic::TrafficModel;

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Count(u64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.11e}"),
            Cell::Count(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Count(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Rows under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    /// Comma-separated text with `\n` line endings; reals carry 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Index of a header column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }
}

/// Result of one experiment.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    /// Machine-readable summary stored in the run metadata.
    pub summary: Value,
    /// Human-readable summary printed by the CLI.
    pub message: String,
    /// Set when an optimization found no feasible point.
    pub infeasible: Option<String>,
}

impl Outcome {
    fn plain(table: Table) -> Self {
        let message = format!("{} rows", table.rows.len());
        Self { table, summary: Value::Null, message, infeasible: None }
    }
}

/// Run the configured experiment.
pub fn execute(cfg: &Config) -> Result<Outcome, CliError> {
    match cfg.experiment {
        Experiment::SenseCurves => sense_curves(cfg),
        Experiment::CollisionCurves => collision_curves(cfg),
        Experiment::ThroughputCurves => throughput_curves(cfg),
        Experiment::OptimizeP1 | Experiment::OptimizeP2 => optimize_one(cfg),
        Experiment::StrategySweep => strategy_sweep(cfg),
        Experiment::Simulate => simulate(cfg),
    }
}

// resolve_config guarantees the blocks each experiment needs
fn traffic(cfg: &Config) -> &TrafficModel {
    cfg.traffic.as_ref().expect("traffic block checked at load")
}

fn link(cfg: &Config) -> &LinkModel {
    cfg.link.as_ref().expect("link block checked at load")
}

fn frame(cfg: &Config) -> &super::config::FrameSpec {
    cfg.frame.as_ref().expect("frame block checked at load")
}

fn sweep(cfg: &Config) -> &super::config::SweepSpec {
    cfg.sweep.as_ref().expect("sweep block checked at load")
}

fn reverse_duty(cfg: &Config) -> ReverseDuty {
    cfg.optimize.as_ref().map(|o| o.opts.reverse_duty).unwrap_or_default()
}

fn rows<T, F>(points: Vec<T>, f: F) -> Result<Vec<Vec<Cell>>, CliError>
where
    T: Send + Sync,
    F: Fn(&T) -> crate::Result<Vec<Cell>> + Sync,
{
    let out: crate::Result<Vec<_>> = points.par_iter().map(&f).collect();
    Ok(out?)
}

fn sense_curves(cfg: &Config) -> Result<Outcome, CliError> {
    let sw = sweep(cfg);
    let chis = sw.chi.clone().unwrap_or_else(|| vec![cfg.sensing.chi]);
    let grid = sw.t_s.clone().expect("sweep.t_s checked at load");
    let points: Vec<(f64, f64)> = chis.iter().flat_map(|&c| grid.iter().map(move |&t| (c, t))).collect();
    let mut table = Table::new(&["t_s_seconds", "chi", "pf_fd", "pd_fd", "pf_hd", "pd_hd"]);
    table.rows = rows(points, |&(chi, t_s)| {
        let s = cfg.sensing.with_chi(chi);
        s.validate()?;
        Ok(vec![
            t_s.into(),
            chi.into(),
            dettheory::pf_fd(&s, t_s)?.into(),
            dettheory::pd_fd(&s, t_s)?.into(),
            dettheory::pf_hd(&s, t_s)?.into(),
            dettheory::pd_hd(&s, t_s)?.into(),
        ])
    })?;
    Ok(Outcome::plain(table))
}

fn grid_points(cfg: &Config) -> (Vec<Mode>, Vec<f64>, Vec<f64>) {
    let (sw, f) = (sweep(cfg), frame(cfg));
    (
        sw.modes.clone().unwrap_or_else(|| Mode::ALL.to_vec()),
        sw.t_s0.clone().unwrap_or_else(|| vec![f.t_s0]),
        sw.t.clone().unwrap_or_else(|| vec![f.t]),
    )
}

fn quality_label(q: SensingQuality) -> &'static str {
    match q {
        SensingQuality::Perfect => "perfect",
        SensingQuality::Imperfect => "imperfect",
    }
}

fn collision_curves(cfg: &Config) -> Result<Outcome, CliError> {
    let (modes, t_s0s, ts) = grid_points(cfg);
    let quality = sweep(cfg).quality.unwrap_or(SensingQuality::Imperfect);
    let f = frame(cfg);
    let mut points = Vec::new();
    for &m in &modes {
        for &a in &t_s0s {
            for &b in &ts {
                points.push((m, a, b));
            }
        }
    }
    let mut table = Table::new(&["mode", "quality", "t_s0_seconds", "t_seconds", "collision", "term_a", "term_b", "w"]);
    table.rows = rows(points, |&(mode, t_s0, t)| {
        let sched = f.schedule(mode, t_s0, t, true);
        let c = outage::collision(traffic(cfg), &sched, &cfg.sensing, quality, &f.ts)?;
        Ok(vec![
            mode.label().into(),
            quality_label(quality).into(),
            t_s0.into(),
            t.into(),
            c.total.into(),
            c.term_a.into(),
            c.term_b.into(),
            c.w.into(),
        ])
    })?;
    Ok(Outcome::plain(table))
}

fn mode_rate(
    mode: Mode,
    link: &LinkModel,
    sched: &outage::FrameSchedule,
    col: &outage::CollisionBreakdown,
    duty: ReverseDuty,
) -> crate::Result<throughput::ThroughputReport> {
    match mode {
        Mode::TransmitOnly => throughput::rate_to(link, sched, col.total),
        Mode::TransmitSense => throughput::rate_ts(link, sched, col),
        Mode::TransmitReceive => throughput::rate_tr(link, sched, col.total, duty),
    }
}

fn throughput_curves(cfg: &Config) -> Result<Outcome, CliError> {
    let (modes, t_s0s, ts) = grid_points(cfg);
    let sw = sweep(cfg);
    let quality = sw.quality.unwrap_or(SensingQuality::Imperfect);
    let chis = sw.chi.clone().unwrap_or_else(|| vec![cfg.sensing.chi]);
    let f = frame(cfg);
    let duty = reverse_duty(cfg);
    let mut points = Vec::new();
    for &m in &modes {
        for &chi in &chis {
            for &a in &t_s0s {
                for &b in &ts {
                    points.push((m, chi, a, b));
                }
            }
        }
    }
    let mut table =
        Table::new(&["mode", "chi", "t_s0_seconds", "t_seconds", "collision", "throughput", "forward", "reverse"]);
    table.rows = rows(points, |&(mode, chi, t_s0, t)| {
        let sense = cfg.sensing.with_chi(chi);
        sense.validate()?;
        let link = link(cfg).with_chi(chi);
        let sched = f.schedule(mode, t_s0, t, true);
        let col = outage::collision(traffic(cfg), &sched, &sense, quality, &f.ts)?;
        let r = mode_rate(mode, &link, &sched, &col, duty)?;
        Ok(vec![
            mode.label().into(),
            chi.into(),
            t_s0.into(),
            t.into(),
            col.total.into(),
            r.value.into(),
            r.forward.into(),
            r.reverse.into(),
        ])
    })?;
    Ok(Outcome::plain(table))
}

fn optimum_json(o: &Optimum) -> Value {
    json!({
        "t_s0_star_seconds": o.t_s0_star,
        "t_star_seconds": o.t_star,
        "rate_star": o.rate_star,
        "collision_at_opt": o.collision_at_opt,
        "feasible": o.feasible,
        "evaluations": o.evaluations,
    })
}

fn optimize_one(cfg: &Config) -> Result<Outcome, CliError> {
    let o = cfg.optimize.as_ref().expect("optimize block checked at load");
    let model = traffic(cfg);
    let (label, constraint, opt) = if cfg.experiment == Experiment::OptimizeP1 {
        ("P1", o.constraint, optimize::solve_p1(model, &cfg.sensing, link(cfg), &o.space, o.constraint, &o.opts)?)
    } else {
        ("P2", o.constraint_tr, optimize::solve_p2(model, &cfg.sensing, link(cfg), &o.space, o.constraint_tr, &o.opts)?)
    };
    let mut table = Table::new(&[
        "problem",
        "beta",
        "constraint",
        "t_s0_star_seconds",
        "t_star_seconds",
        "rate_star",
        "collision_at_opt",
        "feasible",
        "evaluations",
    ]);
    table.rows.push(vec![
        label.into(),
        model.beta.into(),
        constraint.into(),
        opt.t_s0_star.into(),
        opt.t_star.into(),
        opt.rate_star.into(),
        opt.collision_at_opt.into(),
        opt.feasible.into(),
        opt.evaluations.into(),
    ]);
    let message = format!(
        "{label}: t_s0* = {:.4} ms, T* = {:.4} s, rate* = {:.6} bits/s/Hz, collision* = {:.6}{}",
        opt.t_s0_star * 1e3,
        opt.t_star,
        opt.rate_star,
        opt.collision_at_opt,
        if opt.feasible { "" } else { " (constraint not met)" }
    );
    let infeasible = (!opt.feasible).then(|| {
        format!(
            "{label}: no grid point meets the collision constraint {constraint}; smallest collision is {}",
            opt.collision_at_opt
        )
    });
    Ok(Outcome { table, summary: optimum_json(&opt), message, infeasible })
}

fn strategy_sweep(cfg: &Config) -> Result<Outcome, CliError> {
    let o = cfg.optimize.as_ref().expect("optimize block checked at load");
    let grid = o.beta_grid.as_ref().expect("optimize.beta checked at load");
    let th = optimize::find_beta_star(
        traffic(cfg),
        &cfg.sensing,
        link(cfg),
        &o.space,
        Constraints { ts: o.constraint, tr: o.constraint_tr },
        grid,
        &o.opts,
    )?;
    let mut table = Table::new(&[
        "beta",
        "action",
        "rate_ts",
        "rate_tr",
        "ts_t_s0_seconds",
        "ts_t_seconds",
        "ts_collision",
        "ts_feasible",
        "tr_t_s0_seconds",
        "tr_t_seconds",
        "tr_collision",
        "tr_feasible",
    ]);
    for d in &th.decisions {
        table.rows.push(vec![
            d.beta.into(),
            d.action.label().into(),
            d.rate_ts.into(),
            d.rate_tr.into(),
            d.ts.t_s0_star.into(),
            d.ts.t_star.into(),
            d.ts.collision_at_opt.into(),
            d.ts.feasible.into(),
            d.tr.t_s0_star.into(),
            d.tr.t_star.into(),
            d.tr.collision_at_opt.into(),
            d.tr.feasible.into(),
        ]);
    }
    let message = if th.crossed {
        format!(
            "beta* = {} (first TS load), interpolated {}, {} switch(es)",
            th.beta_star,
            th.interpolated.map_or("n/a".to_string(), |b| format!("{b:.4}")),
            th.crossings.len()
        )
    } else {
        format!("no TR -> TS switch on the grid; switches at {:?}", th.crossings)
    };
    let summary = json!({
        "beta_star": th.beta_star,
        "beta_star_interpolated": th.interpolated,
        "crossed": th.crossed,
        "crossings": th.crossings,
        "single_crossing": th.single_crossing(),
    });
    Ok(Outcome { table, summary, message, infeasible: None })
}

fn detector_label(d: DetectorModel) -> &'static str {
    match d {
        DetectorModel::Analytic => "analytic",
        DetectorModel::Sampled(sim::SampleGenerator::Aggregate) => "aggregate",
        DetectorModel::Sampled(sim::SampleGenerator::PerSample) => "per-sample",
    }
}

fn simulate(cfg: &Config) -> Result<Outcome, CliError> {
    let s = cfg.simulate.as_ref().expect("simulate block checked at load");
    let f = frame(cfg);
    let model = traffic(cfg);
    let link = link(cfg);
    let duty = reverse_duty(cfg);
    let mut table = Table::new(&[
        "mode",
        "quality",
        "detector",
        "frames",
        "attempts",
        "collisions",
        "collision_rate",
        "std_err",
        "analytic_collision",
        "throughput_estimate",
        "realized_throughput",
        "analytic_throughput",
        "overlap_time_total",
        "max_overlap",
        "aborts",
    ]);
    let mut summary = serde_json::Map::new();
    for &mode in &s.modes {
        let sched = f.schedule(mode, f.t_s0, f.t, false);
        let sim_cfg = SystemSimConfig {
            frames: s.frames,
            seed: sim::RngSeed(cfg.seed),
            detector: s.detector,
            quality: s.quality,
            ts: f.ts,
            reverse_duty: duty,
        };
        let r = sim::simulate_system(model, &sched, &cfg.sensing, link, &sim_cfg)?;
        let col = outage::collision(model, &sched, &cfg.sensing, s.quality, &f.ts)?;
        let analytic = mode_rate(mode, link, &sched, &col, duty)?;
        table.rows.push(vec![
            mode.label().into(),
            quality_label(s.quality).into(),
            detector_label(s.detector).into(),
            r.frames.into(),
            r.attempts.into(),
            r.collisions.into(),
            r.collision_rate.into(),
            r.std_err.into(),
            col.total.into(),
            r.throughput_estimate.into(),
            r.realized_throughput.into(),
            analytic.value.into(),
            r.overlap_time_total.into(),
            r.max_overlap.into(),
            r.aborts.into(),
        ]);
        summary.insert(mode.label().to_string(), serde_json::to_value(r).unwrap_or(Value::Null));
    }
    let message = format!("{} modes simulated over {} frames each", s.modes.len(), s.frames);
    Ok(Outcome { table, summary: Value::Object(summary), message, infeasible: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::{load, PRESET_SECTION_6};

    fn run(text: &str) -> Outcome {
        execute(&load(text, Some(PRESET_SECTION_6)).unwrap()).unwrap()
    }

    #[test]
    fn real_cells_have_twelve_significant_digits() {
        assert_eq!(Cell::Real(0.1).render(), "1.00000000000e-1");
        assert_eq!(Cell::Real(-1234.5).render(), "-1.23450000000e3");
        assert_eq!(Cell::Count(7).render(), "7");
    }

    #[test]
    fn sense_curves_header_and_size() {
        let o = run("experiment = \"sense-curves\"\n[sweep]\nt_s = { from = \"1 ms\", to = \"2 ms\", points = 3 }\n");
        assert_eq!(o.table.header, ["t_s_seconds", "chi", "pf_fd", "pd_fd", "pf_hd", "pd_hd"]);
        assert_eq!(o.table.rows.len(), 12);
        assert!(o.table.to_csv().ends_with('\n'));
    }

    #[test]
    fn collision_rows_match_library() {
        let text = "experiment = \"collision-curves\"\n[sweep]\nt_s0 = { from = \"4 ms\", to = \"4 ms\", points = 1 }\nt = { from = \"100 s\", to = \"100 s\", points = 1 }\n";
        let cfg = load(text, Some(PRESET_SECTION_6)).unwrap();
        let o = execute(&cfg).unwrap();
        let to = &o.table.rows[0];
        let expected = outage::collision_to_imperfect(
            cfg.traffic.as_ref().unwrap(),
            &outage::FrameSchedule::transmit_only(4e-3, 100.0),
            &cfg.sensing,
        )
        .unwrap();
        assert_eq!(to[4], Cell::Real(expected.total));
    }
}
