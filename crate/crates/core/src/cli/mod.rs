//! Batch experiment runner behind the `fdcr` binary.
//!
//! `run` resolves a TOML config, evaluates one experiment, and writes a CSV plus a
//! `<stem>.meta.json` run record next to it. `validate` resolves without running and reports the
//! resolved units and derived quantities.

pub mod config;
mod experiments;
pub mod units;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::{load, Config, Experiment, PRESETS, PRESET_SECTION_6};
pub use experiments::{execute, Cell, Outcome, Table};

use crate::dettheory;
use crate::linear_to_db;
use crate::throughput::{self, Node};
use crate::traffic::on_rate;

/// Version tag of the CSV layouts; bumped whenever a header changes.
pub const CSV_SCHEMA: &str = "fdcr-csv/1";

/// Process exit status for each failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const SCHEMA: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Model(crate::Error::Config(_)) => exit::SCHEMA,
            CliError::Infeasible(_) | CliError::Model(crate::Error::Infeasible(_)) => exit::INFEASIBLE,
            _ => exit::OTHER,
        }
    }
}

/// Command-line overrides of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub preset: Option<String>,
}

/// Files written by a run and its printable summary.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub summary: String,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Load the config at `path` with command-line overrides applied.
pub fn load_file(path: &Path, opts: &RunOptions) -> Result<Config, CliError> {
    let mut cfg = load(&read(path)?, opts.preset.as_deref())?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
        cfg.echo.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    Ok(cfg)
}

/// Run the experiment in `path` and write its artifacts.
///
/// An infeasible optimization still writes its CSV and metadata before the error is returned.
pub fn run(path: &Path, opts: &RunOptions) -> Result<RunReport, CliError> {
    let cfg = load_file(path, opts)?;
    let started = Instant::now();
    let outcome = execute(&cfg)?;
    let wall = started.elapsed().as_secs_f64();

    let name = cfg.output_path.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment.name())));
    let csv = match &opts.out_dir {
        Some(dir) => dir.join(name),
        None => name,
    };
    let metadata = csv.with_extension("meta.json");
    write(&csv, &outcome.table.to_csv())?;
    let meta = json!({
        "experiment": cfg.experiment.name(),
        "seed": cfg.seed,
        "fdcr_version": env!("CARGO_PKG_VERSION"),
        "rng": crate::sim::RNG_ALGORITHM,
        "csv_schema": CSV_SCHEMA,
        "csv": csv.file_name().map(|f| f.to_string_lossy().into_owned()),
        "rows": outcome.table.rows.len(),
        "wall_time_seconds": wall,
        "config": cfg.echo,
        "summary": outcome.summary,
    });
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(e.to_string()))?;
    write(&metadata, &(text + "\n"))?;

    match outcome.infeasible {
        Some(msg) => Err(CliError::Infeasible(msg)),
        None => Ok(RunReport { csv, metadata, summary: outcome.message }),
    }
}

fn ratio(v: f64) -> String {
    format!("{v} linear ({} dB)", linear_to_db(v))
}

/// Resolve the config at `path` and describe it without running anything.
pub fn validate(path: &Path, opts: &RunOptions) -> Result<String, CliError> {
    let cfg = load_file(path, opts)?;
    let mut out = String::new();
    let s = &cfg.sensing;
    let _ = writeln!(out, "experiment = {}", cfg.experiment.name());
    if let Some(p) = cfg.echo.get("preset").and_then(|v| v.as_str()) {
        let _ = writeln!(out, "preset = {p}");
    }
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "[sensing]");
    let _ = writeln!(out, "  f_s = {} Hz", s.f_s);
    let _ = writeln!(out, "  alpha_s = {}", ratio(s.alpha_s));
    let _ = writeln!(out, "  alpha_l = {}", ratio(s.alpha_l));
    let _ = writeln!(out, "  sigma_w2 = {} W", s.sigma_w2);
    let _ = writeln!(out, "  gamma = {} W", s.gamma);
    let _ = writeln!(out, "  chi = {}", s.chi);
    if let Some(t) = &cfg.traffic {
        let _ = writeln!(out, "[traffic]");
        let _ = writeln!(out, "  lambda_off = {} /s", t.lambda_off);
        let _ = writeln!(out, "  beta = {}", t.beta);
    }
    if let Some(f) = &cfg.frame {
        let _ = writeln!(out, "[frame]");
        let _ = writeln!(out, "  t_s0 = {} s", f.t_s0);
        let _ = writeln!(out, "  t = {} s", f.t);
        let _ = writeln!(out, "  t_r = {} s", f.t_r);
        let _ = writeln!(out, "  m = {}", f.m);
        let _ = writeln!(out, "  b_sum = {:?}", f.ts.b_sum);
        let _ = writeln!(out, "  window_threshold = {:?}", f.ts.window_threshold);
    }
    if let Some(l) = &cfg.link {
        let _ = writeln!(out, "[link]");
        let _ = writeln!(out, "  p_i = {} W, p_j = {} W", l.p_i, l.p_j);
        let _ = writeln!(out, "  d_ij = {} m, d_ji = {} m", l.d_ij, l.d_ji);
        let _ = writeln!(out, "  sigma_i2 = {} W, sigma_j2 = {} W", l.sigma_i2, l.sigma_j2);
        let _ = writeln!(out, "  c = {}, eta = {}", l.c, l.eta);
    }
    let _ = writeln!(out, "[derived]");
    if let Some(f) = &cfg.frame {
        let _ = writeln!(out, "  N(t_s0) = {}", s.samples(f.t_s0)?.get());
        let sched = f.schedule(crate::outage::Mode::TransmitSense, f.t_s0, f.t, false);
        let _ = writeln!(out, "  t_si = {} s", sched.t_si);
        match s.samples(sched.t_si) {
            Ok(n) => {
                let _ = writeln!(out, "  N(t_si) = {}", n.get());
            }
            Err(e) => {
                let _ = writeln!(out, "  N(t_si) unavailable: {e}");
            }
        }
        let _ = writeln!(out, "  pf_hd(t_s0) = {}", dettheory::pf_hd(s, f.t_s0)?);
        let _ = writeln!(out, "  pd_hd(t_s0) = {}", dettheory::pd_hd(s, f.t_s0)?);
    }
    if let Some(t) = &cfg.traffic {
        let _ = writeln!(out, "  lambda_on = {} /s", on_rate(t));
    }
    if let Some(l) = &cfg.link {
        let _ = writeln!(out, "  snr_to = {}", ratio(throughput::snr_to(l)));
        let _ = writeln!(out, "  snr_tr(j) = {}", ratio(throughput::snr_tr(l, Node::J)));
        let _ = writeln!(out, "  snr_tr(i) = {}", ratio(throughput::snr_tr(l, Node::I)));
    }
    let _ = writeln!(out, "errors: none");
    Ok(out)
}
