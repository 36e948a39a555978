//! Experiment configuration: TOML schema, presets and resolution to model types.
//!
//! Every physical quantity carries a unit suffix (see [`super::units`]). Unknown keys are
//! rejected. A preset is a complete configuration that the user file is merged on top of, key by
//! key.

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::units::{resolve, Kind, Scalar};
use super::CliError;
use crate::dettheory::SensingConfig;
use crate::optimize::{linear_grid, log_grid, GammaPolicy, SearchOptions, SearchSpace, WindowPolicy};
use crate::outage::{BSumMode, FrameSchedule, Mode, SensingQuality, TsOptions, WindowThreshold};
use crate::sim::{DetectorModel, SampleGenerator};
use crate::throughput::{LinkModel, ReverseDuty};
use crate::traffic::TrafficModel;

pub const PRESET_SECTION_6: &str = "section-6-defaults";

const SECTION_6_DEFAULTS: &str = r#"
[sensing]
f_s = "6 MHz"
alpha_s = "20 dB"
alpha_l = "-15 dB"
sigma_w2 = "1 W"
gamma = "1.016 W"
chi = 0.235

[traffic]
lambda_off = "0.01 /s"
beta = 0.5

[frame]
t_s0 = "4 ms"
t = "1 s"
m = 500
b_sum = "literal"
window_target_pf = 0.004

[link]
snr_to = "15 dB"
si_to_noise = "20.09 dB"
power = "1 W"
c = 1
eta = 4

[optimize]
constraint = 0.04
t_s0 = { from = "1 ms", to = "50 ms", points = 40, scale = "log" }
t = { from = "0.05 s", to = "20 s", points = 40, scale = "log" }
refinement = 2
beta = { from = 0.02, to = 0.98, points = 25, scale = "linear" }
reverse_duty = "own_frame"

[sweep]
t_s = { from = "0.1 ms", to = "10 ms", points = 50, scale = "log" }
chi = [0, 0.1, 0.2, 0.3]
t_s0 = { from = "1 ms", to = "50 ms", points = 25, scale = "log" }
t = { from = "0.05 s", to = "20 s", points = 25, scale = "log" }
modes = ["TO", "TS", "TR"]
quality = "imperfect"

[simulate]
frames = 100000
detector = "analytic"
quality = "imperfect"
modes = ["TO", "TS", "TR"]
"#;

/// Names of the embedded presets.
pub const PRESETS: [&str; 1] = [PRESET_SECTION_6];

/// TOML text of a named preset.
pub fn preset_text(name: &str) -> Result<&'static str, CliError> {
    match name {
        PRESET_SECTION_6 => Ok(SECTION_6_DEFAULTS),
        other => Err(CliError::Schema(format!("unknown preset '{other}' (available: {})", PRESETS.join(", ")))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SenseCurves,
    CollisionCurves,
    ThroughputCurves,
    OptimizeP1,
    OptimizeP2,
    StrategySweep,
    Simulate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SenseCurves => "sense-curves",
            Experiment::CollisionCurves => "collision-curves",
            Experiment::ThroughputCurves => "throughput-curves",
            Experiment::OptimizeP1 => "optimize-p1",
            Experiment::OptimizeP2 => "optimize-p2",
            Experiment::StrategySweep => "strategy-sweep",
            Experiment::Simulate => "simulate",
        }
    }
}

// ---- raw schema ----

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub sensing: Option<RawSensing>,
    pub traffic: Option<RawTraffic>,
    pub frame: Option<RawFrame>,
    pub link: Option<RawLink>,
    pub optimize: Option<RawOptimize>,
    pub sweep: Option<RawSweep>,
    pub simulate: Option<RawSimulate>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawSensing {
    pub f_s: Scalar,
    pub alpha_s: Scalar,
    pub alpha_l: Scalar,
    pub sigma_w2: Scalar,
    pub gamma: Scalar,
    pub chi: Scalar,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawTraffic {
    pub lambda_off: Scalar,
    pub beta: Scalar,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawFrame {
    pub t_s0: Scalar,
    pub t: Scalar,
    pub m: u32,
    /// Reception duration of the TR mode; defaults to `t`.
    pub t_r: Option<Scalar>,
    /// Fixed TS window length; when absent the `m` windows partition `t`.
    pub t_si: Option<Scalar>,
    pub b_sum: Option<BSumMode>,
    /// FD false-alarm target for the TS windows; when absent the windows share `gamma`.
    pub window_target_pf: Option<Scalar>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawLink {
    pub snr_to: Option<Scalar>,
    pub si_to_noise: Option<Scalar>,
    pub power: Option<Scalar>,
    pub p_i: Option<Scalar>,
    pub p_j: Option<Scalar>,
    pub d_ij: Option<Scalar>,
    pub d_ji: Option<Scalar>,
    pub sigma_i2: Option<Scalar>,
    pub sigma_j2: Option<Scalar>,
    pub c: Scalar,
    pub eta: Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawRange {
    pub from: Scalar,
    pub to: Scalar,
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawOptimize {
    pub constraint: Scalar,
    /// Separate TR constraint; defaults to `constraint`.
    pub constraint_tr: Option<Scalar>,
    pub t_s0: RawRange,
    pub t: RawRange,
    pub refinement: u32,
    pub beta: Option<RawRange>,
    pub reverse_duty: Option<ReverseDuty>,
    /// Re-derive the initial-sensing threshold per `t_s0` for this HD false-alarm probability.
    pub initial_target_pf: Option<Scalar>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub t_s: Option<RawRange>,
    pub chi: Option<Vec<Scalar>>,
    pub t_s0: Option<RawRange>,
    pub t: Option<RawRange>,
    pub modes: Option<Vec<String>>,
    pub quality: Option<SensingQuality>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawSimulate {
    pub frames: u64,
    pub detector: String,
    pub quality: SensingQuality,
    pub modes: Vec<String>,
}

// ---- resolved ----

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSpec {
    pub t_s0: f64,
    pub t: f64,
    pub t_r: f64,
    pub m: u32,
    pub t_si: Option<f64>,
    pub ts: TsOptions,
}

impl FrameSpec {
    pub fn windows(&self) -> WindowPolicy {
        match self.t_si {
            Some(t_si) => WindowPolicy::FixedWindow { t_si },
            None => WindowPolicy::EqualWindows { m: self.m },
        }
    }

    /// Schedule of `mode` at `(t_s0, t)`; the TR reception follows `t` unless fixed in the config.
    pub fn schedule(&self, mode: Mode, t_s0: f64, t: f64, tr_follows_t: bool) -> FrameSchedule {
        match mode {
            Mode::TransmitOnly => FrameSchedule::transmit_only(t_s0, t),
            Mode::TransmitSense => self.windows().schedule(t_s0, t),
            Mode::TransmitReceive => {
                let mut s = FrameSchedule::transmit_receive(t_s0, t);
                if !tr_follows_t {
                    s.t_r = self.t_r;
                }
                s
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSpec {
    pub constraint: f64,
    pub constraint_tr: f64,
    pub space: SearchSpace,
    pub beta_grid: Option<Vec<f64>>,
    pub opts: SearchOptions,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSpec {
    pub t_s: Option<Vec<f64>>,
    pub chi: Option<Vec<f64>>,
    pub t_s0: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
    pub modes: Option<Vec<Mode>>,
    pub quality: Option<SensingQuality>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSpec {
    pub frames: u64,
    pub detector: DetectorModel,
    pub quality: SensingQuality,
    pub modes: Vec<Mode>,
}

/// A fully resolved configuration in SI units and linear ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub sensing: SensingConfig,
    pub traffic: Option<TrafficModel>,
    pub frame: Option<FrameSpec>,
    pub link: Option<LinkModel>,
    pub optimize: Option<OptimizeSpec>,
    pub sweep: Option<SweepSpec>,
    pub simulate: Option<SimulateSpec>,
    /// The merged configuration as parsed, echoed into run metadata.
    pub echo: toml::Table,
}

/// Overlay `top` onto `base`: tables merge recursively, everything else is replaced. A `link`
/// table that switches between the SNR form and the physical form replaces the base table.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) if !(k == "link" && link_form_differs(b, &t)) => {
                merge(b, t)
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn link_form_differs(a: &toml::Table, b: &toml::Table) -> bool {
    let physical = |t: &toml::Table| t.contains_key("p_i") || t.contains_key("d_ij");
    let snr = |t: &toml::Table| t.contains_key("snr_to") || t.contains_key("si_to_noise");
    (physical(a) && snr(b)) || (snr(a) && physical(b))
}

fn parse_table(text: &str, origin: &str) -> Result<toml::Table, CliError> {
    toml::from_str(text).map_err(|e| CliError::Schema(format!("{origin}: {e}")))
}

/// Parse `text`, merge it over the preset named in the file or by `preset_override`, and resolve.
pub fn load(text: &str, preset_override: Option<&str>) -> Result<Config, CliError> {
    let user = parse_table(text, "config")?;
    let named = match preset_override {
        Some(p) => Some(p.to_string()),
        None => user.get("preset").and_then(|v| v.as_str()).map(str::to_string),
    };
    let mut merged = match &named {
        Some(p) => parse_table(preset_text(p)?, p)?,
        None => toml::Table::new(),
    };
    merge(&mut merged, user);
    if let Some(p) = named {
        merged.insert("preset".into(), toml::Value::String(p));
    }
    let raw: RawConfig = RawConfig::deserialize(toml::Value::Table(merged.clone()))
        .map_err(|e| CliError::Schema(e.to_string().trim_end().to_string()))?;
    resolve_config(raw, merged)
}

fn need<T>(block: Option<T>, name: &str, exp: Experiment) -> Result<T, CliError> {
    block.ok_or_else(|| CliError::Schema(format!("missing required block [{name}] for experiment '{}'", exp.name())))
}

fn dimless(field: &str, raw: &Scalar) -> Result<f64, CliError> {
    resolve(field, raw, Kind::Dimensionless)
}

fn probability(field: &str, raw: &Scalar) -> Result<f64, CliError> {
    let p = dimless(field, raw)?;
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(CliError::Schema(format!("{field}: probability must be in (0, 1), got {p}")))
    }
}

fn range(field: &str, raw: &RawRange, kind: Kind) -> Result<Vec<f64>, CliError> {
    let from = resolve(&format!("{field}.from"), &raw.from, kind)?;
    let to = resolve(&format!("{field}.to"), &raw.to, kind)?;
    let bad = |m: String| Err(CliError::Schema(format!("{field}: {m}")));
    if raw.points == 0 {
        return bad("points must be at least 1".into());
    }
    if raw.points == 1 && from != to {
        return bad("a single point needs from == to".into());
    }
    if raw.points > 1 && from >= to {
        return bad(format!("from ({from}) must be below to ({to})"));
    }
    Ok(match raw.scale {
        Scale::Log => {
            if from <= 0.0 {
                return bad("log scale needs positive bounds".into());
            }
            log_grid(from, to, raw.points)
        }
        Scale::Linear => linear_grid(from, to, raw.points),
    })
}

fn modes(field: &str, raw: &[String]) -> Result<Vec<Mode>, CliError> {
    if raw.is_empty() {
        return Err(CliError::Schema(format!("{field}: at least one mode is required")));
    }
    raw.iter()
        .map(|m| Mode::from_str(m).map_err(|_| CliError::Schema(format!("{field}: unknown mode '{m}' (TO, TS, TR)"))))
        .collect()
}

fn detector(field: &str, raw: &str) -> Result<DetectorModel, CliError> {
    match raw {
        "analytic" => Ok(DetectorModel::Analytic),
        "aggregate" => Ok(DetectorModel::Sampled(SampleGenerator::Aggregate)),
        "per-sample" => Ok(DetectorModel::Sampled(SampleGenerator::PerSample)),
        other => {
            Err(CliError::Schema(format!("{field}: unknown detector '{other}' (analytic, aggregate, per-sample)")))
        }
    }
}

fn model_err(block: &str) -> impl Fn(crate::Error) -> CliError + '_ {
    move |e| CliError::Schema(format!("[{block}] {e}"))
}

fn resolve_sensing(r: &RawSensing) -> Result<SensingConfig, CliError> {
    let s = SensingConfig {
        chi: dimless("sensing.chi", &r.chi)?,
        alpha_s: resolve("sensing.alpha_s", &r.alpha_s, Kind::Ratio)?,
        alpha_l: resolve("sensing.alpha_l", &r.alpha_l, Kind::Ratio)?,
        sigma_w2: resolve("sensing.sigma_w2", &r.sigma_w2, Kind::Power)?,
        gamma: resolve("sensing.gamma", &r.gamma, Kind::Power)?,
        f_s: resolve("sensing.f_s", &r.f_s, Kind::Frequency)?,
    };
    s.validate().map_err(model_err("sensing"))?;
    Ok(s)
}

fn resolve_traffic(r: &RawTraffic) -> Result<TrafficModel, CliError> {
    TrafficModel::new(resolve("traffic.lambda_off", &r.lambda_off, Kind::Rate)?, dimless("traffic.beta", &r.beta)?)
        .map_err(model_err("traffic"))
}

fn resolve_frame(r: &RawFrame) -> Result<FrameSpec, CliError> {
    let t = resolve("frame.t", &r.t, Kind::Time)?;
    let f = FrameSpec {
        t_s0: resolve("frame.t_s0", &r.t_s0, Kind::Time)?,
        t,
        t_r: r.t_r.as_ref().map(|v| resolve("frame.t_r", v, Kind::Time)).transpose()?.unwrap_or(t),
        m: r.m,
        t_si: r.t_si.as_ref().map(|v| resolve("frame.t_si", v, Kind::Time)).transpose()?,
        ts: TsOptions {
            b_sum: r.b_sum.unwrap_or_default(),
            window_threshold: match &r.window_target_pf {
                Some(p) => WindowThreshold::TargetPf(probability("frame.window_target_pf", p)?),
                None => WindowThreshold::Shared,
            },
        },
    };
    for mode in Mode::ALL {
        f.schedule(mode, f.t_s0, f.t, false).validate().map_err(model_err("frame"))?;
    }
    Ok(f)
}

fn resolve_link(r: &RawLink, chi: f64) -> Result<LinkModel, CliError> {
    let c = dimless("link.c", &r.c)?;
    let eta = dimless("link.eta", &r.eta)?;
    let physical = [&r.p_i, &r.p_j, &r.d_ij, &r.d_ji, &r.sigma_i2, &r.sigma_j2];
    let link = match (&r.snr_to, &r.si_to_noise, &r.power) {
        (Some(snr), Some(si), Some(power)) if physical.iter().all(|v| v.is_none()) => LinkModel::symmetric_from_snr(
            resolve("link.snr_to", snr, Kind::Ratio)?,
            resolve("link.si_to_noise", si, Kind::Ratio)?,
            chi,
            resolve("link.power", power, Kind::Power)?,
            c,
            eta,
        ),
        (None, None, None) => {
            let get = |name: &str, v: &Option<Scalar>, kind: Kind| {
                let field = format!("link.{name}");
                v.as_ref()
                    .ok_or_else(|| CliError::Schema(format!("{field}: required for a physical link")))
                    .and_then(|v| resolve(&field, v, kind))
            };
            let l = LinkModel {
                p_i: get("p_i", &r.p_i, Kind::Power)?,
                p_j: get("p_j", &r.p_j, Kind::Power)?,
                d_ij: get("d_ij", &r.d_ij, Kind::Distance)?,
                d_ji: get("d_ji", &r.d_ji, Kind::Distance)?,
                sigma_i2: get("sigma_i2", &r.sigma_i2, Kind::Power)?,
                sigma_j2: get("sigma_j2", &r.sigma_j2, Kind::Power)?,
                c,
                eta,
                chi_i: chi,
                chi_j: chi,
            };
            l.validate().map(|_| l)
        }
        _ => {
            return Err(CliError::Schema(
                "[link] give either snr_to, si_to_noise and power, or p_i, p_j, d_ij, d_ji, sigma_i2 and sigma_j2"
                    .into(),
            ))
        }
    };
    link.map_err(model_err("link"))
}

fn resolve_optimize(r: &RawOptimize, frame: &FrameSpec) -> Result<OptimizeSpec, CliError> {
    let constraint = dimless("optimize.constraint", &r.constraint)?;
    let constraint_tr = match &r.constraint_tr {
        Some(c) => dimless("optimize.constraint_tr", c)?,
        None => constraint,
    };
    for (f, c) in [("optimize.constraint", constraint), ("optimize.constraint_tr", constraint_tr)] {
        if !(c > 0.0 && c <= 1.0) {
            return Err(CliError::Schema(format!("{f}: must be in (0, 1], got {c}")));
        }
    }
    let space = SearchSpace {
        t_s0_grid: range("optimize.t_s0", &r.t_s0, Kind::Time)?,
        t_grid: range("optimize.t", &r.t, Kind::Time)?,
        windows: frame.windows(),
        refinement: r.refinement,
    };
    space.validate().map_err(model_err("optimize"))?;
    let beta_grid = r.beta.as_ref().map(|b| range("optimize.beta", b, Kind::Dimensionless)).transpose()?;
    if let Some(g) = &beta_grid {
        if g.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(CliError::Schema("optimize.beta: loads must lie in (0, 1)".into()));
        }
    }
    let gamma = match &r.initial_target_pf {
        Some(p) => GammaPolicy::TargetPf(probability("optimize.initial_target_pf", p)?),
        None => GammaPolicy::Fixed,
    };
    Ok(OptimizeSpec {
        constraint,
        constraint_tr,
        space,
        beta_grid,
        opts: SearchOptions { ts: frame.ts, gamma, reverse_duty: r.reverse_duty.unwrap_or_default() },
    })
}

fn resolve_sweep(r: &RawSweep) -> Result<SweepSpec, CliError> {
    Ok(SweepSpec {
        t_s: r.t_s.as_ref().map(|v| range("sweep.t_s", v, Kind::Time)).transpose()?,
        chi: r
            .chi
            .as_ref()
            .map(|v| {
                v.iter().enumerate().map(|(i, c)| dimless(&format!("sweep.chi[{i}]"), c)).collect::<Result<Vec<_>, _>>()
            })
            .transpose()?,
        t_s0: r.t_s0.as_ref().map(|v| range("sweep.t_s0", v, Kind::Time)).transpose()?,
        t: r.t.as_ref().map(|v| range("sweep.t", v, Kind::Time)).transpose()?,
        modes: r.modes.as_ref().map(|v| modes("sweep.modes", v)).transpose()?,
        quality: r.quality,
    })
}

fn resolve_config(raw: RawConfig, echo: toml::Table) -> Result<Config, CliError> {
    let exp = raw.experiment.ok_or_else(|| CliError::Schema("missing required key 'experiment'".into()))?;
    let sensing = resolve_sensing(need(raw.sensing.as_ref(), "sensing", exp)?)?;
    let traffic = raw.traffic.as_ref().map(resolve_traffic).transpose()?;
    let frame = raw.frame.as_ref().map(resolve_frame).transpose()?;
    let link = raw.link.as_ref().map(|l| resolve_link(l, sensing.chi)).transpose()?;
    let optimize = match (&raw.optimize, &frame) {
        (Some(o), Some(f)) => Some(resolve_optimize(o, f)?),
        (Some(_), None) => return Err(CliError::Schema("[optimize] needs a [frame] block for the TS windows".into())),
        _ => None,
    };
    let sweep = raw.sweep.as_ref().map(resolve_sweep).transpose()?;
    let simulate = raw
        .simulate
        .as_ref()
        .map(|s| -> Result<SimulateSpec, CliError> {
            if s.frames == 0 {
                return Err(CliError::Schema("simulate.frames: at least one frame is required".into()));
            }
            Ok(SimulateSpec {
                frames: s.frames,
                detector: detector("simulate.detector", &s.detector)?,
                quality: s.quality,
                modes: modes("simulate.modes", &s.modes)?,
            })
        })
        .transpose()?;

    // blocks each experiment cannot run without
    let required: &[&str] = match exp {
        Experiment::SenseCurves => &["sweep"],
        Experiment::CollisionCurves => &["traffic", "frame", "sweep"],
        Experiment::ThroughputCurves => &["traffic", "frame", "link", "sweep"],
        Experiment::OptimizeP1 | Experiment::OptimizeP2 => &["traffic", "frame", "link", "optimize"],
        Experiment::StrategySweep => &["traffic", "frame", "link", "optimize"],
        Experiment::Simulate => &["traffic", "frame", "link", "simulate"],
    };
    for &block in required {
        let present = match block {
            "traffic" => traffic.is_some(),
            "frame" => frame.is_some(),
            "link" => link.is_some(),
            "optimize" => optimize.is_some(),
            "sweep" => sweep.is_some(),
            _ => simulate.is_some(),
        };
        need(present.then_some(()), block, exp)?;
    }
    if exp == Experiment::SenseCurves {
        need(sweep.as_ref().and_then(|s| s.t_s.as_ref()), "sweep.t_s", exp)?;
    }
    if exp == Experiment::StrategySweep {
        need(optimize.as_ref().and_then(|o| o.beta_grid.as_ref()), "optimize.beta", exp)?;
    }

    Ok(Config {
        experiment: exp,
        seed: raw.seed.unwrap_or(0),
        output_path: raw.output_path,
        sensing,
        traffic,
        frame,
        link,
        optimize,
        sweep,
        simulate,
        echo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_resolves_for_every_experiment() {
        for exp in [
            "sense-curves",
            "collision-curves",
            "throughput-curves",
            "optimize-p1",
            "optimize-p2",
            "strategy-sweep",
            "simulate",
        ] {
            let c = load(&format!("experiment = \"{exp}\""), Some(PRESET_SECTION_6)).unwrap();
            assert_eq!(c.experiment.name(), exp);
            assert_eq!(c.sensing.f_s, 6e6);
            assert!((c.sensing.alpha_s - 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn user_values_override_preset() {
        let c = load("experiment = \"sense-curves\"\npreset = \"section-6-defaults\"\n[sensing]\nchi = 0.1\n", None)
            .unwrap();
        assert_eq!(c.sensing.chi, 0.1);
        assert_eq!(c.sensing.gamma, 1.016);
    }

    #[test]
    fn physical_link_replaces_snr_form() {
        let text = r#"
experiment = "throughput-curves"
[link]
p_i = "1 W"
p_j = "1 W"
d_ij = "10 m"
d_ji = "10 m"
sigma_i2 = "0.01 W"
sigma_j2 = "0.01 W"
c = 1
eta = 4
"#;
        let c = load(text, Some(PRESET_SECTION_6)).unwrap();
        assert_eq!(c.link.unwrap().d_ij, 10.0);
    }

    #[test]
    fn schema_errors() {
        let cases = [
            ("experiment = \"sense-curves\"\n[sensing]\nbogus = 1\n", "bogus"),
            ("experiment = \"sense-curves\"\n[frame]\nt_s0 = \"4 parsecs\"\n", "frame.t_s0"),
            ("experiment = \"sense-curves\"\n[frame]\nt_s0 = 4\n", "frame.t_s0"),
            ("experiment = \"nonsense\"\n", "experiment"),
            ("[sensing]\nchi = 0.1\n", "experiment"),
        ];
        for (text, needle) in cases {
            let e = load(text, Some(PRESET_SECTION_6)).unwrap_err();
            assert!(matches!(&e, CliError::Schema(m) if m.contains(needle)), "{text}: {e:?}");
        }
        let e = load("experiment = \"simulate\"\n", None).unwrap_err();
        assert!(matches!(&e, CliError::Schema(m) if m.contains("[sensing]")), "{e:?}");
    }
}
