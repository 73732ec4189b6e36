//! TOML run configuration with `[model]`, `[line]`, `[indices]` and
//! `[experiment]` sections.
//!
//! ```toml
//! [model]
//! marginal = "lognormal"          # lognormal | pareto | uniform
//! location = "(0,0.0),(1,0.2)"    # number or knot list
//! scale = 1.0
//! kernel = "squared-exponential"  # squared-exponential | exponential | independent
//! tau = 1.0
//! horizon = 1.0
//! grid = [0.0, 0.5, 1.0]
//!
//! [line]
//! line = "constant:z=1.0"
//!
//! [indices]
//! indices = "fgt:alpha=1, sen"
//!
//! [experiment]
//! n_ladder = [250, 1000, 4000]
//! reps = 300
//! ```

use crate::CliError;
use gpilab_core::harness::DiagnosticsConfig;
use gpilab_core::income_model::{DistributionFamily, Kernel, Marginal, Schedule, TimeGrid};
use gpilab_core::{gpi::PovertyLine, presets::PresetKind};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<RawModel>,
    line: Option<RawLine>,
    indices: Option<RawIndices>,
    experiment: Option<RawExperiment>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Param {
    Number(f64),
    Knots(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    marginal: String,
    location: Option<Param>,
    scale: Option<Param>,
    minimum: Option<Param>,
    shape: Option<Param>,
    upper: Option<Param>,
    kernel: String,
    tau: Option<f64>,
    horizon: f64,
    grid: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    line: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndices {
    indices: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    seed: Option<u64>,
    n_ladder: Option<Vec<usize>>,
    reps: Option<usize>,
    level: Option<f64>,
    resamples: Option<usize>,
    times: Option<Vec<f64>>,
    from: Option<f64>,
    to: Option<f64>,
    h_lower: Option<f64>,
    h_upper: Option<f64>,
    ks_sizes: Option<[usize; 2]>,
    ks_reps: Option<usize>,
    moment_reps: Option<usize>,
    hp2_panels: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub family: DistributionFamily,
    pub grid: TimeGrid,
}

#[derive(Debug, Clone)]
pub struct ExperimentSection {
    pub seed: Option<u64>,
    pub n_ladder: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub level: f64,
    pub resamples: usize,
    pub times: Option<Vec<f64>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub diagnostics: DiagnosticsConfig,
}

/// A parsed configuration file. Sections are optional here; each mode
/// checks for the ones it needs.
#[derive(Debug, Clone)]
pub struct Config {
    pub model: Option<ModelConfig>,
    pub line: Option<PovertyLine>,
    pub indices: Option<Vec<PresetKind>>,
    pub experiment: Option<ExperimentSection>,
}

pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_RESAMPLES: usize = 999;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Parses `"(t,v),(t,v),..."`.
pub fn parse_knots(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = compact
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| input(format!("knot list {s:?} must look like (t,v),(t,v)")))?;
    inner
        .split("),(")
        .map(|pair| {
            let (t, v) = pair
                .split_once(',')
                .ok_or_else(|| input(format!("knot {pair:?} in {s:?} is not a (t,v) pair")))?;
            let num = |x: &str| {
                x.parse::<f64>()
                    .map_err(|_| input(format!("knot value {x:?} in {s:?} is not a number")))
            };
            Ok((num(t)?, num(v)?))
        })
        .collect()
}

/// Parses `"constant:z=0.5"` or `"knots:(0,0.5),(1,0.6)"`.
pub fn parse_line(s: &str) -> Result<PovertyLine, CliError> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("constant:") {
        let z = rest
            .trim()
            .strip_prefix("z=")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| input(format!("poverty line {s:?}: expected constant:z=<number>")))?;
        Ok(PovertyLine::constant(z)?)
    } else if let Some(rest) = s.strip_prefix("knots:") {
        Ok(PovertyLine::knots(parse_knots(rest)?)?)
    } else {
        Err(input(format!("poverty line {s:?}: expected constant:z=... or knots:(t,z),...")))
    }
}

/// Parses a comma-separated preset list such as `"fgt:alpha=2, sen"`.
pub fn parse_indices(s: &str) -> Result<Vec<PresetKind>, CliError> {
    let kinds = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<PresetKind>().map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    if kinds.is_empty() {
        return Err(input("indices list is empty"));
    }
    Ok(kinds)
}

fn schedule(name: &str, p: &Option<Param>, marginal: &str) -> Result<Schedule, CliError> {
    match p {
        None => Err(input(format!("[model] marginal {marginal:?} needs key {name:?}"))),
        Some(Param::Number(v)) => Ok(Schedule::constant(*v)),
        Some(Param::Knots(s)) => Ok(Schedule::from_knots(parse_knots(s)?)?),
    }
}

fn reject_extra(keys: &[(&str, &Option<Param>)], marginal: &str) -> Result<(), CliError> {
    match keys.iter().find(|(_, v)| v.is_some()) {
        Some((k, _)) => Err(input(format!("[model] key {k:?} does not apply to marginal {marginal:?}"))),
        None => Ok(()),
    }
}

impl RawModel {
    fn build(&self) -> Result<ModelConfig, CliError> {
        let m = self.marginal.as_str();
        let marginal = match m {
            "lognormal" => {
                reject_extra(&[("minimum", &self.minimum), ("shape", &self.shape), ("upper", &self.upper)], m)?;
                Marginal::LogNormal {
                    location: schedule("location", &self.location, m)?,
                    scale: schedule("scale", &self.scale, m)?,
                }
            }
            "pareto" => {
                reject_extra(&[("location", &self.location), ("scale", &self.scale), ("upper", &self.upper)], m)?;
                Marginal::Pareto {
                    minimum: schedule("minimum", &self.minimum, m)?,
                    shape: schedule("shape", &self.shape, m)?,
                }
            }
            "uniform" => {
                reject_extra(
                    &[
                        ("location", &self.location),
                        ("scale", &self.scale),
                        ("minimum", &self.minimum),
                        ("shape", &self.shape),
                    ],
                    m,
                )?;
                Marginal::Uniform {
                    upper: schedule("upper", &self.upper, m)?,
                }
            }
            other => {
                return Err(input(format!(
                    "unknown marginal {other:?}; expected lognormal, pareto or uniform"
                )))
            }
        };
        let tau = || {
            self.tau
                .ok_or_else(|| input(format!("[model] kernel {:?} needs key \"tau\"", self.kernel)))
        };
        let kernel = match self.kernel.as_str() {
            "squared-exponential" => Kernel::SquaredExponential { tau: tau()? },
            "exponential" => Kernel::Exponential { tau: tau()? },
            "independent" => {
                if self.tau.is_some() {
                    return Err(input("[model] key \"tau\" does not apply to the independent kernel"));
                }
                Kernel::Independent
            }
            other => {
                return Err(input(format!(
                    "unknown kernel {other:?}; expected squared-exponential, exponential or independent"
                )))
            }
        };
        let family = DistributionFamily::new(marginal, kernel, self.horizon)?;
        let grid = TimeGrid::new(self.grid.clone(), self.horizon)?;
        Ok(ModelConfig { family, grid })
    }
}

impl Default for ExperimentSection {
    fn default() -> Self {
        RawExperiment::default().build().expect("defaults are valid")
    }
}

impl RawExperiment {
    fn build(self) -> Result<ExperimentSection, CliError> {
        let mut diagnostics = DiagnosticsConfig::default();
        if let Some(h) = self.h_lower {
            diagnostics.h_bounds.0 = h;
        }
        if let Some(h) = self.h_upper {
            diagnostics.h_bounds.1 = h;
        }
        if let Some([a, b]) = self.ks_sizes {
            if a == 0 || a >= b {
                return Err(input(format!("[experiment] ks_sizes must be increasing and positive, got [{a}, {b}]")));
            }
            diagnostics.ks_sizes = (a, b);
        }
        if let Some(r) = self.ks_reps {
            diagnostics.ks_reps = r;
        }
        if let Some(r) = self.moment_reps {
            diagnostics.moment_reps = r;
        }
        if let Some(r) = self.hp2_panels {
            diagnostics.hp2_panels = r;
        }
        Ok(ExperimentSection {
            seed: self.seed,
            n_ladder: self.n_ladder,
            reps: self.reps,
            level: self.level.unwrap_or(DEFAULT_LEVEL),
            resamples: self.resamples.unwrap_or(DEFAULT_RESAMPLES),
            times: self.times,
            from: self.from,
            to: self.to,
            diagnostics,
        })
    }
}

pub fn parse_config_str(text: &str) -> Result<Config, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| input(format!("config: {}", e.message())))?;
    Ok(Config {
        model: raw.model.as_ref().map(RawModel::build).transpose()?,
        line: raw.line.map(|l| parse_line(&l.line)).transpose()?,
        indices: raw.indices.map(|i| parse_indices(&i.indices)).transpose()?,
        experiment: raw.experiment.map(RawExperiment::build).transpose()?,
    })
}

pub fn parse_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn missing(section: &str, mode: &str) -> CliError {
    input(format!("config has no [{section}] section, which mode {mode} needs"))
}

impl Config {
    pub fn require_model(&self, mode: &str) -> Result<&ModelConfig, CliError> {
        self.model.as_ref().ok_or_else(|| missing("model", mode))
    }

    pub fn require_line(&self, mode: &str) -> Result<&PovertyLine, CliError> {
        self.line.as_ref().ok_or_else(|| missing("line", mode))
    }

    pub fn require_indices(&self, mode: &str) -> Result<&[PresetKind], CliError> {
        self.indices.as_deref().ok_or_else(|| missing("indices", mode))
    }

    pub fn require_experiment(&self, mode: &str) -> Result<&ExperimentSection, CliError> {
        self.experiment.as_ref().ok_or_else(|| missing("experiment", mode))
    }
}
