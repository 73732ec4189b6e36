//! `gpilab` command-line front end.
//!
//! Modes:
//!
//! | mode       | needs                                   | writes                          |
//! |------------|-----------------------------------------|---------------------------------|
//! | `compute`  | `--data`, `[line]`, `[indices]`         | `indices.csv`, `indices.json`   |
//! | `ci`       | `--data`, `[line]`, `[indices]`         | `ci.csv`, `ci.json`             |
//! | `change`   | `--data`, `[line]`, `[indices]`         | `change.csv`, `change.json`     |
//! | `simulate` | `[model]`, `[line]`, `[indices]`, `[experiment]` | `mc_report.json`, `mc_report.csv` |
//! | `check`    | `[model]`, `[line]`, `[indices]`, `[experiment]` | `hp_report.json`          |
//!
//! Exit status is 0 on success, 1 for invalid input and 2 when a numerical
//! routine fails.

pub mod config;
pub mod data;

use clap::{Parser, ValueEnum};
use config::{Config, ExperimentSection};
use gpilab_core::gpi::{gpi_path, PovertyLine};
use gpilab_core::harness::{
    bootstrap_ci, hp_checks, relative_change_ci, run_experiment, ExperimentConfig, McReport,
};
use gpilab_core::income_model::IncomePanel;
use gpilab_core::presets::{make_spec, PresetKind};
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const INDICES_SCHEMA: &str = "gpilab.indices/v1";
pub const CI_SCHEMA: &str = "gpilab.ci/v1";
pub const CHANGE_SCHEMA: &str = "gpilab.change/v1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] gpilab_core::Error),
    #[error("output: {0}")]
    Output(String),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Index values per (preset, time) on an observed panel
    Compute,
    /// Percentile bootstrap intervals per (preset, time) on an observed panel
    Ci,
    /// Paired-bootstrap interval for the relative change between two times
    Change,
    /// Monte Carlo study of the linear representation under the configured model
    Simulate,
    /// Finite-sample diagnostics of the model assumptions
    Check,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Compute => "compute",
            Command::Ci => "ci",
            Command::Change => "change",
            Command::Simulate => "simulate",
            Command::Check => "check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }

    fn csv(self) -> bool {
        self != Format::Json
    }
}

const AFTER_HELP: &str = "\
compute, ci and change work on observed data (--data, long CSV with header id,t,income).
Representation diagnostics (alpha, beta and the remainder) need the true income
distribution, so they are available in simulate mode only, never on real data.
check always writes JSON.

Exit status: 0 success, 1 invalid input, 2 numerical failure.";

/// Poverty indices, bootstrap intervals and representation experiments.
#[derive(Debug, Parser)]
#[command(name = "gpilab", version, after_help = AFTER_HELP)]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Command,
    /// TOML configuration with [model], [line], [indices], [experiment]
    #[arg(long)]
    pub config: PathBuf,
    /// Panel CSV (compute, ci, change)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory, created if missing
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Random seed; overrides [experiment] seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexRow {
    pub preset: String,
    pub t: f64,
    pub z: f64,
    pub n: usize,
    pub poor: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiRow {
    pub preset: String,
    pub t: f64,
    pub z: f64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeRow {
    pub preset: String,
    pub from: f64,
    pub to: f64,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
    pub usable: usize,
}

#[derive(Serialize)]
struct Rows<'a, T> {
    schema: &'a str,
    seed: Option<u64>,
    rows: &'a [T],
}

/// Parsed inputs plus where to write.
struct Job<'a> {
    cli: &'a Cli,
    config: Config,
    written: Vec<PathBuf>,
}

impl Job<'_> {
    fn mode(&self) -> &'static str {
        self.cli.mode.name()
    }

    fn seed(&self) -> u64 {
        self.cli
            .seed
            .or_else(|| self.config.experiment.as_ref().and_then(|e| e.seed))
            .unwrap_or(0)
    }

    fn panel(&self) -> Result<IncomePanel, CliError> {
        let path = self
            .cli
            .data
            .as_ref()
            .ok_or_else(|| CliError::Input(format!("mode {} needs --data", self.mode())))?;
        data::parse_panel_csv(path)
    }

    fn experiment(&self) -> ExperimentSection {
        self.config.experiment.clone().unwrap_or_default()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cli.out.join(name)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn write_rows<T: Serialize>(&mut self, stem: &str, schema: &str, seed: Option<u64>, rows: &[T]) -> Result<(), CliError> {
        if self.cli.format.json() {
            self.write_json(&format!("{stem}.json"), &Rows { schema, seed, rows })?;
        }
        if self.cli.format.csv() {
            self.write_csv(&format!("{stem}.csv"), rows)?;
        }
        Ok(())
    }
}

pub fn compute_indices(panel: &IncomePanel, line: &PovertyLine, presets: &[PresetKind]) -> Result<Vec<IndexRow>, CliError> {
    let mut rows = Vec::new();
    for &kind in presets {
        let spec = make_spec(kind);
        for (j, &t) in panel.grid().points().iter().enumerate() {
            let z = line.at(t);
            rows.push(IndexRow {
                preset: kind.to_string(),
                t,
                z,
                n: panel.n(),
                poor: panel.column(j).iter().filter(|&&y| y <= z).count(),
                value: gpi_path(panel, line, &spec, t)?,
            });
        }
    }
    Ok(rows)
}

fn run_compute(job: &mut Job) -> Result<(), CliError> {
    let panel = job.panel()?;
    let line = job.config.require_line("compute")?;
    let presets = job.config.require_indices("compute")?;
    let rows = compute_indices(&panel, line, presets)?;
    job.write_rows("indices", INDICES_SCHEMA, None, &rows)
}

fn run_ci(job: &mut Job) -> Result<(), CliError> {
    let panel = job.panel()?;
    let line = job.config.require_line("ci")?;
    let presets = job.config.require_indices("ci")?.to_vec();
    let exp = job.experiment();
    let times = exp.times.clone().unwrap_or_else(|| panel.grid().points().to_vec());
    let seed = job.seed();
    let mut rows = Vec::new();
    for &kind in &presets {
        for &t in &times {
            let ci = bootstrap_ci(&panel, line, kind, t, exp.level, exp.resamples, seed)?;
            if ci.degenerate {
                eprintln!("warning: {kind} at t = {t}: no resample contains a poor individual; interval set to [0, 0]");
            }
            rows.push(CiRow {
                preset: kind.to_string(),
                t,
                z: line.at(t),
                estimate: ci.estimate,
                lo: ci.lo,
                hi: ci.hi,
                level: ci.level,
                resamples: ci.resamples,
                degenerate: ci.degenerate,
            });
        }
    }
    job.write_rows("ci", CI_SCHEMA, Some(seed), &rows)
}

fn run_change(job: &mut Job) -> Result<(), CliError> {
    let panel = job.panel()?;
    let line = job.config.require_line("change")?;
    let presets = job.config.require_indices("change")?.to_vec();
    let exp = job.experiment();
    let points = panel.grid().points();
    let from = exp.from.unwrap_or(points[0]);
    let to = exp.to.unwrap_or(points[points.len() - 1]);
    let seed = job.seed();
    let mut rows = Vec::new();
    for &kind in &presets {
        let c = relative_change_ci(&panel, line, kind, from, to, exp.level, exp.resamples, seed)?;
        rows.push(ChangeRow {
            preset: kind.to_string(),
            from,
            to,
            point: c.point,
            lo: c.lo,
            hi: c.hi,
            level: c.level,
            resamples: c.resamples,
            usable: c.usable,
        });
    }
    job.write_rows("change", CHANGE_SCHEMA, Some(seed), &rows)
}

fn experiment_config(job: &Job, mode: &str, need_reps: bool) -> Result<ExperimentConfig, CliError> {
    let model = job.config.require_model(mode)?;
    let line = job.config.require_line(mode)?;
    let presets = job.config.require_indices(mode)?;
    let exp = job.config.require_experiment(mode)?;
    let n_ladder = exp
        .n_ladder
        .clone()
        .ok_or_else(|| CliError::Input(format!("[experiment] needs n_ladder for mode {mode}")))?;
    let reps = match exp.reps {
        Some(r) => r,
        None if need_reps => {
            return Err(CliError::Input(format!("[experiment] needs reps for mode {mode}")));
        }
        None => 50,
    };
    Ok(ExperimentConfig {
        family: model.family.clone(),
        grid: model.grid.clone(),
        line: line.clone(),
        presets: presets.to_vec(),
        n_ladder,
        reps,
        seed: job.seed(),
        diagnostics: exp.diagnostics.clone(),
    })
}

/// Per-(n, φ) table of a Monte Carlo report.
#[derive(Debug, Clone, Serialize)]
pub struct McCsvRow<'a> {
    pub n: usize,
    pub phi_id: &'a str,
    pub remainder_median: f64,
    pub remainder_p90: f64,
    pub remainder_max: f64,
    pub scaled_mean: f64,
    pub scaled_variance: f64,
    pub scaled_skewness: f64,
    pub scaled_excess_kurtosis: f64,
    pub linear_mean: f64,
    pub linear_variance: f64,
    pub linear_skewness: f64,
    pub linear_excess_kurtosis: f64,
}

pub fn mc_csv_rows(report: &McReport) -> Vec<McCsvRow<'_>> {
    report
        .cells
        .iter()
        .map(|c| McCsvRow {
            n: c.n,
            phi_id: &c.phi_id,
            remainder_median: c.remainder_median,
            remainder_p90: c.remainder_p90,
            remainder_max: c.remainder_max,
            scaled_mean: c.scaled_error.mean,
            scaled_variance: c.scaled_error.variance,
            scaled_skewness: c.scaled_error.skewness,
            scaled_excess_kurtosis: c.scaled_error.excess_kurtosis,
            linear_mean: c.linear_part.mean,
            linear_variance: c.linear_part.variance,
            linear_skewness: c.linear_part.skewness,
            linear_excess_kurtosis: c.linear_part.excess_kurtosis,
        })
        .collect()
}

fn run_simulate(job: &mut Job) -> Result<(), CliError> {
    let cfg = experiment_config(job, "simulate", true)?;
    let report = run_experiment(&cfg)?;
    if job.cli.format.json() {
        job.write_json("mc_report.json", &report)?;
    }
    if job.cli.format.csv() {
        job.write_csv("mc_report.csv", &mc_csv_rows(&report))?;
    }
    Ok(())
}

fn run_check(job: &mut Job) -> Result<(), CliError> {
    let cfg = experiment_config(job, "check", false)?;
    let report = hp_checks(&cfg)?;
    job.write_json("hp_report.json", &report)
}

/// Runs one parsed invocation and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let config = config::parse_config(&cli.config)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", cli.out.display())))?;
    let mut job = Job {
        cli,
        config,
        written: Vec::new(),
    };
    match cli.mode {
        Command::Compute => run_compute(&mut job)?,
        Command::Ci => run_ci(&mut job)?,
        Command::Change => run_change(&mut job)?,
        Command::Simulate => run_simulate(&mut job)?,
        Command::Check => run_check(&mut job)?,
    }
    Ok(job.written)
}

/// Parses `args` (program name first), runs, reports on stdout/stderr and
/// returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", display(&f));
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
