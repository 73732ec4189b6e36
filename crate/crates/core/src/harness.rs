//! Replication engine and diagnostics.
//!
//! [`run_experiment`] samples panels along a ladder of sample sizes and
//! decomposes `√n(J_n − J)` at every index of the φ-grid (presets × grid
//! times). Replication `r` at size `n` draws from a stream keyed by
//! `(seed, n, r)` only, and results are collected in replication order, so a
//! report is a pure function of its configuration.

use crate::asymptotics::{Functionals, Phi, PreparedColumn, Representation, RepresentationSample, POOR_SHARE_BOUNDS};
use crate::error::{Error, Result};
use crate::gpi::{gpi_value_sorted, GpiSpec, PovertyLine};
use crate::income_model::{sample_panel, uniform_cross_moment, DistributionFamily, IncomePanel, Kernel, TimeGrid};
use crate::presets::{hp2_errors, make_limits, make_spec, Mode, PresetKind};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::{ks_distance_sorted, median, ols_slope, quantile, quantile_sorted, Moments};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const MC_REPORT_SCHEMA: &str = "gpilab.mc_report/v1";
pub const HP_REPORT_SCHEMA: &str = "gpilab.hp_report/v1";

/// Median remainders at or below this level are treated as an exact
/// representation (quadrature and rounding noise only).
pub const EXACT_REMAINDER: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    /// `(H₀, H∞)` bounds for the H functionals.
    pub h_bounds: (f64, f64),
    /// Sample sizes compared by the Glivenko–Cantelli check.
    pub ks_sizes: (usize, usize),
    pub ks_reps: usize,
    /// Paths per lag in the cross-moment exponent fit.
    pub moment_reps: usize,
    /// Panels per rung used to locate the median poor count.
    pub hp2_panels: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            h_bounds: (1e-3, 1e3),
            ks_sizes: (400, 6400),
            ks_reps: 200,
            moment_reps: 20_000,
            hp2_panels: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub family: DistributionFamily,
    pub grid: TimeGrid,
    pub line: PovertyLine,
    pub presets: Vec<PresetKind>,
    pub n_ladder: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub diagnostics: DiagnosticsConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.presets.is_empty() {
            return Err(Error::InvalidInput("no presets configured".into()));
        }
        for p in &self.presets {
            p.validate()?;
        }
        if self.n_ladder.is_empty() || self.n_ladder[0] == 0 {
            return Err(Error::InvalidInput("sample-size ladder must be nonempty and positive".into()));
        }
        if self.n_ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "sample-size ladder must be strictly increasing: {:?}",
                self.n_ladder
            )));
        }
        if self.reps < 50 {
            return Err(Error::InvalidInput(format!("need at least 50 replications, got {}", self.reps)));
        }
        if self.grid.horizon() > self.family.horizon() {
            return Err(Error::InvalidInput(format!(
                "grid horizon {} exceeds model horizon {}",
                self.grid.horizon(),
                self.family.horizon()
            )));
        }
        let (h0, hinf) = self.diagnostics.h_bounds;
        if h0.is_nan() || hinf.is_nan() || h0 >= hinf {
            return Err(Error::InvalidInput(format!("H bounds ({h0}, {hinf}) are not ordered")));
        }
        hp0_witness(&self.family, &self.grid, &self.line)?;
        Ok(())
    }

    /// Presets × grid times, preset-major.
    pub fn phi_grid(&self) -> Vec<Phi> {
        self.presets
            .iter()
            .flat_map(|&kind| {
                self.grid
                    .points()
                    .iter()
                    .map(move |&t| Phi::new(kind, t, self.line.clone()))
            })
            .collect()
    }
}

/// Range of the poor share `G_t(Z(t))` over the grid; a setup error if it
/// leaves [`POOR_SHARE_BOUNDS`].
pub fn hp0_witness(family: &DistributionFamily, grid: &TimeGrid, line: &PovertyLine) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &t in grid.points() {
        let u = family.cdf(t, line.at(t))?;
        lo = lo.min(u);
        hi = hi.max(u);
    }
    let (a, b) = POOR_SHARE_BOUNDS;
    if lo > a && hi < b {
        Ok((lo, hi))
    } else {
        Err(Error::Setup(format!(
            "poor share ranges over [{lo}, {hi}] on the grid, outside ({a}, {b})"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiSummary {
    pub id: String,
    pub preset: String,
    pub t: f64,
    pub z: f64,
    pub mode: Mode,
    pub functionals: Functionals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCell {
    pub n: usize,
    pub phi_id: String,
    pub remainder_median: f64,
    pub remainder_p90: f64,
    pub remainder_max: f64,
    /// Moments of `√n(J_n − J)`.
    pub scaled_error: Moments,
    /// Moments of `α + β`.
    pub linear_part: Moments,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RungSummary {
    pub n: usize,
    /// `max_φ |remainder|`, one entry per replication.
    pub sup_remainder: Vec<f64>,
    pub median_sup: f64,
    pub p90_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiDecay {
    pub phi_id: String,
    pub medians: Vec<f64>,
    pub slope: Option<f64>,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySummary {
    pub n: Vec<usize>,
    /// Median over replications of `max_φ |remainder|`, per rung.
    pub median_sup: Vec<f64>,
    /// Least-squares slope of log median against log n; absent when exact.
    pub slope: Option<f64>,
    pub exact: bool,
    pub per_phi: Vec<PhiDecay>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub schema: String,
    pub seed: u64,
    pub reps: usize,
    pub n_ladder: Vec<usize>,
    pub phis: Vec<PhiSummary>,
    /// Rung-major, φ-minor.
    pub cells: Vec<McCell>,
    pub rungs: Vec<RungSummary>,
    pub decay: DecaySummary,
}

fn prepare_columns(family: &DistributionFamily, panel: &IncomePanel) -> Result<Vec<PreparedColumn>> {
    panel
        .grid()
        .points()
        .iter()
        .enumerate()
        .map(|(j, &t)| Ok(PreparedColumn::new(&panel.column(j), &family.at(t)?)))
        .collect()
}

/// Runs every replication of every rung and aggregates the decompositions.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<McReport> {
    cfg.validate()?;
    let phis = cfg.phi_grid();
    let reps: Vec<Representation> = phis
        .par_iter()
        .map(|phi| Representation::new(&cfg.family, phi, &make_limits(phi.kind)))
        .collect::<Result<_>>()?;
    let column_of: Vec<usize> = phis
        .iter()
        .map(|p| cfg.grid.index_of(p.t).expect("φ-grid times come from the grid"))
        .collect();

    let mut cells = Vec::new();
    let mut rungs = Vec::new();
    for &n in &cfg.n_ladder {
        // samples[r][φ]
        let samples: Vec<Vec<RepresentationSample>> = (0..cfg.reps)
            .into_par_iter()
            .map(|r| {
                let seed = derive_seed(cfg.seed, &[n as u64, r as u64]);
                let panel = sample_panel(&cfg.family, n, &cfg.grid, seed)?;
                let cols = prepare_columns(&cfg.family, &panel)?;
                reps.iter()
                    .zip(&column_of)
                    .map(|(rep, &j)| rep.sample_prepared(&cols[j]))
                    .collect()
            })
            .collect::<Result<_>>()?;

        for (k, phi) in phis.iter().enumerate() {
            let abs_rem: Vec<f64> = samples.iter().map(|s| s[k].remainder.abs()).collect();
            let scaled: Vec<f64> = samples.iter().map(|s| s[k].scaled_error()).collect();
            let linear: Vec<f64> = samples.iter().map(|s| s[k].linear_part()).collect();
            cells.push(McCell {
                n,
                phi_id: phi.id(),
                remainder_median: median(&abs_rem),
                remainder_p90: quantile(&abs_rem, 0.9),
                remainder_max: abs_rem.iter().copied().fold(0.0, f64::max),
                scaled_error: Moments::of(&scaled),
                linear_part: Moments::of(&linear),
            });
        }
        let sup: Vec<f64> = samples
            .iter()
            .map(|s| s.iter().map(|x| x.remainder.abs()).fold(0.0, f64::max))
            .collect();
        rungs.push(RungSummary {
            n,
            median_sup: median(&sup),
            p90_sup: quantile(&sup, 0.9),
            sup_remainder: sup,
        });
    }

    let phi_summaries = phis
        .iter()
        .zip(&reps)
        .map(|(phi, rep)| PhiSummary {
            id: phi.id(),
            preset: phi.kind.to_string(),
            t: phi.t,
            z: phi.z(),
            mode: rep.mode(),
            functionals: *rep.functionals(),
        })
        .collect::<Vec<_>>();
    let decay = decay_of(&cfg.n_ladder, &rungs, &cells, &phi_summaries);
    Ok(McReport {
        schema: MC_REPORT_SCHEMA.into(),
        seed: cfg.seed,
        reps: cfg.reps,
        n_ladder: cfg.n_ladder.clone(),
        phis: phi_summaries,
        cells,
        rungs,
        decay,
    })
}

fn log_slope(ns: &[usize], medians: &[f64]) -> (Option<f64>, bool) {
    let exact = medians.iter().all(|&m| m <= EXACT_REMAINDER);
    if exact || ns.len() < 2 {
        return (None, exact);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|&m| m.max(f64::MIN_POSITIVE).ln()).collect();
    (Some(ols_slope(&xs, &ys)), false)
}

fn decay_of(ns: &[usize], rungs: &[RungSummary], cells: &[McCell], phis: &[PhiSummary]) -> DecaySummary {
    let median_sup: Vec<f64> = rungs.iter().map(|r| r.median_sup).collect();
    let (slope, exact) = log_slope(ns, &median_sup);
    let per_phi = phis
        .iter()
        .map(|p| {
            let medians: Vec<f64> = cells
                .iter()
                .filter(|c| c.phi_id == p.id)
                .map(|c| c.remainder_median)
                .collect();
            let (slope, exact) = log_slope(ns, &medians);
            PhiDecay {
                phi_id: p.id.clone(),
                medians,
                slope,
                exact,
            }
        })
        .collect();
    DecaySummary {
        n: ns.to_vec(),
        median_sup,
        slope,
        exact,
        per_phi,
    }
}

/// Decay of the uniform remainder along the ladder; needs three rungs.
pub fn remainder_decay(report: &McReport) -> Result<DecaySummary> {
    if report.rungs.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "decay needs at least 3 ladder points, report has {}",
            report.rungs.len()
        )));
    }
    Ok(decay_of(&report.n_ladder, &report.rungs, &report.cells, &report.phis))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalitySummary {
    pub phi_id: String,
    pub n: usize,
    pub variance_scaled: f64,
    pub variance_linear: f64,
    /// `Var(√n(J_n − J)) / Var(α + β)`.
    pub variance_ratio: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Moment comparison at the largest rung; needs at least 300 replications.
pub fn normality_summary(report: &McReport) -> Result<Vec<NormalitySummary>> {
    if report.reps < 300 {
        return Err(Error::InvalidInput(format!(
            "normality summary needs at least 300 replications, report has {}",
            report.reps
        )));
    }
    let top = *report
        .n_ladder
        .last()
        .ok_or_else(|| Error::InvalidInput("report has no rungs".into()))?;
    Ok(report
        .cells
        .iter()
        .filter(|c| c.n == top)
        .map(|c| NormalitySummary {
            phi_id: c.phi_id.clone(),
            n: c.n,
            variance_scaled: c.scaled_error.variance,
            variance_linear: c.linear_part.variance,
            variance_ratio: c.scaled_error.variance / c.linear_part.variance,
            skewness: c.scaled_error.skewness,
            excess_kurtosis: c.scaled_error.excess_kurtosis,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hp0Check {
    pub min_poor_share: f64,
    pub max_poor_share: f64,
    pub bounds: (f64, f64),
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hp1Check {
    pub sizes: (usize, usize),
    pub reps: usize,
    /// Median over replications of `max_t sup_y |G_{t,n} − G_t|`.
    pub median_sup_distance: (f64, f64),
    pub ratio: f64,
    /// `√(n₂/n₁)`, the ratio expected at rate `n^{-1/2}`.
    pub expected_ratio: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hp2Row {
    pub preset: String,
    pub t: f64,
    pub n: Vec<usize>,
    /// Median observed poor count at each rung.
    pub q: Vec<usize>,
    pub sqrt_n_eps_c: Vec<f64>,
    pub sqrt_n_eps_pi: Vec<f64>,
    pub strictly_decreasing: bool,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hp6Row {
    pub phi_id: String,
    pub hc: f64,
    pub hpi: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hp7Check {
    pub kernel: Kernel,
    pub base_time: f64,
    pub lags: Vec<f64>,
    /// `1/3 − E[G_s(Y(s)) G_t(Y(t))]` per lag.
    pub deviations: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Fitted exponent `1 + r` of the deviation against the lag.
    pub exponent: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpReport {
    pub schema: String,
    pub seed: u64,
    pub hp0: Hp0Check,
    pub hp1: Hp1Check,
    pub hp2: Vec<Hp2Row>,
    pub h_bounds: (f64, f64),
    pub hp6: Vec<Hp6Row>,
    pub hp7: Hp7Check,
}

/// Exponent at or above which the cross-moment condition is taken to hold.
pub const HP7_HOLDS_AT: f64 = 1.5;
/// Exponent at or below which it is flagged as violated.
pub const HP7_VIOLATED_AT: f64 = 1.2;
const HP7_MIN_LAG: f64 = 0.01;
const HP7_MAX_LAG: f64 = 0.2;
const HP7_LAGS: usize = 8;

/// Finite-sample diagnostics of the hypotheses behind the representation.
pub fn hp_checks(cfg: &ExperimentConfig) -> Result<HpReport> {
    let (lo, hi) = hp0_witness(&cfg.family, &cfg.grid, &cfg.line)?;
    cfg.validate()?;
    let d = &cfg.diagnostics;
    let hp0 = Hp0Check {
        min_poor_share: lo,
        max_poor_share: hi,
        bounds: POOR_SHARE_BOUNDS,
        verdict: Verdict::Holds,
    };

    // uniform convergence of the empirical CDFs over the grid
    let sup_distance = |n: usize| -> Result<f64> {
        let marginals = cfg
            .grid
            .points()
            .iter()
            .map(|&t| cfg.family.at(t))
            .collect::<Result<Vec<_>>>()?;
        let dists: Vec<f64> = (0..d.ks_reps)
            .into_par_iter()
            .map(|r| {
                let panel = sample_panel(&cfg.family, n, &cfg.grid, derive_seed(cfg.seed, &[1, n as u64, r as u64]))?;
                Ok(marginals
                    .iter()
                    .enumerate()
                    .map(|(j, g)| {
                        let mut col = panel.column(j);
                        col.sort_by(f64::total_cmp);
                        ks_distance_sorted(&col, |y| g.cdf(y))
                    })
                    .fold(0.0, f64::max))
            })
            .collect::<Result<_>>()?;
        Ok(median(&dists))
    };
    let (n1, n2) = d.ks_sizes;
    let (d1, d2) = (sup_distance(n1)?, sup_distance(n2)?);
    let expected_ratio = (n2 as f64 / n1 as f64).sqrt();
    let ratio = d1 / d2;
    let hp1 = Hp1Check {
        sizes: (n1, n2),
        reps: d.ks_reps,
        median_sup_distance: (d1, d2),
        ratio,
        expected_ratio,
        verdict: if (ratio / expected_ratio - 1.0).abs() <= 0.3 {
            Verdict::Holds
        } else {
            Verdict::Inconclusive
        },
    };

    // rank-weight errors at the median observed poor count
    let mut median_q = vec![vec![0usize; cfg.grid.len()]; cfg.n_ladder.len()];
    for (i, &n) in cfg.n_ladder.iter().enumerate() {
        let counts: Vec<Vec<f64>> = (0..d.hp2_panels.max(1))
            .into_par_iter()
            .map(|r| {
                let panel = sample_panel(&cfg.family, n, &cfg.grid, derive_seed(cfg.seed, &[2, n as u64, r as u64]))?;
                Ok(cfg
                    .grid
                    .points()
                    .iter()
                    .enumerate()
                    .map(|(j, &t)| {
                        let z = cfg.line.at(t);
                        panel.column(j).iter().filter(|&&y| y <= z).count() as f64
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        for j in 0..cfg.grid.len() {
            let qs: Vec<f64> = counts.iter().map(|c| c[j]).collect();
            median_q[i][j] = (median(&qs).round() as usize).clamp(1, n);
        }
    }
    let mut hp2 = Vec::new();
    for &kind in &cfg.presets {
        for (j, &t) in cfg.grid.points().iter().enumerate() {
            let mut q = Vec::new();
            let mut ec = Vec::new();
            let mut ep = Vec::new();
            for (i, &n) in cfg.n_ladder.iter().enumerate() {
                let qi = median_q[i][j];
                let e = hp2_errors(kind, n, qi)?;
                let root = (n as f64).sqrt();
                q.push(qi);
                ec.push(root * e.eps_c);
                ep.push(root * e.eps_pi);
            }
            let exact = ec.iter().chain(&ep).all(|&v| v < 1e-12);
            let strictly_decreasing = ec.windows(2).all(|w| w[1] < w[0]) && ep.windows(2).all(|w| w[1] < w[0]);
            hp2.push(Hp2Row {
                preset: kind.to_string(),
                t,
                n: cfg.n_ladder.clone(),
                q,
                sqrt_n_eps_c: ec,
                sqrt_n_eps_pi: ep,
                strictly_decreasing,
                exact,
            });
        }
    }

    let (h0, hinf) = d.h_bounds;
    let hp6 = cfg
        .phi_grid()
        .par_iter()
        .map(|phi| {
            let f = Functionals::compute(&cfg.family, phi, &make_limits(phi.kind))?;
            let inside = |h: f64| h > h0 && h < hinf;
            Ok(Hp6Row {
                phi_id: phi.id(),
                hc: f.hc,
                hpi: f.hpi,
                verdict: if inside(f.hc) && inside(f.hpi) {
                    Verdict::Holds
                } else {
                    Verdict::Violated
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let hp7 = cross_moment_exponent(&cfg.family, cfg.grid.points()[0], d.moment_reps, derive_seed(cfg.seed, &[7]))?;

    Ok(HpReport {
        schema: HP_REPORT_SCHEMA.into(),
        seed: cfg.seed,
        hp0,
        hp1,
        hp2,
        h_bounds: d.h_bounds,
        hp6,
        hp7,
    })
}

/// Log-log fit of `|1/3 − E[G_s(Y_s) G_t(Y_t)]|` against `|s − t|` over
/// geometric lags in [0.01, 0.2] starting at `base`. Every lag reuses the
/// same random stream.
pub fn cross_moment_exponent(family: &DistributionFamily, base: f64, reps: usize, seed: u64) -> Result<Hp7Check> {
    let ratio = HP7_MAX_LAG / HP7_MIN_LAG;
    let lags: Vec<f64> = (0..HP7_LAGS)
        .map(|k| HP7_MIN_LAG * ratio.powf(k as f64 / (HP7_LAGS - 1) as f64))
        .filter(|&h| base + h <= family.horizon())
        .collect();
    let moments = lags
        .par_iter()
        .map(|&h| uniform_cross_moment(family, base, base + h, reps, seed))
        .collect::<Result<Vec<_>>>()?;
    let deviations: Vec<f64> = moments.iter().map(|m| 1.0 / 3.0 - m.estimate).collect();
    let std_errors: Vec<f64> = moments.iter().map(|m| m.std_error).collect();
    let exponent = if lags.len() >= 3 && deviations.iter().all(|&d| d > 0.0) {
        let xs: Vec<f64> = lags.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = deviations.iter().map(|d| d.ln()).collect();
        Some(ols_slope(&xs, &ys))
    } else {
        None
    };
    let verdict = match exponent {
        Some(e) if e >= HP7_HOLDS_AT => Verdict::Holds,
        Some(e) if e <= HP7_VIOLATED_AT => Verdict::Violated,
        _ => Verdict::Inconclusive,
    };
    Ok(Hp7Check {
        kernel: family.kernel(),
        base_time: base,
        lags,
        deviations,
        std_errors,
        exponent,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
    /// Set when no resample contained a poor individual; the interval is
    /// then `[0, 0]`.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeInterval {
    /// `(J_n(t₂) − J_n(t₁)) / J_n(t₁)` on the observed panel.
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub resamples: usize,
    /// Resamples with a nonzero index at `t₁`.
    pub usable: usize,
}

fn check_bootstrap_args(level: f64, resamples: usize) -> Result<()> {
    if resamples < 200 {
        return Err(Error::InvalidInput(format!("need at least 200 resamples, got {resamples}")));
    }
    if !(level > 0.5 && level < 1.0) {
        return Err(Error::InvalidInput(format!("confidence level {level} not in (0.5, 1)")));
    }
    Ok(())
}

/// Row multiplicities of one bootstrap draw of `n` individuals.
fn resample_counts<R: Rng>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

/// A column sorted once, so each resample's order statistics are produced
/// in linear time from row multiplicities.
struct SortedColumn {
    order: Vec<usize>,
    values: Vec<f64>,
}

impl SortedColumn {
    fn new(values: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        SortedColumn { order, values }
    }

    fn sorted(&self) -> Vec<f64> {
        self.order.iter().map(|&i| self.values[i]).collect()
    }

    fn resampled(&self, counts: &[u32], out: &mut Vec<f64>) {
        out.clear();
        for &i in &self.order {
            for _ in 0..counts[i] {
                out.push(self.values[i]);
            }
        }
    }
}

fn percentile_interval(mut stats: Vec<f64>, level: f64) -> (f64, f64) {
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    (quantile_sorted(&stats, tail), quantile_sorted(&stats, 1.0 - tail))
}

fn column_index(panel: &IncomePanel, t: f64) -> Result<usize> {
    panel
        .grid()
        .index_of(t)
        .ok_or_else(|| Error::Domain(format!("time {t} is not a grid time")))
}

/// Percentile bootstrap interval for the index at time `t`, resampling whole
/// individual paths with replacement.
pub fn bootstrap_ci(
    panel: &IncomePanel,
    line: &PovertyLine,
    kind: PresetKind,
    t: f64,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapInterval> {
    check_bootstrap_args(level, resamples)?;
    kind.validate()?;
    let spec = make_spec(kind);
    let col = SortedColumn::new(panel.column(column_index(panel, t)?));
    let z = line.at(t);
    let estimate = gpi_value_sorted(&col.sorted(), z, &spec)?;
    let n = panel.n();
    let draws: Vec<(f64, bool)> = (0..resamples)
        .into_par_iter()
        .map_init(Vec::new, |buf, b| {
            let mut rng = stream_rng(seed, b as u64);
            let counts = resample_counts(n, &mut rng);
            col.resampled(&counts, buf);
            let any_poor = buf.first().is_some_and(|&y| y <= z);
            Ok((gpi_value_sorted(buf, z, &spec)?, any_poor))
        })
        .collect::<Result<_>>()?;
    if draws.iter().all(|d| !d.1) {
        return Ok(BootstrapInterval {
            estimate,
            lo: 0.0,
            hi: 0.0,
            level,
            resamples,
            degenerate: true,
        });
    }
    let (lo, hi) = percentile_interval(draws.into_iter().map(|d| d.0).collect(), level);
    Ok(BootstrapInterval {
        estimate,
        lo,
        hi,
        level,
        resamples,
        degenerate: false,
    })
}

fn relative_change(spec: &GpiSpec, a: &[f64], b: &[f64], za: f64, zb: f64) -> Result<Option<f64>> {
    let ja = gpi_value_sorted(a, za, spec)?;
    if ja == 0.0 {
        return Ok(None);
    }
    Ok(Some((gpi_value_sorted(b, zb, spec)? - ja) / ja))
}

/// Interval for the relative change `(J(t₂) − J(t₁)) / J(t₁)` by a paired
/// bootstrap: each resample draws individuals once and uses their incomes
/// at both times.
#[allow(clippy::too_many_arguments)]
pub fn relative_change_ci(
    panel: &IncomePanel,
    line: &PovertyLine,
    kind: PresetKind,
    t1: f64,
    t2: f64,
    level: f64,
    resamples: usize,
    seed: u64,
) -> Result<ChangeInterval> {
    check_bootstrap_args(level, resamples)?;
    kind.validate()?;
    if t1 >= t2 {
        return Err(Error::InvalidInput(format!("need t1 < t2, got {t1} and {t2}")));
    }
    let spec = make_spec(kind);
    let first = SortedColumn::new(panel.column(column_index(panel, t1)?));
    let second = SortedColumn::new(panel.column(column_index(panel, t2)?));
    let (z1, z2) = (line.at(t1), line.at(t2));
    let point = relative_change(&spec, &first.sorted(), &second.sorted(), z1, z2)?.ok_or_else(|| {
        Error::UndefinedChange(format!("{kind} is zero at t = {t1} in the observed panel"))
    })?;
    let n = panel.n();
    let draws: Vec<Option<f64>> = (0..resamples)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(a, b), r| {
                let mut rng = stream_rng(seed, r as u64);
                let counts = resample_counts(n, &mut rng);
                first.resampled(&counts, a);
                second.resampled(&counts, b);
                relative_change(&spec, a, b, z1, z2)
            },
        )
        .collect::<Result<_>>()?;
    let usable: Vec<f64> = draws.into_iter().flatten().collect();
    if (usable.len() as f64) < 0.95 * resamples as f64 {
        return Err(Error::UndefinedChange(format!(
            "{kind} is zero at t = {t1} in {} of {resamples} resamples",
            resamples - usable.len()
        )));
    }
    let used = usable.len();
    let (lo, hi) = percentile_interval(usable, level);
    Ok(ChangeInterval {
        point,
        lo,
        hi,
        level,
        resamples,
        usable: used,
    })
}
