//! Time-indexed parametric income distributions and a path sampler.
//!
//! A [`DistributionFamily`] gives, for every time `t` in `[0, T]`, a
//! continuous, strictly increasing marginal CDF `G_t` with a closed-form
//! quantile. Paths are drawn through a Gaussian copula: a latent standardized
//! Gaussian process `X(t)` whose correlation is given by the dependence
//! kernel is pushed through `Y(t) = G_t^{-1}(Φ(X(t)))`, so every column of a
//! sampled panel has exact marginal `G_t`.

use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_quantile, std_normal_sf};
use crate::rng::stream_rng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Strictly increasing observation times inside `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    points: Vec<f64>,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(points: Vec<f64>, horizon: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("time grid is empty".into()));
        }
        if points.iter().any(|t| !t.is_finite()) || !horizon.is_finite() {
            return Err(Error::InvalidInput("time grid contains a non-finite value".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "time grid must be strictly increasing: {points:?}"
            )));
        }
        if points[0] < 0.0 || points[points.len() - 1] > horizon {
            return Err(Error::InvalidInput(format!(
                "time grid {points:?} leaves [0, {horizon}]"
            )));
        }
        Ok(TimeGrid { points, horizon })
    }

    /// Grid whose horizon is its last point.
    pub fn spanning(points: Vec<f64>) -> Result<Self> {
        let horizon = points.last().copied().unwrap_or(0.0);
        TimeGrid::new(points, horizon)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Column index of grid time `t` (exact match up to 1e-12).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.points.iter().position(|&p| (p - t).abs() <= 1e-12)
    }
}

/// A piecewise-linear function of time given by `(time, value)` knots, flat
/// outside the knot range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    knots: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Schedule {
            knots: vec![(0.0, value)],
        }
    }

    pub fn from_knots(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidInput("schedule needs at least one knot".into()));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidInput("schedule knot is not finite".into()));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput(
                "schedule knot times must be strictly increasing".into(),
            ));
        }
        Ok(Schedule { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        if t >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|&(kt, _)| kt <= t);
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Smallest knot value; a lower bound of the schedule everywhere.
    pub fn min_value(&self) -> f64 {
        self.knots.iter().map(|k| k.1).fold(f64::INFINITY, f64::min)
    }
}

/// Marginal law with time-varying parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Marginal {
    LogNormal { location: Schedule, scale: Schedule },
    Pareto { minimum: Schedule, shape: Schedule },
    Uniform { upper: Schedule },
}

/// Correlation kernel of the latent Gaussian process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    SquaredExponential { tau: f64 },
    Exponential { tau: f64 },
    Independent,
}

impl Kernel {
    pub fn correlation(&self, lag: f64) -> f64 {
        let lag = lag.abs();
        match *self {
            Kernel::SquaredExponential { tau } => (-lag * lag / (2.0 * tau * tau)).exp(),
            Kernel::Exponential { tau } => (-lag / tau).exp(),
            Kernel::Independent => {
                if lag == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// The marginal law at one fixed time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedMarginal {
    LogNormal { location: f64, scale: f64 },
    Pareto { minimum: f64, shape: f64 },
    Uniform { upper: f64 },
}

impl FixedMarginal {
    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            FixedMarginal::LogNormal { location, scale } => {
                if y <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((y.ln() - location) / scale)
                }
            }
            FixedMarginal::Pareto { minimum, shape } => {
                if y <= minimum {
                    0.0
                } else {
                    1.0 - (minimum / y).powf(shape)
                }
            }
            FixedMarginal::Uniform { upper } => (y / upper).clamp(0.0, 1.0),
        }
    }

    /// Quantile for `p` in (0, 1); no range check.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            FixedMarginal::LogNormal { location, scale } => {
                (location + scale * std_normal_quantile(p)).exp()
            }
            FixedMarginal::Pareto { minimum, shape } => minimum * (1.0 - p).powf(-1.0 / shape),
            FixedMarginal::Uniform { upper } => p * upper,
        }
    }

    /// `G^{-1}(Φ(x))`, evaluated without forming Φ(x) where a tail would
    /// round to 0 or 1.
    pub fn from_gaussian(&self, x: f64) -> f64 {
        match *self {
            FixedMarginal::LogNormal { location, scale } => (location + scale * x).exp(),
            FixedMarginal::Pareto { minimum, shape } => {
                minimum * std_normal_sf(x).powf(-1.0 / shape)
            }
            FixedMarginal::Uniform { upper } => {
                let p = std_normal_cdf(x);
                upper * p.clamp(f64::MIN_POSITIVE, 1.0)
            }
        }
    }
}

/// A time-indexed parametric income model on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionFamily {
    marginal: Marginal,
    kernel: Kernel,
    horizon: f64,
}

impl DistributionFamily {
    pub fn new(marginal: Marginal, kernel: Kernel, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be ≥ 0, got {horizon}")));
        }
        // piecewise-linear schedules stay above their smallest knot
        let check = |name: &str, s: &Schedule, bound: f64| {
            if s.min_value() > bound {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "{name} must exceed {bound} at every time, knots {:?}",
                    s.knots()
                )))
            }
        };
        match &marginal {
            Marginal::LogNormal { scale, .. } => check("lognormal scale", scale, 0.0)?,
            Marginal::Pareto { minimum, shape } => {
                check("pareto minimum", minimum, 0.0)?;
                check("pareto shape", shape, 1.0)?;
            }
            Marginal::Uniform { upper } => check("uniform upper bound", upper, 0.0)?,
        }
        match kernel {
            Kernel::SquaredExponential { tau } | Kernel::Exponential { tau }
                if !(tau.is_finite() && tau > 0.0) =>
            {
                return Err(Error::InvalidInput(format!("kernel scale must be > 0, got {tau}")));
            }
            _ => {}
        }
        Ok(DistributionFamily {
            marginal,
            kernel,
            horizon,
        })
    }

    /// Uniform(0, 1) marginal at every time.
    pub fn standard_uniform(kernel: Kernel, horizon: f64) -> Self {
        DistributionFamily::new(
            Marginal::Uniform {
                upper: Schedule::constant(1.0),
            },
            kernel,
            horizon,
        )
        .expect("valid uniform family")
    }

    /// Lognormal with constant location `m` and scale `s`.
    pub fn lognormal(m: f64, s: f64, kernel: Kernel, horizon: f64) -> Result<Self> {
        DistributionFamily::new(
            Marginal::LogNormal {
                location: Schedule::constant(m),
                scale: Schedule::constant(s),
            },
            kernel,
            horizon,
        )
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t >= 0.0 && t <= self.horizon {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )))
        }
    }

    /// The marginal law `G_t` frozen at time `t`.
    pub fn at(&self, t: f64) -> Result<FixedMarginal> {
        self.check_time(t)?;
        Ok(match &self.marginal {
            Marginal::LogNormal { location, scale } => FixedMarginal::LogNormal {
                location: location.value_at(t),
                scale: scale.value_at(t),
            },
            Marginal::Pareto { minimum, shape } => FixedMarginal::Pareto {
                minimum: minimum.value_at(t),
                shape: shape.value_at(t),
            },
            Marginal::Uniform { upper } => FixedMarginal::Uniform {
                upper: upper.value_at(t),
            },
        })
    }

    pub fn cdf(&self, t: f64, y: f64) -> Result<f64> {
        Ok(self.at(t)?.cdf(y))
    }

    pub fn quantile(&self, t: f64, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("probability {p} not in (0, 1)")));
        }
        Ok(self.at(t)?.quantile(p))
    }

    /// Lower Cholesky factor of the latent correlation matrix on `points`.
    fn latent_factor(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let m = points.len();
        let corr = DMatrix::from_fn(m, m, |i, j| self.kernel.correlation(points[i] - points[j]));
        let mut jitter = 0.0;
        for _ in 0..8 {
            let mut a = corr.clone();
            for i in 0..m {
                a[(i, i)] += jitter;
            }
            if let Some(ch) = a.cholesky() {
                return Ok(ch.l());
            }
            jitter = if jitter == 0.0 { 1e-12 } else { jitter * 10.0 };
        }
        Err(Error::Numerical(
            "latent correlation matrix is not positive definite".into(),
        ))
    }
}

/// `n` individual income paths observed on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IncomePanel {
    grid: TimeGrid,
    /// Row-major `n × m`.
    values: Vec<f64>,
    ids: Vec<String>,
}

impl IncomePanel {
    pub fn new(grid: TimeGrid, rows: Vec<Vec<f64>>, ids: Vec<String>) -> Result<Self> {
        if rows.len() != ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} identifiers",
                rows.len(),
                ids.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("panel has no individuals".into()));
        }
        let m = grid.len();
        let mut values = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} values, grid has {m} times",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "income {v} of individual {} is not positive",
                    ids[i]
                )));
            }
            values.extend(row);
        }
        Ok(IncomePanel { grid, values, ids })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let m = self.grid.len();
        self.values.iter().skip(j).step_by(m).copied().collect()
    }

    /// Column observed at grid time `t`.
    pub fn column_at(&self, t: f64) -> Result<Vec<f64>> {
        let j = self
            .grid
            .index_of(t)
            .ok_or_else(|| Error::Domain(format!("time {t} is not a grid time")))?;
        Ok(self.column(j))
    }
}

/// Draws `n` independent paths on `grid` through the Gaussian copula.
///
/// Row `i` uses its own random stream keyed by `(seed, i)`, so the result is
/// deterministic and independent of evaluation order.
pub fn sample_panel(family: &DistributionFamily, n: usize, grid: &TimeGrid, seed: u64) -> Result<IncomePanel> {
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be ≥ 1".into()));
    }
    let marginals = grid
        .points()
        .iter()
        .map(|&t| family.at(t))
        .collect::<Result<Vec<_>>>()?;
    let factor = family.latent_factor(grid.points())?;
    let m = grid.len();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream_rng(seed, i as u64);
        let z = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let x = &factor * z;
        rows.push(
            marginals
                .iter()
                .zip(x.iter())
                .map(|(g, &xi)| g.from_gaussian(xi))
                .collect(),
        );
    }
    let ids = (0..n).map(|i| format!("i{i}")).collect();
    IncomePanel::new(grid.clone(), rows, ids)
}

/// Monte Carlo estimate of `E[G_s(Y(s)) · G_t(Y(t))]` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossMoment {
    pub estimate: f64,
    pub std_error: f64,
}

/// Estimates `E[G_s(Y(s)) G_t(Y(t))]` from `reps` sampled paths.
///
/// Uses the control variate `E[U²] = 1/3` of a uniform `U = G(Y)`:
/// the estimator is `1/3 − mean((U_s − U_t)²)/2`, which has the same mean as
/// the plain product average but a standard error proportional to the
/// deviation from 1/3 itself.
pub fn uniform_cross_moment(
    family: &DistributionFamily,
    s: f64,
    t: f64,
    reps: usize,
    seed: u64,
) -> Result<CrossMoment> {
    if reps < 1000 {
        return Err(Error::InvalidInput(format!(
            "cross moment needs at least 1000 replications, got {reps}"
        )));
    }
    for time in [s, t] {
        family.check_time(time)?;
    }
    if s == t {
        return Ok(CrossMoment {
            estimate: 1.0 / 3.0,
            std_error: 0.0,
        });
    }
    let (a, b) = if s < t { (s, t) } else { (t, s) };
    let grid = TimeGrid::new(vec![a, b], family.horizon)?;
    let panel = sample_panel(family, reps, &grid, seed)?;
    let (ga, gb) = (family.at(a)?, family.at(b)?);
    let half_sq: Vec<f64> = (0..reps)
        .map(|i| {
            let row = panel.row(i);
            0.5 * (ga.cdf(row[0]) - gb.cdf(row[1])).powi(2)
        })
        .collect();
    let m = crate::stats::mean(&half_sq);
    let se = (crate::stats::variance(&half_sq) / reps as f64).sqrt();
    Ok(CrossMoment {
        estimate: 1.0 / 3.0 - m,
        std_error: se,
    })
}
