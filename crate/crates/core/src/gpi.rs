//! Finite-sample General Poverty Index.
//!
//! For a sample with ascending order statistics `Y_{1,n} ≤ … ≤ Y_{n,n}`,
//! poverty line `Z` and `Q_n = #{i : Y_i ≤ Z}` poor individuals,
//!
//! ```text
//! J_n = A(Q_n, n, Z) / (n B(Q_n)) · Σ_{j=1}^{Q_n} w(μ₁n + μ₂Q_n − μ₃j + μ₄) · d((Z − Y_{j,n}) / Z)
//! ```
//!
//! with `B(q) = Σ_{i=1}^{q} w(i)`. A sample with nobody poor has index 0.

use crate::error::{Error, Result};
use crate::income_model::{IncomePanel, Schedule};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

type ScaleFn = dyn Fn(usize, usize, f64) -> f64 + Send + Sync;
type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

/// The plug-in tuple `(A, w, d, μ)` selecting one member of the GPI family.
#[derive(Clone)]
pub struct GpiSpec {
    label: String,
    scale: Arc<ScaleFn>,
    weight: Arc<RealFn>,
    deprivation: Arc<RealFn>,
    mu: [i64; 4],
}

impl GpiSpec {
    /// `scale` is `A(q, n, z)`, `weight` is `w`, `deprivation` is `d` on [0, 1].
    pub fn new<A, W, D>(label: impl Into<String>, scale: A, weight: W, deprivation: D, mu: [i64; 4]) -> Self
    where
        A: Fn(usize, usize, f64) -> f64 + Send + Sync + 'static,
        W: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        GpiSpec {
            label: label.into(),
            scale: Arc::new(scale),
            weight: Arc::new(weight),
            deprivation: Arc::new(deprivation),
            mu,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mu(&self) -> [i64; 4] {
        self.mu
    }

    pub fn scale(&self, q: usize, n: usize, z: f64) -> f64 {
        (self.scale)(q, n, z)
    }

    pub fn weight(&self, x: f64) -> f64 {
        (self.weight)(x)
    }

    pub fn deprivation(&self, u: f64) -> f64 {
        (self.deprivation)(u)
    }

    /// `B(q) = Σ_{i=1}^{q} w(i)`.
    pub fn normalizer(&self, q: usize) -> f64 {
        (1..=q).map(|i| self.weight(i as f64)).sum()
    }

    /// Argument `μ₁n + μ₂q − μ₃j + μ₄` of the rank weight of the `j`-th poorest.
    pub fn weight_argument(&self, n: usize, q: usize, j: usize) -> f64 {
        let [m1, m2, m3, m4] = self.mu;
        (m1 * n as i64 + m2 * q as i64 - m3 * j as i64 + m4) as f64
    }
}

impl fmt::Debug for GpiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GpiSpec")
            .field("label", &self.label)
            .field("mu", &self.mu)
            .finish_non_exhaustive()
    }
}

/// Income threshold `Z(t)`, constant or piecewise linear in time.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PovertyLine {
    Constant { z: f64 },
    Knots { schedule: Schedule },
}

impl PovertyLine {
    pub fn constant(z: f64) -> Result<Self> {
        if !(z.is_finite() && z > 0.0) {
            return Err(Error::InvalidInput(format!("poverty line must be > 0, got {z}")));
        }
        Ok(PovertyLine::Constant { z })
    }

    pub fn knots(knots: Vec<(f64, f64)>) -> Result<Self> {
        let schedule = Schedule::from_knots(knots)?;
        if schedule.min_value() <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "poverty line knots must be > 0: {:?}",
                schedule.knots()
            )));
        }
        Ok(PovertyLine::Knots { schedule })
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            PovertyLine::Constant { z } => *z,
            PovertyLine::Knots { schedule } => schedule.value_at(t),
        }
    }
}

/// A cross-sectional sample of positive incomes.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSection {
    values: Vec<f64>,
}

impl CrossSection {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("cross-section is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidInput(format!("income {v} is not positive")));
        }
        Ok(CrossSection { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `G_n(y) = #{i : Y_i ≤ y} / n`.
pub fn empirical_cdf(xs: &CrossSection, y: f64) -> f64 {
    xs.values.iter().filter(|&&v| v <= y).count() as f64 / xs.n() as f64
}

/// `Q_n = #{i : Y_i ≤ z}`; an income equal to the line counts as poor.
pub fn poor_count(xs: &CrossSection, z: f64) -> usize {
    xs.values.iter().filter(|&&v| v <= z).count()
}

/// 1-based ranks; ties keep their original order.
pub fn ranks(xs: &CrossSection) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.n()).collect();
    order.sort_by(|&a, &b| xs.values[a].total_cmp(&xs.values[b]));
    let mut r = vec![0; xs.n()];
    for (pos, idx) in order.into_iter().enumerate() {
        r[idx] = pos + 1;
    }
    r
}

/// GPI of a cross-section at line `z`.
pub fn gpi_value(xs: &CrossSection, z: f64, spec: &GpiSpec) -> Result<f64> {
    gpi_value_sorted(&xs.sorted(), z, spec)
}

/// GPI of an ascending sample; the entry point for callers that already hold
/// order statistics (bootstrap, replication engine).
pub fn gpi_value_sorted(sorted: &[f64], z: f64, spec: &GpiSpec) -> Result<f64> {
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::InvalidInput(format!("poverty line must be > 0, got {z}")));
    }
    let n = sorted.len();
    let q = sorted.partition_point(|&y| y <= z);
    if q == 0 {
        return Ok(0.0);
    }
    let b = spec.normalizer(q);
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Specification(format!(
            "{}: B({q}) = {b} is not positive",
            spec.label
        )));
    }
    let mut sum = 0.0;
    for (idx, &y) in sorted[..q].iter().enumerate() {
        let arg = spec.weight_argument(n, q, idx + 1);
        let w = spec.weight(arg);
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Specification(format!(
                "{}: w({arg}) = {w} is not positive (n = {n}, q = {q}, j = {})",
                spec.label,
                idx + 1
            )));
        }
        sum += w * spec.deprivation((z - y) / z);
    }
    Ok(spec.scale(q, n, z) / (n as f64 * b) * sum)
}

/// Time-dependent index `J_n(φ)` on the panel column at grid time `t`.
pub fn gpi_path(panel: &IncomePanel, line: &PovertyLine, spec: &GpiSpec, t: f64) -> Result<f64> {
    let mut column = panel.column_at(t)?;
    column.sort_by(f64::total_cmp);
    gpi_value_sorted(&column, line.at(t), spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::income_model::TimeGrid;
    use proptest::prelude::*;

    fn xs(v: &[f64]) -> CrossSection {
        CrossSection::new(v.to_vec()).unwrap()
    }

    fn headcount() -> GpiSpec {
        GpiSpec::new("headcount", |q, _, _| q as f64, |_| 1.0, |_| 1.0, [0, 0, 0, 1])
    }

    fn fgt1() -> GpiSpec {
        GpiSpec::new("fgt1", |q, _, _| q as f64, |_| 1.0, |u| u, [0, 0, 0, 1])
    }

    fn sen() -> GpiSpec {
        GpiSpec::new("sen", |q, _, _| q as f64, |x| x, |u| u, [0, 1, 1, 1])
    }

    #[test]
    fn empirical_cdf_counts() {
        let s = xs(&[1.0, 2.0, 3.0]);
        assert!((empirical_cdf(&s, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(empirical_cdf(&s, 0.5), 0.0);
        assert_eq!(empirical_cdf(&s, 10.0), 1.0);
    }

    #[test]
    fn empirical_cdf_concentrates() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 1000;
        let s = CrossSection::new((0..n).map(|_| rng.random_range(1e-9..1.0)).collect()).unwrap();
        assert!((empirical_cdf(&s, 0.5) - 0.5).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn poor_count_uses_weak_inequality() {
        assert_eq!(poor_count(&xs(&[1.0, 2.0, 3.0]), 2.0), 2);
        assert_eq!(poor_count(&xs(&[1.0, 2.0, 3.0]), 0.5), 0);
        assert_eq!(poor_count(&xs(&[0.2, 0.6, 1.0]), 0.5), 1);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(ranks(&xs(&[5.0, 1.0, 3.0])), vec![3, 1, 2]);
        assert_eq!(ranks(&xs(&[1.0, 2.0, 3.0, 4.0])), vec![1, 2, 3, 4]);
        assert_eq!(ranks(&xs(&[2.0, 2.0, 1.0])), vec![2, 3, 1]);
    }

    #[test]
    fn gpi_examples() {
        let v = gpi_value(&xs(&[1.0, 2.0, 3.0]), 2.0, &headcount()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        let v = gpi_value(&xs(&[0.2, 0.6, 1.0]), 0.5, &fgt1()).unwrap();
        assert!((v - 0.2).abs() < 1e-15);
        let v = gpi_value(&xs(&[1.0, 2.0, 3.0, 4.0]), 2.5, &sen()).unwrap();
        assert!((v - 1.4 / 6.0).abs() < 1e-15);
        assert_eq!(gpi_value(&xs(&[3.0, 4.0]), 1.0, &sen()).unwrap(), 0.0);
    }

    #[test]
    fn nonpositive_weight_is_a_specification_error() {
        let bad = GpiSpec::new("bad", |q, _, _| q as f64, |x| x - 2.0, |u| u, [0, 0, 1, 1]);
        let err = gpi_value(&xs(&[0.1, 0.2, 0.3]), 1.0, &bad).unwrap_err();
        assert!(matches!(err, Error::Specification(_)), "{err}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(CrossSection::new(vec![]).is_err());
        assert!(CrossSection::new(vec![1.0, 0.0]).is_err());
        assert!(CrossSection::new(vec![1.0, -2.0]).is_err());
        assert!(gpi_value(&xs(&[1.0]), 0.0, &sen()).is_err());
        assert!(PovertyLine::constant(0.0).is_err());
        assert!(PovertyLine::knots(vec![(0.0, 1.0), (1.0, -1.0)]).is_err());
    }

    #[test]
    fn path_reduces_to_columns() {
        let grid = TimeGrid::new(vec![0.0, 1.0], 1.0).unwrap();
        let panel = IncomePanel::new(
            grid,
            vec![vec![1.0, 0.2], vec![2.0, 0.6], vec![3.0, 1.0]],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let line = PovertyLine::constant(2.0).unwrap();
        let h0 = gpi_path(&panel, &line, &headcount(), 0.0).unwrap();
        let h1 = gpi_path(&panel, &line, &headcount(), 1.0).unwrap();
        assert!((h0 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(h1, 1.0);
        let low = PovertyLine::constant(0.1).unwrap();
        assert_eq!(gpi_path(&panel, &low, &headcount(), 1.0).unwrap(), 0.0);
        assert!(matches!(gpi_path(&panel, &line, &headcount(), 0.5), Err(Error::Domain(_))));

        let single = IncomePanel::new(
            TimeGrid::new(vec![0.0], 0.0).unwrap(),
            vec![vec![0.2], vec![0.6], vec![1.0]],
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let line = PovertyLine::constant(0.5).unwrap();
        assert_eq!(
            gpi_path(&single, &line, &fgt1(), 0.0).unwrap(),
            gpi_value(&xs(&[0.2, 0.6, 1.0]), 0.5, &fgt1()).unwrap()
        );
    }

    proptest! {
        #[test]
        fn invariant_under_permutation(mut v in prop::collection::vec(0.01f64..3.0, 1..40), z in 0.1f64..2.5, rot in 0usize..40) {
            let a = gpi_value(&xs(&v), z, &sen()).unwrap();
            let r = rot % v.len();
            v.rotate_left(r);
            v.reverse();
            let b = gpi_value(&xs(&v), z, &sen()).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }

        #[test]
        fn poor_count_monotone_in_line(v in prop::collection::vec(0.01f64..3.0, 1..40), z1 in 0.01f64..3.0, dz in 0.0f64..1.0) {
            let s = xs(&v);
            prop_assert!(poor_count(&s, z1) <= poor_count(&s, z1 + dz));
        }

        #[test]
        fn rank_representation_of_ecdf(v in prop::collection::hash_set(1u32..100_000, 1..50)) {
            let s = xs(&v.iter().map(|&k| k as f64 / 1000.0).collect::<Vec<_>>());
            let r = ranks(&s);
            for (j, &y) in s.values().iter().enumerate() {
                prop_assert_eq!(empirical_cdf(&s, y), r[j] as f64 / s.n() as f64);
            }
        }
    }
}
