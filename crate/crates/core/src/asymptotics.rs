//! Exact asymptotic functionals of a poverty index under a known income law,
//! and the two empirical processes of its linear representation.
//!
//! For an index `φ = (preset, t, Z)` with poor share `u = G_t(Z)`:
//!
//! ```text
//! H_c = ∫₀^u c(u, s) γ(G_t⁻¹(s)) ds        H_π = ∫₀^u π(u, s) ds
//! K_c = ∫₀^1 ∂c/∂x(u, s) γ(G_t⁻¹(s)) ds    K_π = ∫₀^1 ∂π/∂x(u, s) e(G_t⁻¹(s)) ds
//! K   = K_c / H_π − H_c K_π / H_π²         J   = H_c / H_π
//! ```
//!
//! where `γ(y) = d((Z − y)/Z)·1{y ≤ Z}` and `e(y) = 1{y ≤ Z}`. The linear
//! part of `√n(J_n − J)` is `α_{t,n}(g_t) + β_n(t, ν_t)` with
//!
//! ```text
//! g_t(y) = c(u, G_t(y)) γ(y) / H_π − H_c π(u, G_t(y)) e(y) / H_π² + K e(y)
//! ν_t(y) = ∂c/∂y(u, G_t(y)) γ(y) / H_π − H_c ∂π/∂y(u, G_t(y)) e(y) / H_π²
//! ```
//!
//! and in the decomposable mode (`Mode::RD`) by the `c`-branch alone:
//! `g_t = c γ + K_c e`, `ν_t = ∂c/∂y γ`.
//!
//! `ν_t` carries the derivative in the second argument of `c` and `π`: it
//! weights the rank fluctuation `G_{t,n}(Y_j) − G_t(Y_j)`, which enters `c`
//! through its second argument.

use crate::error::{Error, Result};
use crate::gpi::{gpi_value_sorted, GpiSpec, PovertyLine};
use crate::income_model::{DistributionFamily, FixedMarginal, IncomePanel};
use crate::presets::{make_spec, LimitFunctions, Mode, PresetKind};
use crate::quadrature::{integrate_unit, DEFAULT_TOLERANCE};
use crate::stats::compensated_sum;
use serde::Serialize;

/// Bounds the poor share `G_t(Z(t))` must respect strictly.
pub const POOR_SHARE_BOUNDS: (f64, f64) = (0.01, 0.99);

/// One index of the φ-grid: a preset evaluated at time `t` with line `Z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phi {
    pub kind: PresetKind,
    pub t: f64,
    pub line: PovertyLine,
}

impl Phi {
    pub fn new(kind: PresetKind, t: f64, line: PovertyLine) -> Self {
        Phi { kind, t, line }
    }

    pub fn z(&self) -> f64 {
        self.line.at(self.t)
    }

    pub fn id(&self) -> String {
        format!("{}@t={}", self.kind, self.t)
    }
}

/// `γ(y) = d((Z − y)/Z)` for `y ≤ Z`, zero above the line.
pub fn gamma_fn(phi: &Phi, y: f64) -> f64 {
    let z = phi.z();
    if y <= z {
        phi.kind.deprivation((z - y) / z)
    } else {
        0.0
    }
}

/// `e(y) = 1{y ≤ Z}`.
pub fn e_fn(phi: &Phi, y: f64) -> f64 {
    if y <= phi.z() {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    pub hc: f64,
    pub hpi: f64,
    pub kc: f64,
    pub kpi: f64,
    pub k: f64,
    pub j: f64,
    /// `G_t(Z(t))`.
    pub poor_share: f64,
}

struct Setting {
    marginal: FixedMarginal,
    z: f64,
    u: f64,
}

fn setting(family: &DistributionFamily, phi: &Phi) -> Result<Setting> {
    let marginal = family.at(phi.t)?;
    let z = phi.z();
    let u = marginal.cdf(z);
    let (lo, hi) = POOR_SHARE_BOUNDS;
    if !(u > lo && u < hi) {
        return Err(Error::Setup(format!(
            "poor share G_t(Z) = {u} at t = {} lies outside ({lo}, {hi})",
            phi.t
        )));
    }
    Ok(Setting { marginal, z, u })
}

impl Setting {
    fn gamma_at_level(&self, kind: PresetKind, s: f64) -> f64 {
        let y = self.marginal.quantile(s);
        if y <= self.z {
            kind.deprivation(((self.z - y) / self.z).clamp(0.0, 1.0))
        } else {
            0.0
        }
    }

    fn e_at_level(&self, s: f64) -> f64 {
        if self.marginal.quantile(s) <= self.z {
            1.0
        } else {
            0.0
        }
    }

    /// ∫₀¹ f(s) ds with a panel boundary at the poor share.
    fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        integrate_unit(f, &[self.u], DEFAULT_TOLERANCE)
    }
}

pub fn compute_hc(family: &DistributionFamily, phi: &Phi, limits: &LimitFunctions) -> Result<f64> {
    let st = setting(family, phi)?;
    st.integrate(|s| {
        let g = st.gamma_at_level(phi.kind, s);
        if g == 0.0 {
            0.0
        } else {
            limits.c(st.u, s) * g
        }
    })
}

pub fn compute_hpi(family: &DistributionFamily, phi: &Phi, limits: &LimitFunctions) -> Result<f64> {
    let st = setting(family, phi)?;
    st.integrate(|s| {
        if st.e_at_level(s) == 0.0 {
            0.0
        } else {
            limits.pi(st.u, s)
        }
    })
}

pub fn compute_kc(family: &DistributionFamily, phi: &Phi, limits: &LimitFunctions) -> Result<f64> {
    let st = setting(family, phi)?;
    st.integrate(|s| {
        let g = st.gamma_at_level(phi.kind, s);
        if g == 0.0 {
            0.0
        } else {
            limits.dc_dx(st.u, s) * g
        }
    })
}

pub fn compute_kpi(family: &DistributionFamily, phi: &Phi, limits: &LimitFunctions) -> Result<f64> {
    let st = setting(family, phi)?;
    st.integrate(|s| {
        if st.e_at_level(s) == 0.0 {
            0.0
        } else {
            limits.dpi_dx(st.u, s)
        }
    })
}

impl Functionals {
    pub fn compute(family: &DistributionFamily, phi: &Phi, limits: &LimitFunctions) -> Result<Self> {
        let poor_share = setting(family, phi)?.u;
        let hc = compute_hc(family, phi, limits)?;
        let hpi = compute_hpi(family, phi, limits)?;
        let kc = compute_kc(family, phi, limits)?;
        let kpi = compute_kpi(family, phi, limits)?;
        if hpi.is_nan() || hpi <= 0.0 {
            return Err(Error::Numerical(format!("H_π = {hpi} is not positive for {}", phi.id())));
        }
        Ok(Functionals {
            hc,
            hpi,
            kc,
            kpi,
            k: kc / hpi - hc * kpi / (hpi * hpi),
            j: hc / hpi,
            poor_share,
        })
    }
}

/// The influence functions `g_t` and `ν_t` of one index, ready for
/// evaluation at observed incomes.
#[derive(Debug, Clone)]
struct Linearization {
    kind: PresetKind,
    limits: LimitFunctions,
    marginal: FixedMarginal,
    z: f64,
    f: Functionals,
}

impl Linearization {
    fn new(family: &DistributionFamily, phi: &Phi, limits: &LimitFunctions, f: Functionals) -> Result<Self> {
        Ok(Linearization {
            kind: phi.kind,
            limits: *limits,
            marginal: family.at(phi.t)?,
            z: phi.z(),
            f,
        })
    }

    /// `g_t(y)` given `gy = G_t(y)`.
    fn g(&self, y: f64, gy: f64) -> f64 {
        if y > self.z {
            return 0.0;
        }
        let u = self.f.poor_share;
        let gamma = self.kind.deprivation((self.z - y) / self.z);
        let l = &self.limits;
        match l.mode() {
            Mode::R => {
                let hpi = self.f.hpi;
                l.c(u, gy) * gamma / hpi - self.f.hc * l.pi(u, gy) / (hpi * hpi) + self.f.k
            }
            Mode::RD => l.c(u, gy) * gamma + self.f.kc,
        }
    }

    /// `ν_t(y)` given `gy = G_t(y)`.
    fn nu(&self, y: f64, gy: f64) -> f64 {
        if y > self.z {
            return 0.0;
        }
        let u = self.f.poor_share;
        let gamma = self.kind.deprivation((self.z - y) / self.z);
        let l = &self.limits;
        match l.mode() {
            Mode::R => {
                let hpi = self.f.hpi;
                l.dc_dy(u, gy) * gamma / hpi - self.f.hc * l.dpi_dy(u, gy) / (hpi * hpi)
            }
            Mode::RD => l.dc_dy(u, gy) * gamma,
        }
    }

    /// `E g_t(Y(t))` by quadrature in the probability scale.
    fn mean_g(&self) -> Result<f64> {
        let m = &self.marginal;
        integrate_unit(|s| self.g(m.quantile(s), s), &[self.f.poor_share], DEFAULT_TOLERANCE)
    }
}

pub fn g_eval(
    family: &DistributionFamily,
    phi: &Phi,
    limits: &LimitFunctions,
    functionals: &Functionals,
    y: f64,
) -> Result<f64> {
    let lin = Linearization::new(family, phi, limits, *functionals)?;
    Ok(lin.g(y, lin.marginal.cdf(y)))
}

pub fn nu_eval(
    family: &DistributionFamily,
    phi: &Phi,
    limits: &LimitFunctions,
    functionals: &Functionals,
    y: f64,
) -> Result<f64> {
    let lin = Linearization::new(family, phi, limits, *functionals)?;
    Ok(lin.nu(y, lin.marginal.cdf(y)))
}

/// `α_{t,n}(g) = n^{-1/2} Σ_j (g(Y_j(t)) − E g)`.
pub fn alpha_stat<G: Fn(f64) -> f64>(column: &[f64], g: G, mean_g: f64) -> f64 {
    let n = column.len() as f64;
    (compensated_sum(column.iter().map(|&y| g(y))) - n * mean_g) / n.sqrt()
}

/// `β_n(t, ν) = n^{-1/2} Σ_j (R_j/n − G_t(Y_j(t))) ν(Y_j(t))`, with `R_j` the
/// rank of `Y_j(t)` in the column.
pub fn beta_stat<N: Fn(f64) -> f64>(column: &[f64], nu: N, family: &DistributionFamily, t: f64) -> Result<f64> {
    let marginal = family.at(t)?;
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total = compensated_sum(
        sorted
            .iter()
            .enumerate()
            .map(|(i, &y)| ((i + 1) as f64 / n - marginal.cdf(y)) * nu(y)),
    );
    Ok(total / n.sqrt())
}

/// One replication's decomposition of `√n(J_n − J)` at one index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentationSample {
    pub phi_id: String,
    pub n: usize,
    pub jn: f64,
    pub j: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `√n(J_n − J) − α − β`.
    pub remainder: f64,
}

impl RepresentationSample {
    pub fn scaled_error(&self) -> f64 {
        (self.n as f64).sqrt() * (self.jn - self.j)
    }

    pub fn linear_part(&self) -> f64 {
        self.alpha + self.beta
    }
}

/// Ascending column with the true CDF evaluated at every order statistic.
#[derive(Debug, Clone)]
pub struct PreparedColumn {
    pub sorted: Vec<f64>,
    pub cdf: Vec<f64>,
}

impl PreparedColumn {
    pub fn new(column: &[f64], marginal: &FixedMarginal) -> Self {
        let mut sorted = column.to_vec();
        sorted.sort_by(f64::total_cmp);
        let cdf = sorted.iter().map(|&y| marginal.cdf(y)).collect();
        PreparedColumn { sorted, cdf }
    }
}

/// Functionals and influence functions of one index, computed once and
/// reused across replications.
#[derive(Debug, Clone)]
pub struct Representation {
    phi: Phi,
    spec: GpiSpec,
    lin: Linearization,
    mean_g: f64,
}

impl Representation {
    pub fn new(family: &DistributionFamily, phi: &Phi, limits: &LimitFunctions) -> Result<Self> {
        if limits.kind() != phi.kind {
            return Err(Error::InvalidInput(format!(
                "limit functions of {} do not belong to {}",
                limits.kind(),
                phi.kind
            )));
        }
        let f = Functionals::compute(family, phi, limits)?;
        let lin = Linearization::new(family, phi, limits, f)?;
        let mean_g = lin.mean_g()?;
        Ok(Representation {
            phi: phi.clone(),
            spec: make_spec(phi.kind),
            lin,
            mean_g,
        })
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    pub fn functionals(&self) -> &Functionals {
        &self.lin.f
    }

    pub fn mode(&self) -> Mode {
        self.lin.limits.mode()
    }

    /// `E g_t(Y(t))` as integrated under the true law.
    pub fn mean_g(&self) -> f64 {
        self.mean_g
    }

    pub fn g(&self, y: f64) -> f64 {
        self.lin.g(y, self.lin.marginal.cdf(y))
    }

    pub fn nu(&self, y: f64) -> f64 {
        self.lin.nu(y, self.lin.marginal.cdf(y))
    }

    pub fn prepare(&self, column: &[f64]) -> PreparedColumn {
        PreparedColumn::new(column, &self.lin.marginal)
    }

    pub fn sample(&self, column: &[f64]) -> Result<RepresentationSample> {
        self.sample_prepared(&self.prepare(column))
    }

    pub fn sample_prepared(&self, col: &PreparedColumn) -> Result<RepresentationSample> {
        let n = col.sorted.len();
        let nf = n as f64;
        let root = nf.sqrt();
        let jn = gpi_value_sorted(&col.sorted, self.lin.z, &self.spec)?;
        let pairs = || col.sorted.iter().zip(&col.cdf);
        let g_total = compensated_sum(pairs().map(|(&y, &gy)| self.lin.g(y, gy)));
        let alpha = (g_total - nf * self.mean_g) / root;
        let beta = compensated_sum(
            pairs()
                .enumerate()
                .take_while(|(_, (&y, _))| y <= self.lin.z)
                .map(|(i, (&y, &gy))| ((i + 1) as f64 / nf - gy) * self.lin.nu(y, gy)),
        ) / root;
        let j = self.lin.f.j;
        Ok(RepresentationSample {
            phi_id: self.phi.id(),
            n,
            jn,
            j,
            alpha,
            beta,
            remainder: root * (jn - j) - alpha - beta,
        })
    }
}

/// Decomposition of `√n(J_n(φ) − J(φ))` on a simulated panel drawn from
/// `family`.
pub fn remainder(
    panel: &IncomePanel,
    family: &DistributionFamily,
    phi: &Phi,
    limits: &LimitFunctions,
) -> Result<RepresentationSample> {
    let column = panel.column_at(phi.t)?;
    Representation::new(family, phi, limits)?.sample(&column)
}
