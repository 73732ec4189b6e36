//! Classical poverty indices as members of the GPI family.
//!
//! Each [`PresetKind`] yields a [`GpiSpec`] (the tuple A, w, d, μ), its limit
//! functions `c(u, v)` and `π(u, v)` with analytic partial derivatives, and
//! a direct textbook evaluation used as an independent oracle.
//!
//! All presets use the normalizer `h(n, q) = B(q)`, so the π-branch sums to
//! one exactly at every sample size.

use crate::error::{Error, Result};
use crate::gpi::{CrossSection, GpiSpec};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PresetKind {
    /// Foster–Greer–Thorbecke; `alpha = 0` is the headcount ratio.
    Fgt { alpha: f64 },
    Sen,
    Kakwani { k: u32 },
    Thon,
    Chakravarty { e: f64 },
}

/// Which representation a preset is verified under: the general ratio form
/// or the decomposable form driven by `c` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    R,
    RD,
}

impl PresetKind {
    pub fn headcount() -> Self {
        PresetKind::Fgt { alpha: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PresetKind::Fgt { alpha } if !(alpha.is_finite() && alpha >= 0.0) => {
                Err(Error::InvalidInput(format!("fgt alpha must be ≥ 0, got {alpha}")))
            }
            PresetKind::Kakwani { k } if k < 1 => {
                Err(Error::InvalidInput(format!("kakwani k must be ≥ 1, got {k}")))
            }
            PresetKind::Chakravarty { e } if !(e > 0.0 && e < 1.0) => Err(Error::InvalidInput(
                format!("chakravarty e must lie in (0, 1), got {e}"),
            )),
            _ => Ok(()),
        }
    }

    pub fn is_headcount(&self) -> bool {
        matches!(*self, PresetKind::Fgt { alpha } if alpha == 0.0)
    }

    /// Deprivation function `d` on [0, 1].
    pub fn deprivation(&self, u: f64) -> f64 {
        match *self {
            PresetKind::Fgt { alpha } => {
                if alpha == 0.0 {
                    1.0
                } else {
                    u.powf(alpha)
                }
            }
            PresetKind::Sen | PresetKind::Kakwani { .. } | PresetKind::Thon => u,
            PresetKind::Chakravarty { e } => 1.0 - (1.0 - u).powf(e),
        }
    }

    /// Exponent of the polynomial rank weight `w(x) = x^p`.
    fn weight_power(&self) -> i32 {
        match *self {
            PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } => 0,
            PresetKind::Sen | PresetKind::Thon => 1,
            PresetKind::Kakwani { k } => k as i32,
        }
    }

    fn scale(&self, q: usize, n: usize) -> f64 {
        match self {
            PresetKind::Thon => (q * (q + 1)) as f64 / (n + 1) as f64,
            _ => q as f64,
        }
    }

    fn mu(&self) -> [i64; 4] {
        match self {
            PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } => [0, 0, 0, 1],
            PresetKind::Sen | PresetKind::Kakwani { .. } => [0, 1, 1, 1],
            PresetKind::Thon => [1, 0, 1, 1],
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresetKind::Fgt { alpha } => write!(f, "fgt:alpha={alpha}"),
            PresetKind::Sen => write!(f, "sen"),
            PresetKind::Kakwani { k } => write!(f, "kakwani:k={k}"),
            PresetKind::Thon => write!(f, "thon"),
            PresetKind::Chakravarty { e } => write!(f, "chakravarty:e={e}"),
        }
    }
}

impl FromStr for PresetKind {
    type Err = Error;

    /// Parses `name[:key=value]`, e.g. `fgt:alpha=2`, `sen`, `kakwani:k=2`,
    /// `thon`, `chakravarty:e=0.5`, `headcount`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s, None),
        };
        let param = |key: &str| -> Result<f64> {
            let p = params.ok_or_else(|| {
                Error::InvalidInput(format!("preset '{name}' needs parameter '{key}'"))
            })?;
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("malformed parameter '{p}' in '{s}'")))?;
            if k.trim() != key {
                return Err(Error::InvalidInput(format!(
                    "unknown parameter '{}' for preset '{name}' (expected '{key}')",
                    k.trim()
                )));
            }
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("parameter '{key}' of '{s}' is not a number")))
        };
        let no_params = |kind: PresetKind| -> Result<PresetKind> {
            match params {
                None => Ok(kind),
                Some(p) => Err(Error::InvalidInput(format!(
                    "preset '{name}' takes no parameters, got '{p}'"
                ))),
            }
        };
        let kind = match name.to_ascii_lowercase().as_str() {
            "fgt" => PresetKind::Fgt { alpha: param("alpha")? },
            "headcount" => no_params(PresetKind::headcount())?,
            "sen" => no_params(PresetKind::Sen)?,
            "thon" => no_params(PresetKind::Thon)?,
            "kakwani" => {
                let k = param("k")?;
                if k.fract() != 0.0 || k < 1.0 || k > u32::MAX as f64 {
                    return Err(Error::InvalidInput(format!(
                        "kakwani k must be an integer ≥ 1, got {k}"
                    )));
                }
                PresetKind::Kakwani { k: k as u32 }
            }
            "chakravarty" => PresetKind::Chakravarty { e: param("e")? },
            other => return Err(Error::InvalidInput(format!("unknown preset '{other}'"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// The GPI tuple of a preset.
pub fn make_spec(kind: PresetKind) -> GpiSpec {
    let power = kind.weight_power();
    GpiSpec::new(
        kind.to_string(),
        move |q, n, _z| kind.scale(q, n),
        move |x| x.powi(power),
        move |u| kind.deprivation(u),
        kind.mu(),
    )
}

/// Limit functions `c`, `π` of a preset together with their partials and the
/// normalizer `h(n, q) = B(q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitFunctions {
    kind: PresetKind,
    mode: Mode,
}

pub fn make_limits(kind: PresetKind) -> LimitFunctions {
    let mode = match kind {
        PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } => Mode::RD,
        _ => Mode::R,
    };
    LimitFunctions { kind, mode }
}

impl LimitFunctions {
    pub fn kind(&self) -> PresetKind {
        self.kind
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Same limits evaluated under another representation mode.
    pub fn with_mode(self, mode: Mode) -> Self {
        LimitFunctions { mode, ..self }
    }

    pub fn c(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } => 1.0,
            PresetKind::Sen => 2.0 * (u - v) / u,
            PresetKind::Kakwani { k } => (k + 1) as f64 * ((u - v) / u).powi(k as i32),
            PresetKind::Thon => 2.0 * (1.0 - v),
        }
    }

    pub fn pi(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } => 1.0 / u,
            PresetKind::Sen | PresetKind::Thon => 2.0 * v / (u * u),
            PresetKind::Kakwani { k } => {
                (k + 1) as f64 * v.powi(k as i32) / u.powi(k as i32 + 1)
            }
        }
    }

    pub fn dc_dx(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } | PresetKind::Thon => 0.0,
            PresetKind::Sen => 2.0 * v / (u * u),
            PresetKind::Kakwani { k } => {
                let k = k as i32;
                ((k + 1) * k) as f64 * (1.0 - v / u).powi(k - 1) * v / (u * u)
            }
        }
    }

    pub fn dc_dy(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } => 0.0,
            PresetKind::Sen => -2.0 / u,
            PresetKind::Kakwani { k } => {
                let k = k as i32;
                -((k + 1) * k) as f64 * (1.0 - v / u).powi(k - 1) / u
            }
            PresetKind::Thon => -2.0,
        }
    }

    pub fn dpi_dx(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } => -1.0 / (u * u),
            PresetKind::Sen | PresetKind::Thon => -4.0 * v / (u * u * u),
            PresetKind::Kakwani { k } => {
                let k = k as i32;
                -((k + 1) * (k + 1)) as f64 * v.powi(k) / u.powi(k + 2)
            }
        }
    }

    pub fn dpi_dy(&self, u: f64, v: f64) -> f64 {
        match self.kind {
            PresetKind::Fgt { .. } | PresetKind::Chakravarty { .. } => 0.0,
            PresetKind::Sen | PresetKind::Thon => 2.0 / (u * u),
            PresetKind::Kakwani { k } => {
                let k = k as i32;
                ((k + 1) * k) as f64 * v.powi(k - 1) / u.powi(k + 1)
            }
        }
    }

    /// `h(n, q) = B(q)`.
    pub fn h(&self, _n: usize, q: usize) -> f64 {
        let p = self.kind.weight_power();
        (1..=q).map(|i| (i as f64).powi(p)).sum()
    }
}

/// Textbook formula of each index, computed without the GPI machinery.
pub fn direct_value(kind: PresetKind, xs: &CrossSection, z: f64) -> f64 {
    let n = xs.n() as f64;
    let sorted = xs.sorted();
    let poor: Vec<f64> = sorted.iter().copied().filter(|&y| y <= z).collect();
    let q = poor.len();
    if q == 0 {
        return 0.0;
    }
    let gap = |y: f64| (z - y) / z;
    match kind {
        PresetKind::Fgt { alpha } => {
            poor.iter()
                .map(|&y| if alpha == 0.0 { 1.0 } else { gap(y).powf(alpha) })
                .sum::<f64>()
                / n
        }
        PresetKind::Sen => {
            let s: f64 = poor
                .iter()
                .enumerate()
                .map(|(i, &y)| (q - i) as f64 * gap(y))
                .sum();
            2.0 / (n * (q + 1) as f64) * s
        }
        PresetKind::Kakwani { k } => {
            let k = k as i32;
            let denom: f64 = (1..=q).map(|i| (i as f64).powi(k)).sum();
            let s: f64 = poor
                .iter()
                .enumerate()
                .map(|(i, &y)| ((q - i) as f64).powi(k) * gap(y))
                .sum();
            q as f64 / (n * denom) * s
        }
        PresetKind::Thon => {
            let s: f64 = poor
                .iter()
                .enumerate()
                .map(|(i, &y)| (xs.n() - i) as f64 * gap(y))
                .sum();
            2.0 / (n * (n + 1.0)) * s
        }
        PresetKind::Chakravarty { e } => poor.iter().map(|&y| 1.0 - (y / z).powf(e)).sum::<f64>() / n,
    }
}

/// Finite-sample gaps between the exact rank weights and their limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Hp2Errors {
    pub eps_c: f64,
    pub eps_pi: f64,
}

/// `eps_c = max_j |A h⁻¹ w(μ-argument) − c(q/n, j/n)|` and
/// `eps_pi = max_j |w(j) h⁻¹ − π(q/n, j/n)/n|` over `1 ≤ j ≤ q`.
pub fn hp2_errors(kind: PresetKind, n: usize, q: usize) -> Result<Hp2Errors> {
    if q < 1 || q > n {
        return Err(Error::InvalidInput(format!("need 1 ≤ q ≤ n, got q = {q}, n = {n}")));
    }
    let spec = make_spec(kind);
    let limits = make_limits(kind);
    let h = limits.h(n, q);
    let a = spec.scale(q, n, 1.0);
    let (nf, u) = (n as f64, q as f64 / n as f64);
    let mut eps_c: f64 = 0.0;
    let mut eps_pi: f64 = 0.0;
    for j in 1..=q {
        let v = j as f64 / nf;
        let exact_c = a / h * spec.weight(spec.weight_argument(n, q, j));
        eps_c = eps_c.max((exact_c - limits.c(u, v)).abs());
        let exact_pi = spec.weight(j as f64) / h;
        eps_pi = eps_pi.max((exact_pi - limits.pi(u, v) / nf).abs());
    }
    Ok(Hp2Errors { eps_c, eps_pi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpi::gpi_value;
    use crate::quadrature::integrate;

    fn all_kinds() -> Vec<PresetKind> {
        vec![
            PresetKind::Fgt { alpha: 0.0 },
            PresetKind::Fgt { alpha: 1.0 },
            PresetKind::Fgt { alpha: 2.0 },
            PresetKind::Sen,
            PresetKind::Kakwani { k: 1 },
            PresetKind::Kakwani { k: 2 },
            PresetKind::Thon,
            PresetKind::Chakravarty { e: 0.5 },
        ]
    }

    fn xs(v: &[f64]) -> CrossSection {
        CrossSection::new(v.to_vec()).unwrap()
    }

    #[test]
    fn spec_examples() {
        let v = gpi_value(&xs(&[1.0, 2.0, 3.0, 4.0]), 2.5, &make_spec(PresetKind::Sen)).unwrap();
        assert!((v - 0.7 / 3.0).abs() < 1e-15);
        let v = gpi_value(&xs(&[1.0, 2.0, 3.0, 4.0]), 2.5, &make_spec(PresetKind::Thon)).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        let v = gpi_value(&xs(&[0.3, 1.2, 0.7, 5.0]), 1.0, &make_spec(PresetKind::headcount())).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn direct_examples() {
        let v = direct_value(PresetKind::Fgt { alpha: 1.0 }, &xs(&[0.2, 0.6, 1.0]), 0.5);
        assert!((v - 0.2).abs() < 1e-15);
        assert_eq!(direct_value(PresetKind::Sen, &xs(&[3.0, 4.0]), 1.0), 0.0);
        let v = direct_value(PresetKind::Chakravarty { e: 0.5 }, &xs(&[0.25]), 1.0);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parses_names() {
        assert_eq!("fgt:alpha=2".parse::<PresetKind>().unwrap(), PresetKind::Fgt { alpha: 2.0 });
        assert_eq!(" sen ".parse::<PresetKind>().unwrap(), PresetKind::Sen);
        assert_eq!("kakwani:k=2".parse::<PresetKind>().unwrap(), PresetKind::Kakwani { k: 2 });
        assert_eq!("thon".parse::<PresetKind>().unwrap(), PresetKind::Thon);
        assert_eq!(
            "chakravarty:e=0.5".parse::<PresetKind>().unwrap(),
            PresetKind::Chakravarty { e: 0.5 }
        );
        assert_eq!("headcount".parse::<PresetKind>().unwrap(), PresetKind::headcount());
        for bad in ["kakwani:k=0", "kakwani:k=1.5", "chakravarty:e=1", "fgt:alpha=-1", "fgt", "watts", "sen:k=1", "fgt:beta=1"] {
            assert!(bad.parse::<PresetKind>().is_err(), "{bad}");
        }
        for kind in all_kinds() {
            assert_eq!(kind.to_string().parse::<PresetKind>().unwrap(), kind);
        }
    }

    #[test]
    fn limit_examples() {
        let sen = make_limits(PresetKind::Sen);
        for v in [0.05, 0.2, 0.39] {
            assert_eq!(sen.dc_dy(0.4, v), -2.0 / 0.4);
        }
        let fgt = make_limits(PresetKind::Fgt { alpha: 1.0 });
        assert_eq!(fgt.dc_dx(0.3, 0.1), 0.0);
        assert_eq!(fgt.dc_dy(0.3, 0.1), 0.0);
        assert_eq!(fgt.mode(), Mode::RD);
        assert_eq!(sen.mode(), Mode::R);
        let kak = make_limits(PresetKind::Kakwani { k: 1 });
        for (u, v) in [(0.3, 0.1), (0.8, 0.5), (0.5, 0.49)] {
            assert!((kak.c(u, v) - sen.c(u, v)).abs() < 1e-15);
            assert!((kak.pi(u, v) - sen.pi(u, v)).abs() < 1e-15);
            assert!((kak.dc_dx(u, v) - sen.dc_dx(u, v)).abs() < 1e-14);
            assert!((kak.dc_dy(u, v) - sen.dc_dy(u, v)).abs() < 1e-14);
            assert!((kak.dpi_dx(u, v) - sen.dpi_dx(u, v)).abs() < 1e-13);
            assert!((kak.dpi_dy(u, v) - sen.dpi_dy(u, v)).abs() < 1e-14);
        }
    }

    #[test]
    fn partials_match_central_differences() {
        let step = 1e-6;
        for kind in all_kinds() {
            let l = make_limits(kind);
            for iu in 1..=9 {
                let u = iu as f64 / 10.0;
                for iv in 1..10 {
                    let v = u * iv as f64 / 10.0;
                    let fd_x = |f: &dyn Fn(f64, f64) -> f64| (f(u + step, v) - f(u - step, v)) / (2.0 * step);
                    let fd_y = |f: &dyn Fn(f64, f64) -> f64| (f(u, v + step) - f(u, v - step)) / (2.0 * step);
                    let c = |a, b| l.c(a, b);
                    let p = |a, b| l.pi(a, b);
                    assert!((fd_x(&c) - l.dc_dx(u, v)).abs() < 1e-6, "{kind} dc/dx at ({u},{v})");
                    assert!((fd_y(&c) - l.dc_dy(u, v)).abs() < 1e-6, "{kind} dc/dy at ({u},{v})");
                    assert!((fd_x(&p) - l.dpi_dx(u, v)).abs() < 1e-6, "{kind} dπ/dx at ({u},{v})");
                    assert!((fd_y(&p) - l.dpi_dy(u, v)).abs() < 1e-6, "{kind} dπ/dy at ({u},{v})");
                }
            }
        }
    }

    #[test]
    fn dc_dy_is_monotone_in_v() {
        for kind in all_kinds() {
            let l = make_limits(kind);
            for u in [0.2, 0.5, 0.8] {
                let vals: Vec<f64> = (1..50).map(|i| l.dc_dy(u, u * i as f64 / 50.0)).collect();
                let up = vals.windows(2).all(|w| w[1] >= w[0]);
                let down = vals.windows(2).all(|w| w[1] <= w[0]);
                assert!(up || down, "{kind} at u = {u}");
                let vals: Vec<f64> = (1..50).map(|i| l.dpi_dy(u, u * i as f64 / 50.0)).collect();
                let up = vals.windows(2).all(|w| w[1] >= w[0]);
                let down = vals.windows(2).all(|w| w[1] <= w[0]);
                assert!(up || down, "{kind} at u = {u}");
            }
        }
    }

    #[test]
    fn pi_branch_normalizes() {
        for kind in all_kinds() {
            let spec = make_spec(kind);
            let l = make_limits(kind);
            for q in [1, 2, 7, 100] {
                let s: f64 = (1..=q).map(|j| spec.weight(j as f64)).sum::<f64>() / l.h(500, q);
                assert!((s - 1.0).abs() < 1e-14, "{kind} q = {q}");
            }
            for u in [0.05, 0.3, 0.5, 0.95] {
                let v = integrate(|s| l.pi(u, s), 0.0, u, 1e-12).unwrap();
                assert!((v - 1.0).abs() < 1e-10, "{kind} u = {u}: {v}");
            }
        }
    }

    #[test]
    fn sen_c_error_is_two_over_q_plus_one() {
        for n in [100usize, 1000] {
            for q in [1, 10, n / 2, n] {
                let e = hp2_errors(PresetKind::Sen, n, q).unwrap();
                assert!((e.eps_c - 2.0 / (q as f64 + 1.0)).abs() < 1e-13, "n={n} q={q}: {e:?}");
                let qf = q as f64;
                assert!((e.eps_pi - 2.0 / (qf * (qf + 1.0))).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn fgt_limits_are_exact() {
        for kind in [PresetKind::Fgt { alpha: 1.0 }, PresetKind::headcount(), PresetKind::Chakravarty { e: 0.3 }] {
            let e = hp2_errors(kind, 1000, 321).unwrap();
            assert_eq!(e.eps_c, 0.0);
            assert!(e.eps_pi < 1e-18);
        }
    }

    #[test]
    fn kakwani_errors_decay() {
        let k2 = PresetKind::Kakwani { k: 2 };
        let small = hp2_errors(k2, 100, 50).unwrap();
        let large = hp2_errors(k2, 1000, 500).unwrap();
        assert!(1000f64.sqrt() * large.eps_c < 100f64.sqrt() * small.eps_c);
    }

    #[test]
    fn scaled_errors_decrease_along_ladder() {
        for kind in all_kinds() {
            let scaled: Vec<(f64, f64)> = [100usize, 400, 1600, 6400]
                .iter()
                .map(|&n| {
                    let e = hp2_errors(kind, n, n / 2).unwrap();
                    let r = (n as f64).sqrt();
                    (r * e.eps_c, r * e.eps_pi)
                })
                .collect();
            for w in scaled.windows(2) {
                assert!(w[1].0 <= w[0].0 && w[1].1 <= w[0].1 + 1e-15, "{kind}: {scaled:?}");
            }
        }
        assert!(hp2_errors(PresetKind::Sen, 10, 0).is_err());
        assert!(hp2_errors(PresetKind::Sen, 10, 11).is_err());
    }
}
