//! Composite Gauss–Legendre quadrature with panel doubling.

use crate::error::{Error, Result};
use crate::normal::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use std::sync::OnceLock;

/// Nodes per panel of the composite rule.
pub const NODES_PER_PANEL: usize = 64;
/// Default absolute tolerance between successive panel doublings.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_PANELS: usize = 1 << 12;

/// Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on the Legendre
    /// polynomial P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Composite rule with `panels` equal panels on [a, b].
    pub fn composite<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64, panels: usize) -> f64 {
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        let mut total = 0.0;
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * width;
            let s: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| w * f(mid + half * x))
                .sum();
            total += half * s;
        }
        total
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn default_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NODES_PER_PANEL))
}

/// ∫_a^b f by the 64-node composite rule, doubling the panel count until two
/// successive estimates differ by at most `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let rule = default_rule();
    let mut panels = 1;
    let mut previous = rule.composite(&f, a, b, panels);
    if !previous.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    while panels < MAX_PANELS {
        panels *= 2;
        let current = rule.composite(&f, a, b, panels);
        if !current.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite integrand on [{a}, {b}] with {panels} panels"
            )));
        }
        if (current - previous).abs() <= tol {
            return Ok(current);
        }
        previous = current;
    }
    Err(Error::Numerical(format!(
        "quadrature on [{a}, {b}] did not reach tolerance {tol:e} within {MAX_PANELS} panels \
         (last estimate {previous})"
    )))
}

/// Integral over [a, b] split at the interior points `breaks`, so that kinks
/// of the integrand fall on panel boundaries.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> Result<f64> {
    let mut edges = vec![a];
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += integrate(&f, w[0], w[1], tol)?;
    }
    Ok(total)
}

/// Latent range used by [`integrate_unit`]; the Gaussian mass outside it is
/// below 1e-16.
const LATENT_RANGE: (f64, f64) = (-37.0, 8.2);

/// ∫₀¹ f(s) ds after the substitution `s = Φ(x)`, split at the given interior
/// levels. Integrands built from quantile functions with steep tails at 0 or
/// 1 become smooth on the latent scale.
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> Result<f64> {
    let (a, b) = LATENT_RANGE;
    let latent: Vec<f64> = breaks
        .iter()
        .filter(|&&s| s > 0.0 && s < 1.0)
        .map(|&s| std_normal_quantile(s))
        .collect();
    integrate_split(|x| f(std_normal_cdf(x)) * std_normal_pdf(x), a, b, &latent, tol)
}
