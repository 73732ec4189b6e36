//! Standard Gaussian distribution function, survival function and quantile.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{PI, SQRT_2};

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Upper tail `1 − Φ(x)`, accurate far into the right tail.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Inverse of [`std_normal_cdf`] on (0, 1), refined by one Newton step.
pub fn std_normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    let density = std_normal_pdf(x);
    if density > 1e-300 {
        // work in the smaller tail so the residual is not swamped by rounding
        let residual = if x < 0.0 {
            std_normal_cdf(x) - p
        } else {
            (1.0 - p) - std_normal_sf(x)
        };
        x - residual / density
    } else {
        x
    }
}
