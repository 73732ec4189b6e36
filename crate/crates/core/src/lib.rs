//! Poverty indices of the general poverty index (GPI) family, computed on
//! cross-sectional and longitudinal income data, together with the exact
//! asymptotic functionals of their empirical-process representation and a
//! Monte Carlo harness that checks
//!
//! ```text
//! √n (J_n(φ) − J(φ)) = α_{t,n}(g_t) + β_n(t, ν_t) + remainder
//! ```
//!
//! with a remainder that vanishes uniformly over a grid of indices and times.
//!
//! Module map:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`income_model`] | time-indexed parametric income laws, Gaussian-copula path sampler |
//! | [`gpi`] | finite-sample GPI, empirical CDF, ranks, poor counts |
//! | [`presets`] | FGT, Sen, Kakwani, Thon, Chakravarty specs and limit functions |
//! | [`asymptotics`] | H, K, J functionals by quadrature; g, ν; α and β statistics |
//! | [`harness`] | replication engine, diagnostics, bootstrap intervals |

pub mod asymptotics;
pub mod error;
pub mod gpi;
pub mod harness;
pub mod income_model;
pub mod normal;
pub mod presets;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
