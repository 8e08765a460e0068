//! Standard-normal density and distribution functions.
//!
//! `Phi` is evaluated through `erfc`, which keeps the relative error at a
//! few ulp across the whole tail instead of losing precision near zero.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard-normal density `phi(x)`.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Density of N(mu, sigma^2) at `x`.
pub fn normal_pdf_scaled(x: f64, mu: f64, sigma2: f64) -> f64 {
    let z = (x - mu) / sigma2.sqrt();
    (-0.5 * z * z).exp() / (2.0 * PI * sigma2).sqrt()
}

/// Standard-normal CDF `Phi(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}
