//! Scalar distribution helpers used across models and regions.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::beta::inv_beta_reg;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Logistic distribution function `1/(1+e^{-u})`.
pub fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^u)` without overflow.
pub fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

pub fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

pub fn chi_squared_quantile(df: f64, p: f64) -> f64 {
    ChiSquared::new(df).expect("df > 0").inverse_cdf(p)
}

/// Quantile of the F(d1, d2) distribution via the regularized incomplete
/// beta inverse.
pub fn f_quantile(d1: f64, d2: f64, p: f64) -> f64 {
    let x = inv_beta_reg(0.5 * d1, 0.5 * d2, p);
    (d2 / d1) * x / (1.0 - x)
}
