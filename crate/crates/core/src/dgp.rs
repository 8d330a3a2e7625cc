//! Simulation designs and the parameter values coverage is measured against.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ParamVector};
use crate::error::{Error, Result};
use crate::special::{logistic, softplus, std_normal_cdf};
use crate::stream::RandomStream;

const MIN_N: usize = 10;

fn check_n(n: usize) -> Result<()> {
    if n < MIN_N {
        return Err(Error::InvalidParameter(format!(
            "need n ≥ {MIN_N}, got {n}"
        )));
    }
    Ok(())
}

/// `y ~ N(θ*, σ*²)` analysed with a normal model of scale `sigma_model`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyDgp {
    pub theta_star: f64,
    pub sigma_star: f64,
    pub sigma_model: f64,
}

impl ToyDgp {
    /// Design with `(σ/σ*)² = eta_star`.
    pub fn with_eta_star(eta_star: f64, sigma_model: f64, theta_star: f64) -> Result<Self> {
        if !(eta_star > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "η* must be positive, got {eta_star}"
            )));
        }
        Ok(Self {
            theta_star,
            sigma_star: sigma_model / eta_star.sqrt(),
            sigma_model,
        })
    }

    pub fn eta_star(&self) -> f64 {
        (self.sigma_model / self.sigma_star).powi(2)
    }

    pub fn generate(&self, n: usize, stream: &RandomStream) -> Result<Dataset> {
        check_n(n)?;
        let mut rng = stream.rng();
        let y = (0..n)
            .map(|_| self.theta_star + self.sigma_star * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Dataset::response_only(y)
    }

    pub fn true_target(&self) -> ParamVector {
        ParamVector::from_slice(&[self.theta_star])
    }
}

pub const REGRESSION_BETA: [f64; 4] = [1.0, 1.0, 2.0, -1.0];
pub const REGRESSION_RHO: f64 = 0.2;

/// Rows of `N₄(0, Σ)` with `Σ_jk = ρ^|j−k|`, built as an AR(1) recursion.
fn ar1_covariates<R: Rng>(n: usize, p: usize, rho: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let innov = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let mut row = Vec::with_capacity(p);
            let mut prev: f64 = rng.sample(StandardNormal);
            row.push(prev);
            for _ in 1..p {
                prev = rho * prev + innov * rng.sample::<f64, _>(StandardNormal);
                row.push(prev);
            }
            row
        })
        .collect()
}

fn linear_predictor(row: &[f64], beta: &[f64]) -> f64 {
    row.iter().zip(beta).map(|(x, b)| x * b).sum()
}

/// Heteroscedastic regression: the error scale of row i is `s_small`,
/// `s_mod` or 1 as `x_{i1}` falls below, between or above the sample 5% and
/// 95% points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentErrorsDgp {
    pub beta: Vec<f64>,
    pub rho: f64,
    pub s_small: f64,
    pub s_mod: f64,
}

impl DependentErrorsDgp {
    pub fn degree(degree: u32) -> Result<Self> {
        let (s_small, s_mod) = match degree {
            1 => (0.25, 0.50),
            2 => (0.05, 0.25),
            3 => (0.01, 0.10),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "dependent-errors degree {degree} not in 1..=3"
                )))
            }
        };
        Ok(Self {
            beta: REGRESSION_BETA.to_vec(),
            rho: REGRESSION_RHO,
            s_small,
            s_mod,
        })
    }

    /// Lower and upper thresholds `X₍k+1₎` and `X₍n−k₎`, `k = ⌊0.05n⌋`, so
    /// exactly k points fall strictly outside on each side (absent ties).
    pub fn thresholds(first_column: &[f64]) -> (f64, f64) {
        let mut s = first_column.to_vec();
        s.sort_by(|a, b| a.total_cmp(b));
        let n = s.len();
        let k = n / 20;
        (s[k], s[n - 1 - k])
    }

    pub fn scale_for(&self, x1: f64, lo: f64, hi: f64) -> f64 {
        if x1 < lo {
            self.s_small
        } else if x1 <= hi {
            self.s_mod
        } else {
            1.0
        }
    }

    pub fn generate(&self, n: usize, stream: &RandomStream) -> Result<Dataset> {
        check_n(n)?;
        let mut rng = stream.rng();
        let rows = ar1_covariates(n, self.beta.len(), self.rho, &mut rng);
        let first: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let (lo, hi) = Self::thresholds(&first);
        let y = rows
            .iter()
            .map(|r| {
                let s = self.scale_for(r[0], lo, hi);
                linear_predictor(r, &self.beta) + s * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        Dataset::from_rows(&rows, y)
    }

    pub fn true_target(&self) -> ParamVector {
        ParamVector::from_slice(&self.beta)
    }
}

/// Regression with unscaled Student-t errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TErrorsDgp {
    pub beta: Vec<f64>,
    pub rho: f64,
    pub nu: f64,
}

impl TErrorsDgp {
    pub fn degree(degree: u32) -> Result<Self> {
        let nu = match degree {
            1 => 5.0,
            2 => 4.0,
            3 => 3.0,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "t-errors degree {degree} not in 1..=3"
                )))
            }
        };
        Ok(Self {
            beta: REGRESSION_BETA.to_vec(),
            rho: REGRESSION_RHO,
            nu,
        })
    }

    pub fn generate(&self, n: usize, stream: &RandomStream) -> Result<Dataset> {
        check_n(n)?;
        let mut rng = stream.rng();
        let t = StudentT::new(self.nu).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let rows = ar1_covariates(n, self.beta.len(), self.rho, &mut rng);
        let y = rows
            .iter()
            .map(|r| linear_predictor(r, &self.beta) + t.sample(&mut rng))
            .collect();
        Dataset::from_rows(&rows, y)
    }

    pub fn true_target(&self) -> ParamVector {
        ParamVector::from_slice(&self.beta)
    }
}

pub const MIXTURE_WEIGHT: f64 = 0.7;
pub const MIXTURE_BASE: f64 = 5.0;

/// `X ~ 0.7 N(5, 1) + 0.3 N(μ, 1)` and `P(Y = +1 | X) = F*(X)`, with F* the
/// same mixture's distribution function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureLogisticDgp {
    pub mu: f64,
}

impl MixtureLogisticDgp {
    pub fn degree(degree: u32) -> Result<Self> {
        let mu = match degree {
            1 => 7.0,
            2 => 8.0,
            3 => 9.0,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "logistic degree {degree} not in 1..=3"
                )))
            }
        };
        Ok(Self { mu })
    }

    pub fn f_star(&self, x: f64) -> f64 {
        MIXTURE_WEIGHT * std_normal_cdf(x - MIXTURE_BASE)
            + (1.0 - MIXTURE_WEIGHT) * std_normal_cdf(x - self.mu)
    }

    pub fn density(&self, x: f64) -> f64 {
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        MIXTURE_WEIGHT * phi(x - MIXTURE_BASE) + (1.0 - MIXTURE_WEIGHT) * phi(x - self.mu)
    }

    pub fn generate(&self, n: usize, stream: &RandomStream) -> Result<Dataset> {
        check_n(n)?;
        let mut rng = stream.rng();
        let mut rows = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let center = if rng.random::<f64>() < MIXTURE_WEIGHT {
                MIXTURE_BASE
            } else {
                self.mu
            };
            let x = center + rng.sample::<f64, _>(StandardNormal);
            let label = if rng.random::<f64>() < self.f_star(x) {
                1.0
            } else {
                -1.0
            };
            rows.push(vec![x]);
            y.push(label);
        }
        Dataset::from_rows(&rows, y)
    }

    /// Root of `F*(θ) = 1/2`.
    pub fn mcid(&self) -> Result<f64> {
        let (mut lo, mut hi) = (
            MIXTURE_BASE.min(self.mu) - 10.0,
            MIXTURE_BASE.max(self.mu) + 10.0,
        );
        if !(self.f_star(lo) < 0.5 && self.f_star(hi) > 0.5) {
            return Err(Error::Numerical(
                "MCID bracket does not straddle 1/2".into(),
            ));
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.f_star(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Minimizer `(β₀†, β₁†)` of the expected logistic loss under this design.
    pub fn logistic_projection(&self) -> Result<(f64, f64)> {
        let nodes = quadrature_nodes(self);
        let mut beta = [-5.0_f64, 1.0_f64];
        for _ in 0..100 {
            let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(x, w, p) in &nodes {
                let u = beta[0] + beta[1] * x;
                // d/du of p·softplus(−u) + (1−p)·softplus(u)
                let d = logistic(u) - p;
                let c = logistic(u) * logistic(-u);
                g0 += w * d;
                g1 += w * d * x;
                h00 += w * c;
                h01 += w * c * x;
                h11 += w * c * x * x;
            }
            let det = h00 * h11 - h01 * h01;
            let s0 = (h11 * g0 - h01 * g1) / det;
            let s1 = (h00 * g1 - h01 * g0) / det;
            beta[0] -= s0;
            beta[1] -= s1;
            if s0.abs().max(s1.abs()) < 1e-12 {
                return Ok((beta[0], beta[1]));
            }
        }
        Err(Error::NonConvergence {
            iterations: 100,
            last: beta.to_vec(),
        })
    }

    /// `−β₀†/β₁†`.
    pub fn projection_ratio(&self) -> Result<f64> {
        let (b0, b1) = self.logistic_projection()?;
        Ok(-b0 / b1)
    }

    /// Expected logistic loss at `(β₀, β₁)`.
    pub fn expected_logistic_loss(&self, b0: f64, b1: f64) -> f64 {
        quadrature_nodes(self)
            .iter()
            .map(|&(x, w, p)| {
                let u = b0 + b1 * x;
                w * (p * softplus(-u) + (1.0 - p) * softplus(u))
            })
            .sum()
    }
}

/// Composite Simpson nodes `(x, weight·density, F*(x))` over ±12 sd of both
/// components.
fn quadrature_nodes(dgp: &MixtureLogisticDgp) -> Vec<(f64, f64, f64)> {
    let lo = MIXTURE_BASE.min(dgp.mu) - 12.0;
    let hi = MIXTURE_BASE.max(dgp.mu) + 12.0;
    let m = 8000;
    let h = (hi - lo) / m as f64;
    (0..=m)
        .map(|k| {
            let x = lo + k as f64 * h;
            let c = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (x, c * h / 3.0 * dgp.density(x), dgp.f_star(x))
        })
        .collect()
}

/// Which MCID value logistic-model coverage is measured against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogisticTarget {
    /// Root of `F*(θ) = 1/2`.
    #[default]
    Mcid,
    /// `−β₀†/β₁†` of the logistic KL projection.
    Projection,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_leave_k_points_outside() {
        let x: Vec<f64> = (0..137).map(|i| ((i * 37) % 137) as f64).collect();
        let (lo, hi) = DependentErrorsDgp::thresholds(&x);
        let k = 137 / 20;
        assert_eq!(x.iter().filter(|&&v| v < lo).count(), k);
        assert_eq!(x.iter().filter(|&&v| v > hi).count(), k);
    }

    #[test]
    fn mcid_root_degree_one() {
        let d = MixtureLogisticDgp::degree(1).unwrap();
        let r = d.mcid().unwrap();
        assert!(r > 5.4 && r < 5.6);
        assert!((d.f_star(r) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn collapsed_mixture_root_is_center() {
        let d = MixtureLogisticDgp { mu: 5.0 };
        assert!((d.mcid().unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn projection_is_stationary() {
        let d = MixtureLogisticDgp::degree(3).unwrap();
        let (b0, b1) = d.logistic_projection().unwrap();
        let f = d.expected_logistic_loss(b0, b1);
        for (e0, e1) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(d.expected_logistic_loss(b0 + e0, b1 + e1) > f);
        }
        let ratio = -b0 / b1;
        assert!(ratio > d.mcid().unwrap());
    }

    #[test]
    fn generators_are_deterministic() {
        let s = RandomStream::with_path(9, &[1, 2]);
        let d = DependentErrorsDgp::degree(2).unwrap();
        assert_eq!(d.generate(50, &s).unwrap(), d.generate(50, &s).unwrap());
        assert!(d.generate(5, &s).is_err());
    }
}
