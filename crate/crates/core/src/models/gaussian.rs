//! Normal location model with known scale: `y ~ N(θ, σ²)`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, ParamVector};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::posterior::{PosteriorHandle, PosteriorKind};
use crate::stream::{RandomStream, StreamRng};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `prior_var = ∞` selects the flat (improper) prior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLocationModel {
    pub sigma: f64,
    pub prior_mean: f64,
    pub prior_var: f64,
}

impl GaussianLocationModel {
    pub fn new(sigma: f64, prior_mean: f64, prior_var: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !(prior_var > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "prior variance must be positive, got {prior_var}"
            )));
        }
        Ok(Self {
            sigma,
            prior_mean,
            prior_var,
        })
    }

    pub fn flat(sigma: f64) -> Result<Self> {
        Self::new(sigma, 0.0, f64::INFINITY)
    }

    fn prior_precision(&self) -> f64 {
        if self.prior_var.is_finite() {
            1.0 / self.prior_var
        } else {
            0.0
        }
    }

    /// Posterior `(mean, variance)` after `count` observations summing to
    /// `sum`, tempered by `eta`.
    pub fn update(&self, count: usize, sum: f64, eta: f64) -> Result<(f64, f64)> {
        let s2 = self.sigma * self.sigma;
        let precision = self.prior_precision() + count as f64 * eta / s2;
        if precision <= 0.0 {
            return Err(Error::ImproperPosterior("flat prior with no data".into()));
        }
        let mean = (self.prior_mean * self.prior_precision() + eta * sum / s2) / precision;
        Ok((mean, 1.0 / precision))
    }
}

#[derive(Debug, Clone)]
pub struct GaussianPrepared {
    n: usize,
    sum: f64,
    mle: ParamVector,
}

impl Model for GaussianLocationModel {
    type Prepared = GaussianPrepared;

    fn name(&self) -> &'static str {
        "gaussian-location"
    }

    fn dim(&self, _data: &Dataset) -> usize {
        1
    }

    fn obs_loglik(&self, theta: &ParamVector, data: &Dataset, i: usize) -> f64 {
        let r = (data.y()[i] - theta[0]) / self.sigma;
        -0.5 * LN_2PI - self.sigma.ln() - 0.5 * r * r
    }

    fn is_differentiable(&self) -> bool {
        true
    }

    fn obs_score_hessian(
        &self,
        theta: &ParamVector,
        data: &Dataset,
        i: usize,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let s2 = self.sigma * self.sigma;
        Ok((
            DVector::from_element(1, (data.y()[i] - theta[0]) / s2),
            DMatrix::from_element(1, 1, -1.0 / s2),
        ))
    }

    fn expected_sq_score(
        &self,
        theta: &ParamVector,
        generator: &ParamVector,
        _data: &Dataset,
        _i: usize,
    ) -> Result<f64> {
        let s2 = self.sigma * self.sigma;
        let shift = generator[0] - theta[0];
        Ok((shift * shift + s2) / (s2 * s2))
    }

    fn mle(&self, data: &Dataset) -> Result<ParamVector> {
        if data.n() == 0 {
            return Err(Error::InvalidData("empty dataset".into()));
        }
        Ok(ParamVector::from_slice(&[data.y().mean()]))
    }

    fn prepare(&self, data: &Dataset) -> Result<GaussianPrepared> {
        Ok(GaussianPrepared {
            n: data.n(),
            sum: data.y().sum(),
            mle: self.mle(data)?,
        })
    }

    fn prepared_mle<'a>(&self, prepared: &'a GaussianPrepared) -> &'a ParamVector {
        &prepared.mle
    }

    fn posterior_prepared(
        &self,
        prepared: &GaussianPrepared,
        eta: f64,
        _stream: &RandomStream,
    ) -> Result<PosteriorHandle> {
        let (mean, var) = self.update(prepared.n, prepared.sum, eta)?;
        PosteriorHandle::new(
            eta,
            PosteriorKind::ClosedFormGaussian {
                mean: DVector::from_element(1, mean),
                cov: DMatrix::from_element(1, 1, var),
            },
        )
    }

    fn sequential_predictive_negloglik(
        &self,
        data: &Dataset,
        eta: f64,
        i: usize,
        _stream: &RandomStream,
    ) -> Result<f64> {
        check_index(i, data.n())?;
        let prefix_sum: f64 = data.y().rows(0, i - 1).sum();
        let (m, v) = self.update(i - 1, prefix_sum, eta)?;
        Ok(self.predictive_term(data.y()[i - 1], m, v))
    }

    fn sequential_terms(
        &self,
        data: &Dataset,
        eta: f64,
        _stream: &RandomStream,
    ) -> Result<Vec<Option<f64>>> {
        let mut sum = 0.0;
        let mut out = Vec::with_capacity(data.n());
        for (k, &y) in data.y().iter().enumerate() {
            out.push(match self.update(k, sum, eta) {
                Ok((m, v)) => Some(self.predictive_term(y, m, v)),
                Err(Error::ImproperPosterior(_)) => None,
                Err(e) => return Err(e),
            });
            sum += y;
        }
        Ok(out)
    }

    fn prior_is_proper(&self) -> bool {
        self.prior_var.is_finite()
    }

    fn sample_prior(&self, _data: &Dataset, rng: &mut StreamRng) -> Result<ParamVector> {
        if !self.prior_is_proper() {
            return Err(Error::ImproperPosterior(
                "flat prior cannot be sampled".into(),
            ));
        }
        let d = Normal::new(self.prior_mean, self.prior_var.sqrt())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(ParamVector::from_slice(&[d.sample(rng)]))
    }
}

impl GaussianLocationModel {
    /// E[−log N(y; θ, σ²)] for θ ~ N(m, v).
    fn predictive_term(&self, y: f64, m: f64, v: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        0.5 * (LN_2PI + s2.ln()) + ((y - m).powi(2) + v) / (2.0 * s2)
    }
}

pub(crate) fn check_index(i: usize, n: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::InvalidParameter(format!(
            "sequential index {i} outside 1..={n}"
        )));
    }
    Ok(())
}
