//! The model abstraction every selector is written against.
//!
//! A model supplies per-observation log-likelihood terms (for a Gibbs model,
//! the negated loss), optional analytic derivatives, its estimator θ̂, and the
//! tempered posterior Π_n^{(η)} ∝ L_n^η Π. Tempering never enters the
//! likelihood itself.

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, ParamVector};
use crate::error::{Error, Result};
use crate::posterior::PosteriorHandle;
use crate::stream::{RandomStream, StreamRng};

pub trait Model: Send + Sync {
    /// η-independent per-dataset state (sufficient statistics, θ̂, sorted
    /// cells, ...) cached across repeated posterior constructions.
    type Prepared: Send + Sync;

    fn name(&self) -> &'static str;

    /// Length of θ for this dataset.
    fn dim(&self, data: &Dataset) -> usize;

    /// Checks length and positivity constraints of θ.
    fn check_param(&self, theta: &ParamVector, data: &Dataset) -> Result<()> {
        let d = self.dim(data);
        if theta.len() != d {
            return Err(Error::InvalidParameter(format!(
                "{} expects θ of length {d}, got {}",
                self.name(),
                theta.len()
            )));
        }
        Ok(())
    }

    /// log p_θ(y_i | x_i), or −ℓ_θ(x_i, y_i) for a loss-based model.
    fn obs_loglik(&self, theta: &ParamVector, data: &Dataset, i: usize) -> f64;

    fn is_differentiable(&self) -> bool {
        false
    }

    /// Gradient and Hessian of [`Model::obs_loglik`] in θ.
    fn obs_score_hessian(
        &self,
        _theta: &ParamVector,
        _data: &Dataset,
        _i: usize,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        Err(Error::Unsupported("score/Hessian"))
    }

    /// E‖∇_θ log p_θ(Y | x_i)‖² at `theta`, with `Y ~ p_{generator}(· | x_i)`.
    fn expected_sq_score(
        &self,
        _theta: &ParamVector,
        _generator: &ParamVector,
        _data: &Dataset,
        _i: usize,
    ) -> Result<f64> {
        Err(Error::Unsupported("expected squared score"))
    }

    /// Maximizer of the log-likelihood (minimizer of the empirical risk).
    fn mle(&self, data: &Dataset) -> Result<ParamVector>;

    fn prepare(&self, data: &Dataset) -> Result<Self::Prepared>;

    /// θ̂ cached in a prepared dataset.
    fn prepared_mle<'a>(&self, prepared: &'a Self::Prepared) -> &'a ParamVector;

    fn posterior_prepared(
        &self,
        prepared: &Self::Prepared,
        eta: f64,
        stream: &RandomStream,
    ) -> Result<PosteriorHandle>;

    fn posterior(
        &self,
        data: &Dataset,
        eta: f64,
        stream: &RandomStream,
    ) -> Result<PosteriorHandle> {
        let prepared = self.prepare(data)?;
        self.posterior_prepared(&prepared, eta, stream)
    }

    /// ∫ −log p_θ(Y_i | X_i) dΠ_{i−1}^{(η)}(θ), with `i` 1-based and Π₀ the
    /// prior. Fails with [`Error::ImproperPosterior`] when Π_{i−1} is not a
    /// probability distribution.
    fn sequential_predictive_negloglik(
        &self,
        data: &Dataset,
        eta: f64,
        i: usize,
        stream: &RandomStream,
    ) -> Result<f64>;

    /// All `n` sequential terms at once; `None` where Π_{i−1} is improper.
    /// Models override this with a recursion when one exists.
    fn sequential_terms(
        &self,
        data: &Dataset,
        eta: f64,
        stream: &RandomStream,
    ) -> Result<Vec<Option<f64>>> {
        (1..=data.n())
            .map(|i| {
                match self.sequential_predictive_negloglik(data, eta, i, &stream.child(i as u64)) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::ImproperPosterior(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect()
    }

    /// Whether the prior is a probability distribution in every coordinate.
    fn prior_is_proper(&self) -> bool {
        false
    }

    fn sample_prior(&self, _data: &Dataset, _rng: &mut StreamRng) -> Result<ParamVector> {
        Err(Error::Unsupported("prior sampling"))
    }
}

/// Σᵢ log p_θ(yᵢ | xᵢ). Non-finite sums are reported as invalid parameters.
pub fn model_loglik<M: Model + ?Sized>(
    model: &M,
    theta: &ParamVector,
    data: &Dataset,
) -> Result<f64> {
    model.check_param(theta, data)?;
    let total: f64 = (0..data.n())
        .map(|i| model.obs_loglik(theta, data, i))
        .sum();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::InvalidParameter(format!(
            "log-likelihood is {total}"
        )))
    }
}

/// Summed analytic gradient and Hessian of the log-likelihood.
pub fn model_score_hessian<M: Model + ?Sized>(
    model: &M,
    theta: &ParamVector,
    data: &Dataset,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    model.check_param(theta, data)?;
    let d = theta.len();
    let mut grad = DVector::zeros(d);
    let mut hess = DMatrix::zeros(d, d);
    for i in 0..data.n() {
        let (g, h) = model.obs_score_hessian(theta, data, i)?;
        grad += g;
        hess += h;
    }
    Ok((grad, hess))
}

pub fn model_mle<M: Model + ?Sized>(model: &M, data: &Dataset) -> Result<ParamVector> {
    model.mle(data)
}
