//! Plug-in sandwich matrices.

use nalgebra::DMatrix;

use crate::data::{Dataset, ParamVector};
use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::model::Model;

/// `V̂` is the mean per-observation Hessian and `Λ̂` the mean outer product
/// of per-observation scores, both at `theta_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichEstimates {
    pub v_hat: DMatrix<f64>,
    pub lambda_hat: DMatrix<f64>,
    pub theta_hat: ParamVector,
}

pub fn estimate_sandwich<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
) -> Result<SandwichEstimates> {
    let theta = model.mle(data)?;
    estimate_sandwich_at(model, data, theta)
}

pub fn estimate_sandwich_at<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    theta: ParamVector,
) -> Result<SandwichEstimates> {
    if !model.is_differentiable() {
        return Err(Error::Unsupported(
            "sandwich estimates need a differentiable model",
        ));
    }
    model.check_param(&theta, data)?;
    let d = theta.len();
    let n = data.n() as f64;
    let mut v_hat = DMatrix::zeros(d, d);
    let mut lambda_hat = DMatrix::zeros(d, d);
    for i in 0..data.n() {
        let (g, h) = model.obs_score_hessian(&theta, data, i)?;
        v_hat += h;
        lambda_hat.ger(1.0, &g, &g, 1.0);
    }
    v_hat /= n;
    lambda_hat /= n;
    symmetrize(&mut v_hat);
    symmetrize(&mut lambda_hat);
    Ok(SandwichEstimates {
        v_hat,
        lambda_hat,
        theta_hat: theta,
    })
}
