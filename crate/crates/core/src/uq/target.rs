//! Scalar or vector functionals of θ on which regions are built.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::ParamVector;
use crate::error::{Error, Result};
use crate::posterior::PosteriorHandle;
use crate::uq::region::{hpd_ellipsoid, hpd_interval, CredibleRegion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// All of θ.
    Full,
    /// The first `k` coordinates, e.g. β out of (β, σ²).
    Leading(usize),
    /// `−θ₀/θ₁`, the logistic MCID.
    NegRatio,
}

impl Target {
    pub fn apply(&self, theta: &ParamVector) -> Result<DVector<f64>> {
        match *self {
            Target::Full => Ok(theta.as_vector().clone()),
            Target::Leading(k) => {
                if k > theta.len() {
                    return Err(Error::InvalidParameter(format!(
                        "leading {k} of length {}",
                        theta.len()
                    )));
                }
                Ok(theta.as_vector().rows(0, k).into_owned())
            }
            Target::NegRatio => Ok(DVector::from_element(1, -theta[0] / theta[1])),
        }
    }

    /// Posterior of the target.
    pub fn posterior(&self, handle: &PosteriorHandle) -> Result<PosteriorHandle> {
        match *self {
            Target::Full => Ok(handle.clone()),
            Target::Leading(k) => handle.marginal(k.min(handle.dim())),
            Target::NegRatio => handle.map_draws(|t| -t[0] / t[1]),
        }
    }
}

/// Builds level-`level` regions for one target: an interval for scalar
/// targets, an ellipsoid otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBuilder {
    pub target: Target,
    pub level: f64,
}

impl RegionBuilder {
    pub fn new(target: Target, level: f64) -> Self {
        Self { target, level }
    }

    /// The target posterior and its region.
    pub fn build(&self, handle: &PosteriorHandle) -> Result<(PosteriorHandle, CredibleRegion)> {
        let target = self.target.posterior(handle)?;
        let region = if target.dim() == 1 {
            hpd_interval(&target, self.level)?
        } else {
            hpd_ellipsoid(&target, self.level)?
        };
        Ok((target, region))
    }

    /// Whether the level-`level` region contains the target value of `theta`.
    pub fn covers(&self, handle: &PosteriorHandle, theta: &ParamVector) -> Result<bool> {
        let (_, region) = self.build(handle)?;
        Ok(region.contains(self.target.apply(theta)?.as_slice()))
    }
}
