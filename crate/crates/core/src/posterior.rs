//! Tempered posterior distributions Π_n^{(η)} in the forms the models produce.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{row_mean_cov, spd_factor};
use crate::piecewise::PiecewiseConstant;

/// Normal–inverse-gamma posterior: `σ² ~ IG(shape, rate)`,
/// `β | σ² ~ N(mean, σ² · scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NigParams {
    pub mean: DVector<f64>,
    pub scale: DMatrix<f64>,
    pub shape: f64,
    pub rate: f64,
}

impl NigParams {
    /// Draws `(β, σ²)`; σ² is the last coordinate.
    pub fn sample_joint<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let p = self.mean.len();
        let precision = Gamma::new(self.shape, 1.0 / self.rate)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(rng);
        let sigma2 = 1.0 / precision;
        let chol = spd_factor(&self.scale)?.chol;
        let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let beta = &self.mean + chol.l() * z * sigma2.sqrt();
        let mut out = DVector::zeros(p + 1);
        out.rows_mut(0, p).copy_from(&beta);
        out[p] = sigma2;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorKind {
    ClosedFormGaussian {
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    },
    /// Handle moments and draws refer to the regression coefficients β.
    ClosedFormNig(NigParams),
    /// `M × d` matrix of posterior draws.
    SampleMatrix(DMatrix<f64>),
    PiecewiseConstant1D(PiecewiseConstant),
}

/// Minimum number of draws a sample-based posterior must carry.
pub const MIN_DRAWS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorHandle {
    eta: f64,
    kind: PosteriorKind,
    warnings: Vec<String>,
}

impl PosteriorHandle {
    pub fn new(eta: f64, kind: PosteriorKind) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        match &kind {
            PosteriorKind::SampleMatrix(draws) => {
                if draws.nrows() < MIN_DRAWS {
                    return Err(Error::InvalidParameter(format!(
                        "sample posterior needs at least {MIN_DRAWS} draws, got {}",
                        draws.nrows()
                    )));
                }
                if draws.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Numerical("non-finite posterior draw".into()));
                }
            }
            PosteriorKind::ClosedFormNig(nig) => {
                if !(nig.shape > 0.0 && nig.rate > 0.0) {
                    return Err(Error::Numerical(format!(
                        "invalid inverse-gamma parameters ({}, {})",
                        nig.shape, nig.rate
                    )));
                }
            }
            PosteriorKind::ClosedFormGaussian { mean, cov } => {
                if mean.len() != cov.nrows() || !cov.is_square() {
                    return Err(Error::InvalidParameter(
                        "mean/covariance shape mismatch".into(),
                    ));
                }
            }
            PosteriorKind::PiecewiseConstant1D(_) => {}
        }
        Ok(Self {
            eta,
            kind,
            warnings: Vec::new(),
        })
    }

    /// Zero-tempering is legal only for the piecewise-constant Gibbs form,
    /// where it yields the prior.
    pub(crate) fn prior_only(kind: PosteriorKind) -> Self {
        Self {
            eta: 0.0,
            kind,
            warnings: Vec::new(),
        }
    }

    pub fn with_warning(mut self, warning: impl Into<String>) -> Self {
        self.warnings.push(warning.into());
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn kind(&self) -> &PosteriorKind {
        &self.kind
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PosteriorKind::ClosedFormGaussian { mean, .. } => mean.len(),
            PosteriorKind::ClosedFormNig(nig) => nig.mean.len(),
            PosteriorKind::SampleMatrix(draws) => draws.ncols(),
            PosteriorKind::PiecewiseConstant1D(_) => 1,
        }
    }

    /// Posterior mean and covariance; exact for closed forms.
    pub fn mean_cov(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        match &self.kind {
            PosteriorKind::ClosedFormGaussian { mean, cov } => Ok((mean.clone(), cov.clone())),
            PosteriorKind::ClosedFormNig(nig) => {
                if nig.shape <= 1.0 {
                    return Err(Error::Numerical(format!(
                        "marginal covariance undefined for shape {} <= 1",
                        nig.shape
                    )));
                }
                Ok((
                    nig.mean.clone(),
                    &nig.scale * (nig.rate / (nig.shape - 1.0)),
                ))
            }
            PosteriorKind::SampleMatrix(draws) => Ok(row_mean_cov(draws)),
            PosteriorKind::PiecewiseConstant1D(pc) => Ok((
                DVector::from_element(1, pc.mean()),
                DMatrix::from_element(1, 1, pc.variance()),
            )),
        }
    }

    /// `m` draws as an `m × d` matrix. Sample posteriors return their stored
    /// draws (ignoring `m`).
    pub fn draws<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        match &self.kind {
            PosteriorKind::ClosedFormGaussian { mean, cov } => {
                let d = mean.len();
                let l = spd_factor(cov)?.chol.l();
                let mut out = DMatrix::zeros(m, d);
                for r in 0..m {
                    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    out.row_mut(r).copy_from(&(mean + &l * z).transpose());
                }
                Ok(out)
            }
            PosteriorKind::ClosedFormNig(nig) => {
                let p = nig.mean.len();
                let mut out = DMatrix::zeros(m, p);
                for r in 0..m {
                    let joint = nig.sample_joint(rng)?;
                    out.row_mut(r).copy_from(&joint.rows(0, p).transpose());
                }
                Ok(out)
            }
            PosteriorKind::SampleMatrix(draws) => Ok(draws.clone()),
            PosteriorKind::PiecewiseConstant1D(pc) => {
                Ok(DMatrix::from_fn(m, 1, |_, _| pc.sample(rng)))
            }
        }
    }

    /// Scalar functional of each draw, e.g. `θ = −β₀/β₁`.
    pub fn map_draws(&self, f: impl Fn(&[f64]) -> f64) -> Result<PosteriorHandle> {
        let PosteriorKind::SampleMatrix(draws) = &self.kind else {
            return Err(Error::Unsupported(
                "mapping draws of a closed-form posterior",
            ));
        };
        let row = |r: usize| -> Vec<f64> { draws.row(r).iter().copied().collect() };
        let mapped = DMatrix::from_fn(draws.nrows(), 1, |r, _| f(&row(r)));
        let mut out = PosteriorHandle::new(self.eta, PosteriorKind::SampleMatrix(mapped))?;
        out.warnings = self.warnings.clone();
        Ok(out)
    }

    /// Leading `k` coordinates.
    pub fn marginal(&self, k: usize) -> Result<PosteriorHandle> {
        if k > self.dim() {
            return Err(Error::InvalidParameter(format!(
                "marginal of {k} > dim {}",
                self.dim()
            )));
        }
        if k == self.dim() {
            return Ok(self.clone());
        }
        let kind = match &self.kind {
            PosteriorKind::ClosedFormGaussian { mean, cov } => PosteriorKind::ClosedFormGaussian {
                mean: mean.rows(0, k).into_owned(),
                cov: cov.view((0, 0), (k, k)).into_owned(),
            },
            PosteriorKind::ClosedFormNig(nig) => PosteriorKind::ClosedFormNig(NigParams {
                mean: nig.mean.rows(0, k).into_owned(),
                scale: nig.scale.view((0, 0), (k, k)).into_owned(),
                shape: nig.shape,
                rate: nig.rate,
            }),
            PosteriorKind::SampleMatrix(draws) => {
                PosteriorKind::SampleMatrix(draws.columns(0, k).into_owned())
            }
            PosteriorKind::PiecewiseConstant1D(_) => unreachable!("dim 1"),
        };
        let mut out = PosteriorHandle::new(self.eta, kind)?;
        out.warnings = self.warnings.clone();
        Ok(out)
    }
}

/// Free-function form of [`PosteriorHandle::mean_cov`].
pub fn posterior_mean_cov(handle: &PosteriorHandle) -> Result<(DVector<f64>, DMatrix<f64>)> {
    handle.mean_cov()
}
