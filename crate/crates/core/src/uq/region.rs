//! Highest-posterior-density regions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{quad_form, spd_inverse};
use crate::posterior::{PosteriorHandle, PosteriorKind, MIN_DRAWS};
use crate::special::{chi_squared_quantile, f_quantile, std_normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Ellipsoid,
    Interval,
}

/// Ellipsoid `{p : (p − c)ᵀ S (p − c) ≤ r²}` or interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleRegion {
    pub kind: RegionKind,
    pub center: DVector<f64>,
    /// Inverse covariance for ellipsoids; `1 × 1` identity for intervals.
    pub shape: DMatrix<f64>,
    pub radius_sq: f64,
    pub endpoints: Option<(f64, f64)>,
    pub level: f64,
    /// The covariance needed a ridge before inversion.
    pub ridged: bool,
}

impl CredibleRegion {
    pub fn interval(lo: f64, hi: f64, level: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Numerical(format!(
                "interval endpoints out of order: [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            kind: RegionKind::Interval,
            center: DVector::from_element(1, 0.5 * (lo + hi)),
            shape: DMatrix::identity(1, 1),
            radius_sq: 0.0,
            endpoints: Some((lo, hi)),
            level,
            ridged: false,
        })
    }

    pub fn ellipsoid(
        center: DVector<f64>,
        shape: DMatrix<f64>,
        radius_sq: f64,
        level: f64,
    ) -> Self {
        Self {
            kind: RegionKind::Ellipsoid,
            center,
            shape,
            radius_sq,
            endpoints: None,
            level,
            ridged: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Closed boundary.
    pub fn contains(&self, point: &[f64]) -> bool {
        match self.kind {
            RegionKind::Interval => {
                let (lo, hi) = self.endpoints.expect("interval endpoints");
                lo <= point[0] && point[0] <= hi
            }
            RegionKind::Ellipsoid => {
                let diff = DVector::from_column_slice(point) - &self.center;
                quad_form(&self.shape, &diff) <= self.radius_sq
            }
        }
    }

    pub fn length(&self) -> Option<f64> {
        self.endpoints.map(|(lo, hi)| hi - lo)
    }
}

pub fn contains(region: &CredibleRegion, point: &[f64]) -> Result<bool> {
    if point.len() != region.dim() {
        return Err(Error::InvalidParameter(format!(
            "point has dimension {}, region {}",
            point.len(),
            region.dim()
        )));
    }
    Ok(region.contains(point))
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "level must be in (0, 1), got {level}"
        )));
    }
    Ok(())
}

/// Ellipsoid from the posterior mean and covariance. Elliptical closed forms
/// use their exact Mahalanobis quantile; sample posteriors use the
/// `⌈level·M⌉`-th smallest Mahalanobis distance among the draws.
pub fn hpd_ellipsoid(handle: &PosteriorHandle, level: f64) -> Result<CredibleRegion> {
    check_level(level)?;
    match handle.kind() {
        PosteriorKind::ClosedFormGaussian { mean, cov } => {
            let (shape, ridged) = spd_inverse(cov)?;
            let r2 = chi_squared_quantile(mean.len() as f64, level);
            let mut region = CredibleRegion::ellipsoid(mean.clone(), shape, r2, level);
            region.ridged = ridged;
            Ok(region)
        }
        PosteriorKind::ClosedFormNig(nig) => {
            // β is multivariate t with 2a degrees of freedom and scale (b/a)V,
            // so the Mahalanobis distance under Σ = b/(a−1)·V is
            // p·F(p, 2a)·(a−1)/a.
            let p = nig.mean.len() as f64;
            let (scale_inv, ridged) = spd_inverse(&nig.scale)?;
            let f = f_quantile(p, 2.0 * nig.shape, level);
            let (shape, r2) = if nig.shape > 1.0 {
                (
                    scale_inv * ((nig.shape - 1.0) / nig.rate),
                    p * f * (nig.shape - 1.0) / nig.shape,
                )
            } else {
                (scale_inv * (nig.shape / nig.rate), p * f)
            };
            let mut region = CredibleRegion::ellipsoid(nig.mean.clone(), shape, r2, level);
            region.ridged = ridged;
            Ok(region)
        }
        PosteriorKind::SampleMatrix(draws) => hpd_ellipsoid_from_draws(draws, level),
        PosteriorKind::PiecewiseConstant1D(_) => {
            let (mean, cov) = handle.mean_cov()?;
            let (shape, ridged) = spd_inverse(&cov)?;
            let iv = hpd_interval(handle, level)?;
            let (lo, hi) = iv.endpoints.expect("interval");
            let r2 = ((lo - mean[0]).powi(2)).max((hi - mean[0]).powi(2)) * shape[(0, 0)];
            let mut region = CredibleRegion::ellipsoid(mean, shape, r2, level);
            region.ridged = ridged;
            Ok(region)
        }
    }
}

pub fn hpd_ellipsoid_from_draws(draws: &DMatrix<f64>, level: f64) -> Result<CredibleRegion> {
    check_level(level)?;
    let m = draws.nrows();
    if m < MIN_DRAWS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_DRAWS} draws, got {m}"
        )));
    }
    let (mean, cov) = crate::linalg::row_mean_cov(draws);
    let (shape, ridged) = spd_inverse(&cov)?;
    let mut dist: Vec<f64> = draws
        .row_iter()
        .map(|r| quad_form(&shape, &(r.transpose() - &mean)))
        .collect();
    dist.sort_by(|a, b| a.total_cmp(b));
    let k = (level * m as f64).ceil() as usize;
    let mut region = CredibleRegion::ellipsoid(mean, shape, dist[k.clamp(1, m) - 1], level);
    region.ridged = ridged;
    Ok(region)
}

/// Shortest interval for a scalar posterior. Closed forms are exact.
pub fn hpd_interval(handle: &PosteriorHandle, level: f64) -> Result<CredibleRegion> {
    check_level(level)?;
    if handle.dim() != 1 {
        return Err(Error::InvalidParameter(format!(
            "interval needs a scalar target, got dim {}",
            handle.dim()
        )));
    }
    match handle.kind() {
        PosteriorKind::ClosedFormGaussian { mean, cov } => {
            let half = std_normal_quantile(0.5 + level / 2.0) * cov[(0, 0)].sqrt();
            CredibleRegion::interval(mean[0] - half, mean[0] + half, level)
        }
        PosteriorKind::ClosedFormNig(nig) => {
            let t = f_quantile(1.0, 2.0 * nig.shape, level).sqrt();
            let half = t * (nig.rate / nig.shape * nig.scale[(0, 0)]).sqrt();
            CredibleRegion::interval(nig.mean[0] - half, nig.mean[0] + half, level)
        }
        PosteriorKind::SampleMatrix(draws) => {
            let values: Vec<f64> = draws.column(0).iter().copied().collect();
            hpd_interval_from_draws(&values, level)
        }
        PosteriorKind::PiecewiseConstant1D(pc) => {
            let (lo, hi) = pc.shortest_interval(level);
            CredibleRegion::interval(lo, hi, level)
        }
    }
}

/// Shortest window of sorted draws holding `⌈level·M⌉` of them.
pub fn hpd_interval_from_draws(values: &[f64], level: f64) -> Result<CredibleRegion> {
    check_level(level)?;
    let m = values.len();
    if m < MIN_DRAWS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_DRAWS} draws, got {m}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let k = ((level * m as f64).ceil() as usize).clamp(1, m);
    let (mut lo, mut hi) = (sorted[0], sorted[k - 1]);
    for j in 1..=m - k {
        if sorted[j + k - 1] - sorted[j] < hi - lo {
            lo = sorted[j];
            hi = sorted[j + k - 1];
        }
    }
    CredibleRegion::interval(lo, hi, level)
}
