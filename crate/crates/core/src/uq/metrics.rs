//! Per-replication report metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lrate::Method;
use crate::posterior::PosteriorHandle;
use crate::uq::region::CredibleRegion;

/// Metric part of a replication record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationMetrics {
    pub covered: bool,
    /// Squared Euclidean distance of the posterior mean from the truth.
    pub mse: f64,
    /// Mean of the posterior marginal variances.
    pub avg_marginal_var: f64,
    /// Interval length for scalar targets.
    pub interval_length: Option<f64>,
}

/// `handle` and `region` must refer to the same target as `truth`.
pub fn replication_metrics(
    handle: &PosteriorHandle,
    region: &CredibleRegion,
    truth: &[f64],
) -> Result<ReplicationMetrics> {
    if truth.len() != region.dim() || truth.len() != handle.dim() {
        return Err(Error::InvalidParameter(format!(
            "truth of length {} for a {}-dimensional target",
            truth.len(),
            handle.dim()
        )));
    }
    let (mean, cov) = handle.mean_cov()?;
    let mse = mean.iter().zip(truth).map(|(m, t)| (m - t).powi(2)).sum();
    let avg_marginal_var = cov.diagonal().mean();
    Ok(ReplicationMetrics {
        covered: region.contains(truth),
        mse,
        avg_marginal_var,
        interval_length: region.length(),
    })
}

/// One output row of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub experiment: String,
    pub degree: f64,
    pub n: usize,
    pub method: Method,
    pub rep: usize,
    pub eta_hat: f64,
    #[serde(with = "flag01")]
    pub covered: bool,
    pub mse: f64,
    pub avg_marginal_var: f64,
    pub interval_length: Option<f64>,
    #[serde(with = "flag01")]
    pub degenerate: bool,
    pub seed_path: String,
    pub wall_ms: u64,
}

impl ReplicationRecord {
    /// Row for a replication whose fit or selection failed.
    pub fn degenerate(
        experiment: &str,
        degree: f64,
        n: usize,
        method: Method,
        rep: usize,
        seed_path: String,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            degree,
            n,
            method,
            rep,
            eta_hat: f64::NAN,
            covered: false,
            mse: f64::NAN,
            avg_marginal_var: f64::NAN,
            interval_length: None,
            degenerate: true,
            seed_path,
            wall_ms: 0,
        }
    }

    /// Identity of the row within a study.
    pub fn key(&self) -> (String, u64, usize, Method, usize) {
        (
            self.experiment.clone(),
            self.degree.to_bits(),
            self.n,
            self.method,
            self.rep,
        )
    }
}

mod flag01 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(D::Error::custom(format!("flag must be 0 or 1, got {v}"))),
        }
    }
}
