//! Data-driven learning-rate selectors.

pub mod gpc;
pub mod holmes_walker;
pub mod lyddon;
pub mod safebayes;
pub mod sandwich;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use gpc::{gpc_select, sa_update, GpcConfig};
pub use holmes_walker::{holmes_walker_select, HolmesWalkerConfig, Reference};
pub use lyddon::{lyddon_select, LyddonConfig};
pub use safebayes::{default_grid, safebayes_select};
pub use sandwich::{estimate_sandwich, estimate_sandwich_at, SandwichEstimates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "GPC")]
    Gpc,
    SafeBayes,
    HolmesWalker,
    Lyddon,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Gpc,
        Method::SafeBayes,
        Method::HolmesWalker,
        Method::Lyddon,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gpc => "GPC",
            Method::SafeBayes => "SafeBayes",
            Method::HolmesWalker => "HolmesWalker",
            Method::Lyddon => "Lyddon",
        }
    }

    pub fn needs_derivatives(&self) -> bool {
        matches!(self, Method::HolmesWalker | Method::Lyddon)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for EtaBounds {
    fn default() -> Self {
        Self {
            min: 0.01,
            max: 5.0,
        }
    }
}

impl EtaBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.min < self.max && self.max.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bad η bounds [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Clipped value and whether clipping occurred.
    pub fn clip(&self, eta: f64) -> (f64, bool) {
        let c = eta.clamp(self.min, self.max);
        (c, c != eta)
    }
}

/// One evaluated point: an iterate or grid value and its objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub eta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub hit_bounds: bool,
    pub non_convergence: bool,
    /// Grid points dropped for a non-finite objective.
    pub excluded: Vec<f64>,
    /// Bootstrap resamples whose fit failed.
    pub degenerate_resamples: usize,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningRateResult {
    pub eta_hat: f64,
    pub method: Method,
    pub trace: Vec<TracePoint>,
    pub diagnostics: Diagnostics,
}
