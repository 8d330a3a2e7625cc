//! Fisher-divergence information matching:
//! `η̂ = sqrt(∫ I₁ dP_θ̂ / ∫ I₁ dPₙ)` with `I₁(x, y) = ∫ ‖∇_θ log p_θ(y|x)‖² ρ(dθ)`.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ParamVector};
use crate::error::{Error, Result};
use crate::lrate::{Diagnostics, EtaBounds, LearningRateResult, Method, TracePoint};
use crate::model::Model;
use crate::stream::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// The prior if proper, else a point mass at θ̂.
    Auto,
    Prior,
    PointMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolmesWalkerConfig {
    pub prior_draws: usize,
    pub reference: Reference,
    pub bounds: EtaBounds,
}

impl Default for HolmesWalkerConfig {
    fn default() -> Self {
        Self {
            prior_draws: 1000,
            reference: Reference::Auto,
            bounds: EtaBounds::default(),
        }
    }
}

/// The numerator takes the exact expectation over `y | xᵢ ~ p_θ̂` at every
/// observed covariate row; the denominator averages over observed pairs.
/// Both use the same reference draws.
pub fn holmes_walker_select<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    cfg: &HolmesWalkerConfig,
    stream: &RandomStream,
) -> Result<LearningRateResult> {
    if !model.is_differentiable() {
        return Err(Error::Unsupported(
            "Holmes–Walker needs a differentiable model",
        ));
    }
    let theta_hat = model.mle(data)?;
    let use_prior = match cfg.reference {
        Reference::Auto => model.prior_is_proper(),
        Reference::Prior => true,
        Reference::PointMass => false,
    };
    let reference: Vec<ParamVector> = if use_prior {
        if cfg.prior_draws == 0 {
            return Err(Error::InvalidConfig(
                "Holmes–Walker needs at least one prior draw".into(),
            ));
        }
        let mut rng = stream.rng();
        (0..cfg.prior_draws)
            .map(|_| model.sample_prior(data, &mut rng))
            .collect::<Result<_>>()?
    } else {
        vec![theta_hat.clone()]
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for theta in &reference {
        for i in 0..data.n() {
            num += model.expected_sq_score(theta, &theta_hat, data, i)?;
            den += model.obs_score_hessian(theta, data, i)?.0.norm_squared();
        }
    }
    let scale = (reference.len() * data.n()) as f64;
    num /= scale;
    den /= scale;
    if !(den >= 1e-12) {
        return Err(Error::Numerical(format!(
            "observed information average {den} below 1e-12"
        )));
    }
    let raw = (num / den).sqrt();
    if !raw.is_finite() {
        return Err(Error::Numerical(format!("information ratio {num}/{den}")));
    }
    let (eta_hat, clipped) = cfg.bounds.clip(raw);
    let mut diagnostics = Diagnostics {
        hit_bounds: clipped,
        ..Diagnostics::default()
    };
    diagnostics.notes.push(if use_prior {
        "reference: prior".into()
    } else {
        "reference: point mass at θ̂".into()
    });
    Ok(LearningRateResult {
        eta_hat,
        method: Method::HolmesWalker,
        trace: vec![TracePoint {
            eta: raw,
            value: num / den,
        }],
        diagnostics,
    })
}
