//! Trace-matching learning rate `η̂ = tr(Ĵ Λ̂⁻¹ Ĵ) / tr(Ĵ)`, `Ĵ = −V̂`.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::spd_factor;
use crate::lrate::sandwich::estimate_sandwich;
use crate::lrate::{Diagnostics, EtaBounds, LearningRateResult, Method, TracePoint};
use crate::model::Model;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LyddonConfig {
    /// Restrict both matrices to the leading `k` coordinates of θ.
    pub coordinates: Option<usize>,
    pub bounds: EtaBounds,
}

pub fn lyddon_select<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    cfg: &LyddonConfig,
) -> Result<LearningRateResult> {
    let sw = estimate_sandwich(model, data)?;
    let d = sw.theta_hat.len();
    if data.n() <= d {
        return Err(Error::InvalidData(format!(
            "need n > d, got n={}, d={d}",
            data.n()
        )));
    }
    let k = cfg.coordinates.unwrap_or(d).min(d);
    let j = -sw.v_hat.view((0, 0), (k, k)).into_owned();
    let lambda = sw.lambda_hat.view((0, 0), (k, k)).into_owned();
    let factor = spd_factor(&lambda)?;
    let num = (&j * factor.chol.solve(&j)).trace();
    let den = j.trace();
    if !(den.abs() > 0.0) || !num.is_finite() {
        return Err(Error::Numerical(format!("trace ratio {num}/{den}")));
    }
    let raw = num / den;
    let (eta_hat, clipped) = cfg.bounds.clip(raw);
    let mut diagnostics = Diagnostics {
        hit_bounds: clipped,
        ..Diagnostics::default()
    };
    if factor.ridged {
        diagnostics.notes.push("Λ̂ ridged before inversion".into());
    }
    Ok(LearningRateResult {
        eta_hat,
        method: Method::Lyddon,
        trace: vec![TracePoint {
            eta: raw,
            value: den,
        }],
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GaussianLocationModel;

    #[test]
    fn gaussian_location_is_variance_ratio() {
        let y = vec![-1.0, 1.0, -1.0, 1.0, 3.0, -3.0];
        let s2 = y.iter().map(|v| v * v).sum::<f64>() / 6.0;
        let d = Dataset::response_only(y).unwrap();
        let m = GaussianLocationModel::flat(1.5).unwrap();
        let r = lyddon_select(&m, &d, &LyddonConfig::default()).unwrap();
        assert!((r.eta_hat - 2.25 / s2).abs() < 1e-12);
    }
}
