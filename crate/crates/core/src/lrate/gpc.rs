//! Generalized posterior calibration: stochastic approximation of the η at
//! which bootstrap coverage of θ̂ₙ equals the nominal level.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lrate::{Diagnostics, EtaBounds, LearningRateResult, Method, TracePoint};
use crate::model::Model;
use crate::stream::RandomStream;
use crate::uq::RegionBuilder;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpcConfig {
    pub alpha: f64,
    pub bootstrap: usize,
    pub eta0: f64,
    pub step_base: f64,
    pub step_exponent: f64,
    pub max_iter: usize,
    pub bounds: EtaBounds,
    pub stop_tol: f64,
    /// Consecutive small steps required to stop.
    pub patience: usize,
    /// Iterates averaged into η̂.
    pub tail: usize,
    /// Redraw the resamples at every iteration.
    pub fresh_pool: bool,
}

impl Default for GpcConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            bootstrap: 100,
            eta0: 1.0,
            step_base: 1.0,
            step_exponent: 0.51,
            max_iter: 40,
            bounds: EtaBounds::default(),
            stop_tol: 0.005,
            patience: 3,
            tail: 5,
            fresh_pool: false,
        }
    }
}

impl GpcConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        let ok = self.alpha > 0.0
            && self.alpha < 1.0
            && self.bootstrap > 0
            && self.step_base > 0.0
            && self.step_exponent > 0.5
            && self.step_exponent <= 1.0
            && self.max_iter > 0
            && self.stop_tol > 0.0
            && self.tail > 0
            && self.patience > 0;
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "invalid GPC settings {self:?}"
            )));
        }
        Ok(())
    }

    /// Step size `k_t = k₀ (1 + t)^{−γ}`.
    pub fn step(&self, t: usize) -> f64 {
        self.step_base * (1.0 + t as f64).powf(-self.step_exponent)
    }
}

/// One clipped update `η + k_t (ĉ − (1 − α))`, with a clipping flag.
pub fn sa_update(eta: f64, coverage: f64, t: usize, cfg: &GpcConfig) -> (f64, bool) {
    cfg.bounds
        .clip(eta + cfg.step(t) * (coverage - (1.0 - cfg.alpha)))
}

fn draw_pool<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    b: usize,
    stream: &RandomStream,
) -> Vec<Option<M::Prepared>> {
    let n = data.n();
    (0..b)
        .map(|k| {
            let mut rng = stream.child(k as u64).rng();
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            model.prepare(&data.select_rows(&idx)).ok()
        })
        .collect()
}

/// Streams: child 0 seeds the resample pool, child 1 the resample posteriors.
pub fn gpc_select<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    builder: &RegionBuilder,
    cfg: &GpcConfig,
    stream: &RandomStream,
) -> Result<LearningRateResult> {
    cfg.validate()?;
    let d = model.dim(data);
    if data.n() < d + 5 {
        return Err(Error::InvalidData(format!(
            "GPC needs n ≥ d + 5, got n={}, d={d}",
            data.n()
        )));
    }
    let builder = RegionBuilder {
        level: 1.0 - cfg.alpha,
        ..*builder
    };
    let theta_hat = model.mle(data)?;
    let pool_stream = stream.child(0);
    let post_stream = stream.child(1);
    let mut pool = draw_pool(model, data, cfg.bootstrap, &pool_stream);

    let mut diagnostics = Diagnostics::default();
    let mut eta = cfg.bounds.clip(cfg.eta0).0;
    let mut iterates = vec![eta];
    let mut trace = Vec::new();
    let mut clipped = 0usize;
    let mut small_steps = 0usize;
    let mut converged = false;
    for t in 0..cfg.max_iter {
        if cfg.fresh_pool && t > 0 {
            pool = draw_pool(model, data, cfg.bootstrap, &pool_stream.child(t as u64));
        }
        let mut hits = 0usize;
        let mut valid = 0usize;
        for (k, prepared) in pool.iter().enumerate() {
            let Some(prepared) = prepared else { continue };
            let Ok(post) = model.posterior_prepared(prepared, eta, &post_stream.child(k as u64))
            else {
                continue;
            };
            let Ok(covered) = builder.covers(&post, &theta_hat) else {
                continue;
            };
            valid += 1;
            hits += covered as usize;
        }
        if valid == 0 {
            return Err(Error::Degenerate("every bootstrap fit failed".into()));
        }
        diagnostics.degenerate_resamples =
            diagnostics.degenerate_resamples.max(cfg.bootstrap - valid);
        let coverage = hits as f64 / valid as f64;
        trace.push(TracePoint {
            eta,
            value: coverage,
        });
        let (next, hit) = sa_update(eta, coverage, t, cfg);
        clipped += hit as usize;
        small_steps = if (next - eta).abs() < cfg.stop_tol {
            small_steps + 1
        } else {
            0
        };
        eta = next;
        iterates.push(eta);
        if small_steps >= cfg.patience {
            converged = true;
            break;
        }
    }
    let tail = &iterates[iterates.len().saturating_sub(cfg.tail)..];
    let eta_hat = tail.iter().sum::<f64>() / tail.len() as f64;
    diagnostics.non_convergence = !converged;
    diagnostics.hit_bounds = 2 * clipped > trace.len();
    Ok(LearningRateResult {
        eta_hat,
        method: Method::Gpc,
        trace,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_update_at_nominal_coverage() {
        let cfg = GpcConfig::default();
        for t in [0, 3, 17] {
            assert_eq!(sa_update(0.73, 0.95, t, &cfg), (0.73, false));
        }
        assert_eq!(sa_update(4.99, 1.0, 0, &cfg), (5.0, true));
    }

    #[test]
    fn steps_satisfy_robbins_monro_shape() {
        let cfg = GpcConfig::default();
        assert_eq!(cfg.step(0), 1.0);
        assert!(cfg.step(10) < cfg.step(9));
    }
}
