//! Adaptive random-walk Metropolis.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::stream::StreamRng;

#[derive(Debug, Clone, PartialEq)]
pub struct RwmConfig {
    pub burn_in: usize,
    pub draws: usize,
    pub init_scale: f64,
    pub adapt_every: usize,
    pub target_accept: f64,
    pub adapt_factor: f64,
}

impl RwmConfig {
    pub fn new(burn_in: usize, draws: usize, dim: usize) -> Self {
        Self {
            burn_in,
            draws,
            init_scale: 2.38 / (dim as f64).sqrt(),
            adapt_every: 50,
            target_accept: 0.3,
            adapt_factor: 1.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RwmOutput {
    /// `draws × d`.
    pub draws: DMatrix<f64>,
    /// Acceptance rate over the retained (post-adaptation) steps.
    pub acceptance: f64,
    pub final_scale: f64,
}

/// Runs a chain with proposal `θ' = θ + scale · L z`. During burn-in the
/// scale is multiplied or divided by `adapt_factor` after each block of
/// `adapt_every` steps, then frozen.
pub fn adaptive_rwm(
    log_target: impl Fn(&DVector<f64>) -> f64,
    init: DVector<f64>,
    proposal_factor: &DMatrix<f64>,
    cfg: &RwmConfig,
    rng: &mut StreamRng,
) -> Result<RwmOutput> {
    let d = init.len();
    let mut current = init;
    let mut current_lp = log_target(&current);
    if !current_lp.is_finite() {
        return Err(Error::Numerical(
            "chain initialized at zero target density".into(),
        ));
    }
    let mut scale = cfg.init_scale;
    let mut block_accepts = 0usize;
    let mut kept_accepts = 0usize;
    let mut out = DMatrix::zeros(cfg.draws, d);
    for step in 0..cfg.burn_in + cfg.draws {
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let proposal = &current + proposal_factor * z * scale;
        let lp = log_target(&proposal);
        let accept = lp.is_finite() && {
            let u: f64 = rng.random();
            u.ln() < lp - current_lp
        };
        if accept {
            current = proposal;
            current_lp = lp;
        }
        if step < cfg.burn_in {
            block_accepts += accept as usize;
            if (step + 1) % cfg.adapt_every == 0 {
                let rate = block_accepts as f64 / cfg.adapt_every as f64;
                if rate > cfg.target_accept {
                    scale *= cfg.adapt_factor;
                } else {
                    scale /= cfg.adapt_factor;
                }
                block_accepts = 0;
            }
        } else {
            kept_accepts += accept as usize;
            out.row_mut(step - cfg.burn_in)
                .copy_from(&current.transpose());
        }
    }
    Ok(RwmOutput {
        draws: out,
        acceptance: kept_accepts as f64 / cfg.draws.max(1) as f64,
        final_scale: scale,
    })
}
