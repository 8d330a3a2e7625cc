//! Gibbs posterior for the MCID under the 0–1 loss
//! `ℓ_θ(x, y) = ½(1 − y·sign(x − θ))`, with `sign(0) = +1` and a uniform
//! prior on `[X₍₁₎, X₍ₙ₎]`.
//!
//! For θ in the cell `(u_k, u_{k+1}]` between consecutive distinct covariate
//! values, a point with `y = +1` incurs loss iff `x ≤ u_k`, and a point with
//! `y = −1` iff `x ≥ u_{k+1}`. The empirical risk is therefore constant on
//! cells and the posterior is piecewise constant.

use crate::data::{Dataset, ParamVector};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::models::gaussian::check_index;
use crate::piecewise::PiecewiseConstant;
use crate::posterior::{PosteriorHandle, PosteriorKind};
use crate::stream::RandomStream;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GibbsMcidModel;

pub fn mcid_loss(theta: f64, x: f64, y: f64) -> f64 {
    let sign = if x - theta >= 0.0 { 1.0 } else { -1.0 };
    0.5 * (1.0 - y * sign)
}

#[derive(Debug, Clone)]
pub struct GibbsPrepared {
    breaks: Vec<f64>,
    /// n·Rₙ on each cell.
    losses: Vec<f64>,
    mle: ParamVector,
}

impl GibbsPrepared {
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn cell_losses(&self) -> &[f64] {
        &self.losses
    }
}

fn sorted_unique(data: &Dataset) -> Vec<f64> {
    let mut u: Vec<f64> = data.x().column(0).iter().copied().collect();
    u.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
    u.dedup();
    u
}

fn position(breaks: &[f64], x: f64) -> usize {
    breaks.partition_point(|&b| b < x)
}

impl GibbsMcidModel {
    fn validate(data: &Dataset) -> Result<Vec<f64>> {
        if data.p() != 1 {
            return Err(Error::InvalidData(format!(
                "MCID model needs one covariate, got {}",
                data.p()
            )));
        }
        if data.y().iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidData("labels must be ±1".into()));
        }
        let breaks = sorted_unique(data);
        if breaks.len() < 2 {
            return Err(Error::Degenerate(
                "covariate support is a single point".into(),
            ));
        }
        Ok(breaks)
    }

    /// Posterior on the cells of `breaks` given per-cell summed losses.
    pub fn density(breaks: &[f64], losses: &[f64], eta: f64) -> Result<PiecewiseConstant> {
        let log_mass: Vec<f64> = breaks
            .windows(2)
            .zip(losses)
            .map(|(w, &l)| -eta * l + (w[1] - w[0]).ln())
            .collect();
        PiecewiseConstant::from_log_weights(breaks.to_vec(), &log_mass)
    }
}

impl Model for GibbsMcidModel {
    type Prepared = GibbsPrepared;

    fn name(&self) -> &'static str {
        "gibbs-mcid"
    }

    fn dim(&self, _data: &Dataset) -> usize {
        1
    }

    fn obs_loglik(&self, theta: &ParamVector, data: &Dataset, i: usize) -> f64 {
        -mcid_loss(theta[0], data.x()[(i, 0)], data.y()[i])
    }

    /// Midpoint of the leftmost minimizing cell.
    fn mle(&self, data: &Dataset) -> Result<ParamVector> {
        Ok(self.prepare(data)?.mle)
    }

    fn prepare(&self, data: &Dataset) -> Result<GibbsPrepared> {
        let breaks = Self::validate(data)?;
        let cells = breaks.len() - 1;
        // Difference array: +1 loss on cells k ≥ pos for y = +1, on k < pos for y = −1.
        let mut diff = vec![0.0; cells + 1];
        for i in 0..data.n() {
            let pos = position(&breaks, data.x()[(i, 0)]);
            if data.y()[i] > 0.0 {
                diff[pos.min(cells)] += 1.0;
            } else {
                diff[0] += 1.0;
                diff[pos.min(cells)] -= 1.0;
            }
        }
        let mut losses = Vec::with_capacity(cells);
        let mut acc = 0.0;
        for d in &diff[..cells] {
            acc += d;
            losses.push(acc);
        }
        let best = losses.iter().cloned().fold(f64::INFINITY, f64::min);
        let k = losses.iter().position(|&l| l == best).expect("non-empty");
        let mle = ParamVector::from_slice(&[0.5 * (breaks[k] + breaks[k + 1])]);
        Ok(GibbsPrepared {
            breaks,
            losses,
            mle,
        })
    }

    fn prepared_mle<'a>(&self, prepared: &'a GibbsPrepared) -> &'a ParamVector {
        &prepared.mle
    }

    fn posterior_prepared(
        &self,
        prepared: &GibbsPrepared,
        eta: f64,
        _stream: &RandomStream,
    ) -> Result<PosteriorHandle> {
        let pc = Self::density(&prepared.breaks, &prepared.losses, eta)?;
        if eta == 0.0 {
            return Ok(PosteriorHandle::prior_only(
                PosteriorKind::PiecewiseConstant1D(pc),
            ));
        }
        PosteriorHandle::new(eta, PosteriorKind::PiecewiseConstant1D(pc))
    }

    /// Expected loss of row `i` under the posterior from rows before it, on
    /// the full-sample support.
    fn sequential_predictive_negloglik(
        &self,
        data: &Dataset,
        eta: f64,
        i: usize,
        _stream: &RandomStream,
    ) -> Result<f64> {
        check_index(i, data.n())?;
        let breaks = Self::validate(data)?;
        let mut losses = vec![0.0; breaks.len() - 1];
        for j in 0..i - 1 {
            add_loss(&mut losses, &breaks, data.x()[(j, 0)], data.y()[j]);
        }
        let pc = Self::density(&breaks, &losses, eta)?;
        Ok(loss_mass(
            &pc,
            &breaks,
            data.x()[(i - 1, 0)],
            data.y()[i - 1],
        ))
    }

    fn sequential_terms(
        &self,
        data: &Dataset,
        eta: f64,
        _stream: &RandomStream,
    ) -> Result<Vec<Option<f64>>> {
        let breaks = Self::validate(data)?;
        let mut losses = vec![0.0; breaks.len() - 1];
        let mut out = Vec::with_capacity(data.n());
        for j in 0..data.n() {
            let (x, y) = (data.x()[(j, 0)], data.y()[j]);
            let pc = Self::density(&breaks, &losses, eta)?;
            out.push(Some(loss_mass(&pc, &breaks, x, y)));
            add_loss(&mut losses, &breaks, x, y);
        }
        Ok(out)
    }

    fn prior_is_proper(&self) -> bool {
        true
    }
}

fn add_loss(losses: &mut [f64], breaks: &[f64], x: f64, y: f64) {
    let pos = position(breaks, x).min(losses.len());
    if y > 0.0 {
        losses[pos..].iter_mut().for_each(|l| *l += 1.0);
    } else {
        losses[..pos].iter_mut().for_each(|l| *l += 1.0);
    }
}

/// Posterior probability of the cells on which `(x, y)` incurs loss.
fn loss_mass(pc: &PiecewiseConstant, breaks: &[f64], x: f64, y: f64) -> f64 {
    let pos = position(breaks, x).min(pc.weights().len());
    let below: f64 = pc.weights()[..pos].iter().sum();
    if y > 0.0 {
        1.0 - below
    } else {
        below
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::model_loglik;

    fn data(x: &[f64], y: &[f64]) -> Dataset {
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        Dataset::from_rows(&rows, y.to_vec()).unwrap()
    }

    fn brute_risk(d: &Dataset, theta: f64) -> f64 {
        (0..d.n())
            .map(|i| mcid_loss(theta, d.x()[(i, 0)], d.y()[i]))
            .sum()
    }

    #[test]
    fn mle_midpoint_of_leftmost_cell() {
        let d = data(&[1.0, 2.0, 3.0], &[-1.0, 1.0, 1.0]);
        let theta = GibbsMcidModel.mle(&d).unwrap();
        assert_eq!(theta[0], 1.5);
        assert_eq!(model_loglik(&GibbsMcidModel, &theta, &d).unwrap(), 0.0);
    }

    #[test]
    fn cell_losses_match_brute_force() {
        let d = data(
            &[0.3, 1.1, 1.1, 2.0, -0.5, 0.9, 3.2],
            &[1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0],
        );
        let prep = GibbsMcidModel.prepare(&d).unwrap();
        for (k, w) in prep.breaks().windows(2).enumerate() {
            for theta in [0.7 * w[0] + 0.3 * w[1], 0.2 * w[0] + 0.8 * w[1], w[1]] {
                assert_eq!(prep.cell_losses()[k], brute_risk(&d, theta), "cell {k}");
            }
        }
    }

    #[test]
    fn zero_eta_is_uniform() {
        let d = data(&[0.0, 1.0, 4.0], &[1.0, -1.0, 1.0]);
        let post = GibbsMcidModel
            .posterior(&d, 0.0, &RandomStream::new(0))
            .unwrap();
        let PosteriorKind::PiecewiseConstant1D(pc) = post.kind() else {
            panic!()
        };
        assert!((pc.cdf(2.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sequential_terms_match_direct() {
        let d = data(
            &[0.3, 1.1, 2.0, -0.5, 0.9, 3.2],
            &[1.0, -1.0, 1.0, -1.0, -1.0, 1.0],
        );
        let s = RandomStream::new(0);
        let terms = GibbsMcidModel.sequential_terms(&d, 0.8, &s).unwrap();
        for i in 1..=6 {
            let direct = GibbsMcidModel
                .sequential_predictive_negloglik(&d, 0.8, i, &s)
                .unwrap();
            assert!((terms[i - 1].unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_prior_expected_loss() {
        // Under the uniform prior on [0, 4], a y = +1 point at x = 1 incurs
        // loss for θ > 1, which has probability 3/4.
        let d = data(&[1.0, 0.0, 4.0], &[1.0, -1.0, 1.0]);
        let t = GibbsMcidModel
            .sequential_predictive_negloglik(&d, 2.0, 1, &RandomStream::new(0))
            .unwrap();
        assert!((t - 0.75).abs() < 1e-14);
    }
}
