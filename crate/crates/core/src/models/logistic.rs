//! Logistic regression for the MCID, `P(Y = +1 | X = x) = F(β₀ + β₁x)`, with
//! labels in {−1, +1}.
//!
//! Prior: flat for β₁ and exponential with scale `b̂ = exp(β̂₀ + γ)` for
//! `e^{β₀}`, so `log π(β₀) = β₀ − log b̂ − e^{β₀}/b̂`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, ParamVector};
use crate::error::{Error, Result};
use crate::linalg::{spd_factor, spd_inverse};
use crate::model::Model;
use crate::models::gaussian::check_index;
use crate::models::mcmc::{adaptive_rwm, RwmConfig};
use crate::posterior::{PosteriorHandle, PosteriorKind};
use crate::special::{logistic, softplus, EULER_GAMMA};
use crate::stream::{RandomStream, StreamRng};

/// Coefficients beyond this magnitude are treated as separation.
pub const SEPARATION_BOUND: f64 = 30.0;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticMcidModel {
    pub burn_in: usize,
    pub chain_length: usize,
    /// `None` uses `2.38/√2`.
    pub proposal_scale: Option<f64>,
    /// Particles for the sequential predictive expectations.
    pub smc_particles: usize,
    /// Metropolis moves per particle after each resampling.
    pub smc_moves: usize,
}

impl Default for LogisticMcidModel {
    fn default() -> Self {
        Self {
            burn_in: 1000,
            chain_length: 2000,
            proposal_scale: None,
            smc_particles: 500,
            smc_moves: 5,
        }
    }
}

/// Distinct `(x, y)` rows with multiplicities.
#[derive(Debug, Clone)]
pub struct WeightedRows {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

impl WeightedRows {
    pub fn compress(data: &Dataset) -> Self {
        let mut rows: Vec<(f64, f64)> = (0..data.n())
            .map(|i| (data.x()[(i, 0)], data.y()[i]))
            .collect();
        rows.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
        let mut out = WeightedRows {
            x: Vec::new(),
            y: Vec::new(),
            w: Vec::new(),
        };
        for (x, y) in rows {
            if out.x.last() == Some(&x) && out.y.last() == Some(&y) {
                *out.w.last_mut().unwrap() += 1.0;
            } else {
                out.x.push(x);
                out.y.push(y);
                out.w.push(1.0);
            }
        }
        out
    }

    fn loglik(&self, b0: f64, b1: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.x.len() {
            total -= self.w[k] * softplus(-self.y[k] * (b0 + b1 * self.x[k]));
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct LogisticPrepared {
    rows: WeightedRows,
    mle: ParamVector,
    log_b: f64,
    info: DMatrix<f64>,
}

impl LogisticPrepared {
    /// `log b̂` of the prior.
    pub fn log_prior_scale(&self) -> f64 {
        self.log_b
    }
}

/// True when some threshold on x splits the labels perfectly (ties
/// allowed), or only one label is present.
pub fn is_separable(x: &[f64], y: &[f64]) -> bool {
    let mut max_neg = f64::NEG_INFINITY;
    let mut min_neg = f64::INFINITY;
    let mut max_pos = f64::NEG_INFINITY;
    let mut min_pos = f64::INFINITY;
    for (&xi, &yi) in x.iter().zip(y) {
        if yi > 0.0 {
            max_pos = max_pos.max(xi);
            min_pos = min_pos.min(xi);
        } else {
            max_neg = max_neg.max(xi);
            min_neg = min_neg.min(xi);
        }
    }
    if !min_pos.is_finite() || !min_neg.is_finite() {
        return true;
    }
    max_neg <= min_pos || max_pos <= min_neg
}

fn log_prior(b0: f64, log_b: f64) -> f64 {
    b0 - log_b - (b0 - log_b).exp()
}

fn fisher_info(rows: &WeightedRows, b0: f64, b1: f64) -> DMatrix<f64> {
    let mut info = DMatrix::zeros(2, 2);
    for k in 0..rows.x.len() {
        let u = b0 + b1 * rows.x[k];
        let v = rows.w[k] * logistic(u) * logistic(-u);
        let x = rows.x[k];
        info[(0, 0)] += v;
        info[(0, 1)] += v * x;
        info[(1, 1)] += v * x * x;
    }
    info[(1, 0)] = info[(0, 1)];
    info
}

fn newton_mle(rows: &WeightedRows) -> Result<(f64, f64)> {
    if is_separable(&rows.x, &rows.y) {
        return Err(Error::Degenerate("perfect separation".into()));
    }
    let (mut b0, mut b1) = (0.0, 0.0);
    let mut ll = rows.loglik(b0, b1);
    for _ in 0..NEWTON_MAX_ITER {
        let mut g = DVector::zeros(2);
        for k in 0..rows.x.len() {
            let yk = rows.y[k];
            let s = rows.w[k] * yk * logistic(-yk * (b0 + b1 * rows.x[k]));
            g[0] += s;
            g[1] += s * rows.x[k];
        }
        let info = fisher_info(rows, b0, b1);
        let step = info
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Degenerate("singular information matrix".into()))?
            .solve(&g);
        let mut t = 1.0;
        let (mut n0, mut n1, mut nll);
        loop {
            n0 = b0 + t * step[0];
            n1 = b1 + t * step[1];
            nll = rows.loglik(n0, n1);
            if nll >= ll - 1e-12 || t < 1e-10 {
                break;
            }
            t *= 0.5;
        }
        let moved = (n0 - b0).abs().max((n1 - b1).abs());
        b0 = n0;
        b1 = n1;
        ll = nll;
        if b0.abs().max(b1.abs()) > SEPARATION_BOUND {
            return Err(Error::Degenerate(format!("|β̂| exceeds {SEPARATION_BOUND}")));
        }
        if moved < 1e-10 || g.amax() < 1e-10 {
            return Ok((b0, b1));
        }
    }
    Err(Error::NonConvergence {
        iterations: NEWTON_MAX_ITER,
        last: vec![b0, b1],
    })
}

impl LogisticMcidModel {
    fn rwm_config(&self, burn_in: usize, draws: usize) -> RwmConfig {
        let mut cfg = RwmConfig::new(burn_in, draws, 2);
        if let Some(s) = self.proposal_scale {
            cfg.init_scale = s;
        }
        cfg
    }

    /// Lower Cholesky factor of `(η·I(β̂) + prior curvature)⁻¹`.
    fn proposal_factor(&self, prepared: &LogisticPrepared, eta: f64) -> Result<DMatrix<f64>> {
        let mut h = &prepared.info * eta;
        h[(0, 0)] += (prepared.mle[0] - prepared.log_b).exp();
        let (cov, _) = spd_inverse(&h)?;
        Ok(spd_factor(&cov)?.chol.l())
    }

    fn chain(
        &self,
        rows: &WeightedRows,
        log_b: f64,
        init: &DVector<f64>,
        factor: &DMatrix<f64>,
        eta: f64,
        cfg: &RwmConfig,
        rng: &mut StreamRng,
    ) -> Result<(DMatrix<f64>, f64)> {
        let target = |t: &DVector<f64>| eta * rows.loglik(t[0], t[1]) + log_prior(t[0], log_b);
        let out = adaptive_rwm(target, init.clone(), factor, cfg, rng)?;
        Ok((out.draws, out.acceptance))
    }

    /// Sequential-Monte-Carlo estimates of the predictive terms for rows
    /// `first..n` (0-based), starting from an MCMC sample of Π_first.
    fn smc_terms(
        &self,
        data: &Dataset,
        prepared: &LogisticPrepared,
        first: usize,
        eta: f64,
        stream: &RandomStream,
    ) -> Result<Vec<f64>> {
        let s = self.smc_particles;
        let mut rng = stream.rng();
        let xs: Vec<f64> = (0..data.n()).map(|i| data.x()[(i, 0)]).collect();
        let ys: Vec<f64> = data.y().iter().copied().collect();
        let prefix = |k: usize| WeightedRows {
            x: xs[..k].to_vec(),
            y: ys[..k].to_vec(),
            w: vec![1.0; k],
        };

        let start_rows = prefix(first);
        let (b0, b1) = newton_mle(&start_rows)
            .or_else(|_| Ok::<_, Error>((prepared.mle[0], prepared.mle[1])))?;
        let init = DVector::from_column_slice(&[b0, b1]);
        let mut local = prepared.clone();
        local.info = fisher_info(&start_rows, b0, b1);
        local.mle = ParamVector::from_slice(&[b0, b1]);
        let factor = self.proposal_factor(&local, eta)?;
        let cfg = self.rwm_config(self.burn_in, s);
        let (draws, _) = self.chain(
            &start_rows,
            prepared.log_b,
            &init,
            &factor,
            eta,
            &cfg,
            &mut rng,
        )?;
        let mut particles: Vec<[f64; 2]> = (0..s).map(|r| [draws[(r, 0)], draws[(r, 1)]]).collect();
        let mut logw = vec![0.0; s];
        let mut out = Vec::with_capacity(data.n() - first);

        for i in first..data.n() {
            let (xi, yi) = (xs[i], ys[i]);
            let max_lw = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logw.iter().map(|l| (l - max_lw).exp()).collect();
            let wsum: f64 = w.iter().sum();
            let mut term = 0.0;
            for (p, wp) in particles.iter().zip(&w) {
                let loss = softplus(-yi * (p[0] + p[1] * xi));
                term += wp * loss;
            }
            out.push(term / wsum);

            for (p, lw) in particles.iter().zip(logw.iter_mut()) {
                *lw -= eta * softplus(-yi * (p[0] + p[1] * xi));
            }
            let max_lw = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logw.iter().map(|l| (l - max_lw).exp()).collect();
            let wsum: f64 = w.iter().sum();
            let ess = wsum * wsum / w.iter().map(|v| v * v).sum::<f64>();
            if ess < s as f64 / 2.0 && i + 1 < data.n() {
                particles = systematic_resample(&particles, &w, wsum, &mut rng);
                logw.iter_mut().for_each(|l| *l = 0.0);
                let rows = prefix(i + 1);
                let l = particle_proposal(&particles)?;
                let target =
                    |b: &[f64; 2]| eta * rows.loglik(b[0], b[1]) + log_prior(b[0], prepared.log_b);
                for p in particles.iter_mut() {
                    let mut lp = target(p);
                    for _ in 0..self.smc_moves {
                        let z0: f64 = rng.sample(StandardNormal);
                        let z1: f64 = rng.sample(StandardNormal);
                        let prop = [p[0] + l[0] * z0, p[1] + l[1] * z0 + l[2] * z1];
                        let lq = target(&prop);
                        let u: f64 = rng.random();
                        if lq.is_finite() && u.ln() < lq - lp {
                            *p = prop;
                            lp = lq;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn systematic_resample(
    particles: &[[f64; 2]],
    w: &[f64],
    wsum: f64,
    rng: &mut StreamRng,
) -> Vec<[f64; 2]> {
    let s = particles.len();
    let u0: f64 = rng.random::<f64>() / s as f64;
    let mut out = Vec::with_capacity(s);
    let mut cum = w[0] / wsum;
    let mut j = 0;
    for k in 0..s {
        let u = u0 + k as f64 / s as f64;
        while u > cum && j + 1 < s {
            j += 1;
            cum += w[j] / wsum;
        }
        out.push(particles[j]);
    }
    out
}

/// Packed lower factor `(l00, l10, l11)` of `2.38²/2 · Cov(particles)`.
fn particle_proposal(particles: &[[f64; 2]]) -> Result<[f64; 3]> {
    let s = particles.len() as f64;
    let m0 = particles.iter().map(|p| p[0]).sum::<f64>() / s;
    let m1 = particles.iter().map(|p| p[1]).sum::<f64>() / s;
    let (mut c00, mut c01, mut c11) = (0.0, 0.0, 0.0);
    for p in particles {
        c00 += (p[0] - m0).powi(2);
        c01 += (p[0] - m0) * (p[1] - m1);
        c11 += (p[1] - m1).powi(2);
    }
    let f = 2.38 * 2.38 / 2.0 / (s - 1.0);
    let cov = DMatrix::from_row_slice(2, 2, &[c00 * f, c01 * f, c01 * f, c11 * f]);
    let l = spd_factor(&cov)?.chol.l();
    Ok([l[(0, 0)], l[(1, 0)], l[(1, 1)]])
}

impl Model for LogisticMcidModel {
    type Prepared = LogisticPrepared;

    fn name(&self) -> &'static str {
        "logistic-mcid"
    }

    fn dim(&self, _data: &Dataset) -> usize {
        2
    }

    fn obs_loglik(&self, theta: &ParamVector, data: &Dataset, i: usize) -> f64 {
        -softplus(-data.y()[i] * (theta[0] + theta[1] * data.x()[(i, 0)]))
    }

    fn is_differentiable(&self) -> bool {
        true
    }

    fn obs_score_hessian(
        &self,
        theta: &ParamVector,
        data: &Dataset,
        i: usize,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let x = data.x()[(i, 0)];
        let y = data.y()[i];
        let u = theta[0] + theta[1] * x;
        let s = y * logistic(-y * u);
        let v = logistic(u) * logistic(-u);
        Ok((
            DVector::from_column_slice(&[s, s * x]),
            DMatrix::from_row_slice(2, 2, &[-v, -v * x, -v * x, -v * x * x]),
        ))
    }

    fn expected_sq_score(
        &self,
        theta: &ParamVector,
        generator: &ParamVector,
        data: &Dataset,
        i: usize,
    ) -> Result<f64> {
        let x = data.x()[(i, 0)];
        let u = theta[0] + theta[1] * x;
        let p_pos = logistic(generator[0] + generator[1] * x);
        let sq = p_pos * logistic(-u).powi(2) + (1.0 - p_pos) * logistic(u).powi(2);
        Ok(sq * (1.0 + x * x))
    }

    fn mle(&self, data: &Dataset) -> Result<ParamVector> {
        check_labels(data)?;
        let (b0, b1) = newton_mle(&WeightedRows::compress(data))?;
        Ok(ParamVector::from_slice(&[b0, b1]))
    }

    fn prepare(&self, data: &Dataset) -> Result<LogisticPrepared> {
        check_labels(data)?;
        let rows = WeightedRows::compress(data);
        let (b0, b1) = newton_mle(&rows)?;
        let info = fisher_info(&rows, b0, b1);
        Ok(LogisticPrepared {
            rows,
            mle: ParamVector::from_slice(&[b0, b1]),
            log_b: b0 + EULER_GAMMA,
            info,
        })
    }

    fn prepared_mle<'a>(&self, prepared: &'a LogisticPrepared) -> &'a ParamVector {
        &prepared.mle
    }

    fn posterior_prepared(
        &self,
        prepared: &LogisticPrepared,
        eta: f64,
        stream: &RandomStream,
    ) -> Result<PosteriorHandle> {
        if !(eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {eta}"
            )));
        }
        let factor = self.proposal_factor(prepared, eta)?;
        let cfg = self.rwm_config(self.burn_in, self.chain_length);
        let init = prepared.mle.as_vector().clone();
        let mut rng = stream.rng();
        let (draws, acceptance) = self.chain(
            &prepared.rows,
            prepared.log_b,
            &init,
            &factor,
            eta,
            &cfg,
            &mut rng,
        )?;
        let handle = PosteriorHandle::new(eta, PosteriorKind::SampleMatrix(draws))?;
        if !(0.05..=0.7).contains(&acceptance) {
            return Ok(handle.with_warning(format!(
                "acceptance rate {acceptance:.3} outside [0.05, 0.7]"
            )));
        }
        Ok(handle)
    }

    fn sequential_predictive_negloglik(
        &self,
        data: &Dataset,
        eta: f64,
        i: usize,
        stream: &RandomStream,
    ) -> Result<f64> {
        check_index(i, data.n())?;
        let prefix = data.prefix(i - 1);
        let xs: Vec<f64> = prefix.x().column(0).iter().copied().collect();
        let ys: Vec<f64> = prefix.y().iter().copied().collect();
        if is_separable(&xs, &ys) {
            return Err(Error::ImproperPosterior(format!(
                "first {} rows are separable",
                i - 1
            )));
        }
        let full = self.prepare(data)?;
        let rows = WeightedRows::compress(&prefix);
        let (b0, b1) = newton_mle(&rows)?;
        let local = LogisticPrepared {
            info: fisher_info(&rows, b0, b1),
            mle: ParamVector::from_slice(&[b0, b1]),
            log_b: full.log_b,
            rows,
        };
        let factor = self.proposal_factor(&local, eta)?;
        let cfg = self.rwm_config(self.burn_in, self.smc_particles);
        let mut rng = stream.rng();
        let init = local.mle.as_vector().clone();
        let (draws, _) = self.chain(
            &local.rows,
            local.log_b,
            &init,
            &factor,
            eta,
            &cfg,
            &mut rng,
        )?;
        let (xi, yi) = (data.x()[(i - 1, 0)], data.y()[i - 1]);
        let total: f64 = draws
            .row_iter()
            .map(|r| softplus(-yi * (r[0] + r[1] * xi)))
            .sum();
        Ok(total / draws.nrows() as f64)
    }

    /// Terms before the first non-separable prefix are `None`; the rest come
    /// from one resample-move particle filter.
    fn sequential_terms(
        &self,
        data: &Dataset,
        eta: f64,
        stream: &RandomStream,
    ) -> Result<Vec<Option<f64>>> {
        let prepared = self.prepare(data)?;
        let xs: Vec<f64> = data.x().column(0).iter().copied().collect();
        let ys: Vec<f64> = data.y().iter().copied().collect();
        let first = (1..=data.n())
            .find(|&k| !is_separable(&xs[..k], &ys[..k]))
            .ok_or_else(|| Error::Degenerate("every prefix is separable".into()))?;
        let mut out = vec![None; first];
        out.extend(
            self.smc_terms(data, &prepared, first, eta, stream)?
                .into_iter()
                .map(Some),
        );
        Ok(out)
    }
}

fn check_labels(data: &Dataset) -> Result<()> {
    if data.p() != 1 {
        return Err(Error::InvalidData(format!(
            "logistic MCID model needs one covariate, got {}",
            data.p()
        )));
    }
    if data.y().iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidData("labels must be ±1".into()));
    }
    Ok(())
}

/// Unnormalized log posterior density at `θ = (β₀, β₁)`.
pub fn log_posterior_density(prepared: &LogisticPrepared, theta: &[f64], eta: f64) -> f64 {
    eta * prepared.rows.loglik(theta[0], theta[1]) + log_prior(theta[0], prepared.log_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::model_loglik;

    fn simulate(n: usize, b0: f64, b1: f64, seed: u64) -> Dataset {
        let mut rng = RandomStream::new(seed).rng();
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let xi: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.random();
            x.push(vec![xi]);
            y.push(if u < logistic(b0 + b1 * xi) {
                1.0
            } else {
                -1.0
            });
        }
        Dataset::from_rows(&x, y).unwrap()
    }

    #[test]
    fn loglik_at_origin_is_log_half() {
        let d = Dataset::from_rows(&[vec![3.0], vec![-1.0]], vec![1.0, -1.0]).unwrap();
        let m = LogisticMcidModel::default();
        let ll = model_loglik(&m, &ParamVector::from_slice(&[0.0, 0.0]), &d).unwrap();
        assert!((ll - 2.0 * 0.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn separation_is_degenerate() {
        let d =
            Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], vec![-1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(
            LogisticMcidModel::default().mle(&d),
            Err(Error::Degenerate(_))
        ));
        assert!(is_separable(&[0.0, 1.0], &[1.0, 1.0]));
        assert!(!is_separable(&[0.0, 1.0, 2.0], &[1.0, -1.0, 1.0]));
    }

    #[test]
    fn mle_recovers_coefficients() {
        let d = simulate(4000, 0.5, -1.5, 4);
        let theta = LogisticMcidModel::default().mle(&d).unwrap();
        assert!(
            (theta[0] - 0.5).abs() < 0.15 && (theta[1] + 1.5).abs() < 0.15,
            "{:?}",
            theta.as_slice()
        );
    }

    #[test]
    fn weighted_rows_preserve_loglik() {
        let d = simulate(50, 0.2, 1.0, 5).duplicated();
        let rows = WeightedRows::compress(&d);
        assert_eq!(rows.x.len(), 50);
        let m = LogisticMcidModel::default();
        let direct = model_loglik(&m, &ParamVector::from_slice(&[0.3, 0.7]), &d).unwrap();
        assert!((rows.loglik(0.3, 0.7) - direct).abs() < 1e-10);
    }

    #[test]
    fn chain_centers_on_generating_values() {
        let d = simulate(500, -0.5, 1.0, 6);
        let m = LogisticMcidModel::default();
        let post = m.posterior(&d, 1.0, &RandomStream::new(7)).unwrap();
        let (mean, cov) = post.mean_cov().unwrap();
        assert!((mean[0] + 0.5).abs() < 3.0 * cov[(0, 0)].sqrt());
        assert!((mean[1] - 1.0).abs() < 3.0 * cov[(1, 1)].sqrt());
        assert!(post.warnings().is_empty());
    }

    #[test]
    fn smc_terms_track_direct_chains() {
        let d = simulate(80, 0.0, 1.0, 8);
        let m = LogisticMcidModel::default();
        let long = LogisticMcidModel {
            smc_particles: 5000,
            ..LogisticMcidModel::default()
        };
        let s = RandomStream::new(9);
        let terms = m.sequential_terms(&d, 0.6, &s).unwrap();
        let first = terms.iter().position(Option::is_some).unwrap();
        for i in [first + 30, 79] {
            let direct = long
                .sequential_predictive_negloglik(&d, 0.6, i + 1, &s.child(i as u64))
                .unwrap();
            let smc = terms[i].unwrap();
            assert!(
                (direct - smc).abs() < 0.15 * direct.max(0.2),
                "row {i}: {direct} vs {smc}"
            );
        }
    }
}
