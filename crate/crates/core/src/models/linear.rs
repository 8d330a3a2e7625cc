//! Conjugate normal–inverse-gamma linear regression, θ = (β, σ²).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::data::{Dataset, ParamVector};
use crate::error::{Error, Result};
use crate::linalg::{quad_form, spd_inverse, symmetrize};
use crate::model::Model;
use crate::models::gaussian::check_index;
use crate::posterior::{NigParams, PosteriorHandle, PosteriorKind};
use crate::special::digamma;
use crate::stream::{RandomStream, StreamRng};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Prior `σ² ~ IG(a0, b0)`, `β | σ² ~ N(m0, g σ² I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRegressionModel {
    /// `None` means the zero vector.
    pub prior_mean_beta: Option<DVector<f64>>,
    pub prior_cov_scale: f64,
    pub prior_shape: f64,
    pub prior_rate: f64,
}

impl Default for LinearRegressionModel {
    fn default() -> Self {
        Self {
            prior_mean_beta: None,
            prior_cov_scale: 100.0,
            prior_shape: 1.0,
            prior_rate: 1.0,
        }
    }
}

/// Sufficient statistics `(XᵀX, Xᵀy, yᵀy, n)`.
#[derive(Debug, Clone)]
pub struct LinearSuffStats {
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
    pub n: usize,
}

impl LinearSuffStats {
    pub fn zeros(p: usize) -> Self {
        Self {
            xtx: DMatrix::zeros(p, p),
            xty: DVector::zeros(p),
            yty: 0.0,
            n: 0,
        }
    }

    pub fn from_data(data: &Dataset) -> Self {
        let x = data.x();
        let y = data.y();
        Self {
            xtx: x.tr_mul(x),
            xty: x.tr_mul(y),
            yty: y.dot(y),
            n: data.n(),
        }
    }

    pub fn push(&mut self, x: &DVector<f64>, y: f64) {
        self.xtx.ger(1.0, x, x, 1.0);
        self.xty.axpy(y, x, 1.0);
        self.yty += y * y;
        self.n += 1;
    }
}

#[derive(Debug, Clone)]
pub struct LinearPrepared {
    stats: LinearSuffStats,
    mle: ParamVector,
}

impl LinearRegressionModel {
    pub fn new(prior_cov_scale: f64, prior_shape: f64, prior_rate: f64) -> Result<Self> {
        for (name, v) in [
            ("g", prior_cov_scale),
            ("a0", prior_shape),
            ("b0", prior_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            prior_mean_beta: None,
            prior_cov_scale,
            prior_shape,
            prior_rate,
        })
    }

    fn prior_mean(&self, p: usize) -> DVector<f64> {
        self.prior_mean_beta
            .clone()
            .unwrap_or_else(|| DVector::zeros(p))
    }

    /// Tempered NIG parameters from sufficient statistics.
    pub fn nig_update(&self, stats: &LinearSuffStats, eta: f64) -> Result<NigParams> {
        let p = stats.xty.len();
        let m0 = self.prior_mean(p);
        if m0.len() != p {
            return Err(Error::InvalidParameter(format!(
                "prior mean has length {}, data has p={p}",
                m0.len()
            )));
        }
        let g = self.prior_cov_scale;
        let precision = DMatrix::identity(p, p) / g + &stats.xtx * eta;
        let (mut scale, _) = spd_inverse(&precision)?;
        symmetrize(&mut scale);
        let mean = &scale * (&m0 / g + &stats.xty * eta);
        let shape = self.prior_shape + eta * stats.n as f64 / 2.0;
        let rate = self.prior_rate
            + 0.5 * (eta * stats.yty + m0.dot(&m0) / g - quad_form(&precision, &mean));
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::Numerical(format!(
                "inverse-gamma rate {rate} is not positive"
            )));
        }
        Ok(NigParams {
            mean,
            scale,
            shape,
            rate,
        })
    }

    /// E[−log N(y; xᵀβ, σ²)] under the NIG distribution `nig`.
    pub fn predictive_term(nig: &NigParams, x: &DVector<f64>, y: f64) -> f64 {
        let resid = y - x.dot(&nig.mean);
        0.5 * LN_2PI
            + 0.5 * (nig.rate.ln() - digamma(nig.shape))
            + 0.5 * (resid * resid * nig.shape / nig.rate + quad_form(&nig.scale, x))
    }

    fn split<'a>(&self, theta: &'a ParamVector) -> (nalgebra::DVectorView<'a, f64>, f64) {
        let p = theta.len() - 1;
        (theta.as_vector().rows(0, p), theta[p])
    }
}

impl Model for LinearRegressionModel {
    type Prepared = LinearPrepared;

    fn name(&self) -> &'static str {
        "linear-nig"
    }

    fn dim(&self, data: &Dataset) -> usize {
        data.p() + 1
    }

    fn check_param(&self, theta: &ParamVector, data: &Dataset) -> Result<()> {
        if theta.len() != data.p() + 1 {
            return Err(Error::InvalidParameter(format!(
                "linear model expects θ of length {}, got {}",
                data.p() + 1,
                theta.len()
            )));
        }
        let s2 = theta[theta.len() - 1];
        if !(s2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "σ² must be positive, got {s2}"
            )));
        }
        Ok(())
    }

    fn obs_loglik(&self, theta: &ParamVector, data: &Dataset, i: usize) -> f64 {
        let (beta, s2) = self.split(theta);
        let r = data.y()[i] - data.x().row(i).dot(&beta.transpose());
        -0.5 * (LN_2PI + s2.ln()) - r * r / (2.0 * s2)
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
        let (beta, s2) = self.split(theta);
        let p = beta.len();
        let x = data.x_row(i);
        let r = data.y()[i] - x.dot(&beta);
        let mut g = DVector::zeros(p + 1);
        g.rows_mut(0, p).copy_from(&(&x * (r / s2)));
        g[p] = -0.5 / s2 + r * r / (2.0 * s2 * s2);
        let mut h = DMatrix::zeros(p + 1, p + 1);
        h.view_mut((0, 0), (p, p))
            .copy_from(&(&x * x.transpose() * (-1.0 / s2)));
        let cross = &x * (-r / (s2 * s2));
        h.view_mut((0, p), (p, 1)).copy_from(&cross);
        h.view_mut((p, 0), (1, p)).copy_from(&cross.transpose());
        h[(p, p)] = 0.5 / (s2 * s2) - r * r / (s2 * s2 * s2);
        Ok((g, h))
    }

    fn expected_sq_score(
        &self,
        theta: &ParamVector,
        generator: &ParamVector,
        data: &Dataset,
        i: usize,
    ) -> Result<f64> {
        let (beta, s2) = self.split(theta);
        let (beta_g, s2_g) = self.split(generator);
        let x = data.x_row(i);
        // Y − xᵀβ ~ N(δ, σ_g²)
        let delta = x.dot(&(beta_g - beta));
        let m2 = delta * delta + s2_g;
        let m4 = delta.powi(4) + 6.0 * delta * delta * s2_g + 3.0 * s2_g * s2_g;
        Ok(x.norm_squared() * m2 / (s2 * s2) + (m4 - 2.0 * s2 * m2 + s2 * s2) / (4.0 * s2.powi(4)))
    }

    fn mle(&self, data: &Dataset) -> Result<ParamVector> {
        let p = data.p();
        let n = data.n();
        if n <= p {
            return Err(Error::InvalidData(format!("need n > p, got n={n}, p={p}")));
        }
        let x = data.x();
        let qr = x.clone().qr();
        let beta = qr
            .r()
            .solve_upper_triangular(&(qr.q().transpose() * data.y()))
            .filter(|b| b.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::Degenerate("singular design matrix".into()))?;
        let resid = data.y() - x * &beta;
        let s2 = resid.norm_squared() / n as f64;
        if !(s2 > 0.0) {
            return Err(Error::Degenerate("zero residual variance".into()));
        }
        let mut theta = DVector::zeros(p + 1);
        theta.rows_mut(0, p).copy_from(&beta);
        theta[p] = s2;
        Ok(ParamVector::new(theta))
    }

    fn prepare(&self, data: &Dataset) -> Result<LinearPrepared> {
        Ok(LinearPrepared {
            stats: LinearSuffStats::from_data(data),
            mle: self.mle(data)?,
        })
    }

    fn prepared_mle<'a>(&self, prepared: &'a LinearPrepared) -> &'a ParamVector {
        &prepared.mle
    }

    fn posterior_prepared(
        &self,
        prepared: &LinearPrepared,
        eta: f64,
        _stream: &RandomStream,
    ) -> Result<PosteriorHandle> {
        PosteriorHandle::new(
            eta,
            PosteriorKind::ClosedFormNig(self.nig_update(&prepared.stats, eta)?),
        )
    }

    fn sequential_predictive_negloglik(
        &self,
        data: &Dataset,
        eta: f64,
        i: usize,
        _stream: &RandomStream,
    ) -> Result<f64> {
        check_index(i, data.n())?;
        let stats = LinearSuffStats::from_data(&data.prefix(i - 1));
        let nig = self.nig_update(&stats, eta)?;
        Ok(Self::predictive_term(
            &nig,
            &data.x_row(i - 1),
            data.y()[i - 1],
        ))
    }

    fn sequential_terms(
        &self,
        data: &Dataset,
        eta: f64,
        _stream: &RandomStream,
    ) -> Result<Vec<Option<f64>>> {
        let mut stats = LinearSuffStats::zeros(data.p());
        let mut out = Vec::with_capacity(data.n());
        for i in 0..data.n() {
            let x = data.x_row(i);
            let y = data.y()[i];
            let nig = self.nig_update(&stats, eta)?;
            out.push(Some(Self::predictive_term(&nig, &x, y)));
            stats.push(&x, y);
        }
        Ok(out)
    }

    fn prior_is_proper(&self) -> bool {
        true
    }

    fn sample_prior(&self, data: &Dataset, rng: &mut StreamRng) -> Result<ParamVector> {
        let p = data.p();
        let precision = Gamma::new(self.prior_shape, 1.0 / self.prior_rate)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(rng);
        let s2 = 1.0 / precision;
        let sd = (self.prior_cov_scale * s2).sqrt();
        let m0 = self.prior_mean(p);
        let mut theta = DVector::zeros(p + 1);
        for j in 0..p {
            theta[j] = m0[j] + sd * rng.sample::<f64, _>(StandardNormal);
        }
        theta[p] = s2;
        Ok(ParamVector::new(theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{model_loglik, model_score_hessian};

    fn hand_data() -> Dataset {
        Dataset::from_rows(
            &[
                vec![1.0, 0.5, -0.2],
                vec![0.3, -1.0, 0.8],
                vec![-0.7, 0.2, 1.5],
            ],
            vec![2.0, -0.5, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn loglik_matches_density_product() {
        let d = Dataset::from_rows(
            &[
                vec![0.2, 1.0, 0.0],
                vec![1.0, -0.3, 0.5],
                vec![-0.4, 0.1, 2.0],
            ],
            vec![1.0, 0.0, 2.5],
        )
        .unwrap();
        let beta = [1.0, 2.0, -1.0];
        let theta = ParamVector::from_slice(&[1.0, 2.0, -1.0, 1.0]);
        let model = LinearRegressionModel::default();
        let mut expected = 0.0;
        for i in 0..3 {
            let mu: f64 = (0..3).map(|j| d.x()[(i, j)] * beta[j]).sum();
            let dens = (-(d.y()[i] - mu).powi(2) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            expected += dens.ln();
        }
        assert!((model_loglik(&model, &theta, &d).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_mle() {
        let d = Dataset::from_rows(
            &[
                vec![1.0, 0.5],
                vec![0.3, -1.0],
                vec![-0.7, 0.2],
                vec![0.1, 0.9],
                vec![2.0, -0.4],
            ],
            vec![2.0, -0.5, 1.0, 0.3, 0.9],
        )
        .unwrap();
        let model = LinearRegressionModel::default();
        let theta = model.mle(&d).unwrap();
        let (g, _) = model_score_hessian(&model, &theta, &d).unwrap();
        assert!(g.norm() < 1e-6, "{g}");
    }

    #[test]
    fn sequential_terms_match_batch() {
        let d = Dataset::from_rows(
            &[
                vec![1.0, 0.5],
                vec![0.3, -1.0],
                vec![-0.7, 0.2],
                vec![0.1, 0.9],
            ],
            vec![2.0, -0.5, 1.0, 0.3],
        )
        .unwrap();
        let model = LinearRegressionModel::default();
        let s = RandomStream::new(1);
        let terms = model.sequential_terms(&d, 0.7, &s).unwrap();
        for i in 1..=4 {
            let direct = model
                .sequential_predictive_negloglik(&d, 0.7, i, &s)
                .unwrap();
            assert!((terms[i - 1].unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn incremental_stats_equal_batch() {
        let d = hand_data();
        let mut stats = LinearSuffStats::zeros(3);
        for i in 0..3 {
            stats.push(&d.x_row(i), d.y()[i]);
        }
        let batch = LinearSuffStats::from_data(&d);
        assert!((stats.xtx - batch.xtx).norm() < 1e-14);
        assert!((stats.xty - batch.xty).norm() < 1e-14);
    }

    #[test]
    fn expected_sq_score_matches_simulation() {
        let d = hand_data();
        let model = LinearRegressionModel::default();
        let theta = ParamVector::from_slice(&[0.5, 1.0, -0.5, 0.8]);
        let gen = ParamVector::from_slice(&[0.7, 0.9, -0.2, 1.3]);
        let exact = model.expected_sq_score(&theta, &gen, &d, 1).unwrap();
        let mut rng = RandomStream::new(3).rng();
        let x = d.x_row(1);
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let y = x.dot(&DVector::from_column_slice(&[0.7, 0.9, -0.2]))
                + 1.3f64.sqrt() * rng.sample::<f64, _>(StandardNormal);
            let sim = Dataset::from_rows(&[x.iter().copied().collect()], vec![y]).unwrap();
            acc += model
                .obs_score_hessian(&theta, &sim, 0)
                .unwrap()
                .0
                .norm_squared();
        }
        let mc = acc / n as f64;
        assert!((mc - exact).abs() / exact < 0.02, "{mc} vs {exact}");
    }
}
