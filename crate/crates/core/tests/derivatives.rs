use gbcal_core::dgp::{DependentErrorsDgp, MixtureLogisticDgp};
use gbcal_core::models::{GaussianLocationModel, LinearRegressionModel, LogisticMcidModel};
use gbcal_core::{Dataset, Model, ParamVector, RandomStream};
use rand::Rng;

const H: f64 = 1e-5;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Central differences of the log-likelihood and of the analytic score at 20
/// random points, each against a random observation.
fn check_fd<M: Model>(
    model: &M,
    data: &Dataset,
    mut point: impl FnMut(&mut dyn rand::RngCore) -> Vec<f64>,
) {
    let mut rng = RandomStream::new(99).rng();
    for _ in 0..20 {
        let theta = point(&mut rng);
        let i = rng.random_range(0..data.n());
        let base = ParamVector::from_slice(&theta);
        let (g, h) = model.obs_score_hessian(&base, data, i).unwrap();
        for j in 0..theta.len() {
            let shift = |s: f64| {
                let mut t = theta.clone();
                t[j] += s * H * t[j].abs().max(1.0);
                ParamVector::from_slice(&t)
            };
            let step = 2.0 * H * theta[j].abs().max(1.0);
            let fd = (model.obs_loglik(&shift(1.0), data, i)
                - model.obs_loglik(&shift(-1.0), data, i))
                / step;
            assert!(
                rel_err(g[j], fd) < 1e-4,
                "score {j}: {} vs {fd} at {theta:?}",
                g[j]
            );
            let gp = model.obs_score_hessian(&shift(1.0), data, i).unwrap().0;
            let gm = model.obs_score_hessian(&shift(-1.0), data, i).unwrap().0;
            for k in 0..theta.len() {
                let fd = (gp[k] - gm[k]) / step;
                assert!(
                    rel_err(h[(k, j)], fd) < 1e-4,
                    "hessian ({k},{j}): {} vs {fd}",
                    h[(k, j)]
                );
            }
        }
    }
}

#[test]
fn gaussian_location() {
    let d = Dataset::response_only(vec![0.3, -1.2, 2.5, 0.9]).unwrap();
    let m = GaussianLocationModel::new(1.5, 0.0, 10.0).unwrap();
    check_fd(&m, &d, |r| vec![r.random_range(-3.0..3.0)]);
}

#[test]
fn linear_regression() {
    let d = DependentErrorsDgp::degree(1)
        .unwrap()
        .generate(50, &RandomStream::new(3))
        .unwrap();
    let m = LinearRegressionModel::default();
    check_fd(&m, &d, |r| {
        let mut t: Vec<f64> = (0..4).map(|_| r.random_range(-2.0..2.0)).collect();
        t.push(r.random_range(0.3..3.0));
        t
    });
}

#[test]
fn logistic() {
    let d = MixtureLogisticDgp::degree(1)
        .unwrap()
        .generate(60, &RandomStream::new(4))
        .unwrap();
    let m = LogisticMcidModel::default();
    check_fd(&m, &d, |r| {
        vec![r.random_range(-6.0..2.0), r.random_range(-0.5..1.5)]
    });
}
