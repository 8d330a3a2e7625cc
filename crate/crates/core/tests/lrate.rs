use gbcal_core::dgp::{DependentErrorsDgp, ToyDgp};
use gbcal_core::lrate::{
    default_grid, estimate_sandwich, gpc_select, holmes_walker_select, lyddon_select, sa_update,
    safebayes_select, EtaBounds, GpcConfig, HolmesWalkerConfig, LyddonConfig,
};
use gbcal_core::models::{GaussianLocationModel, LinearRegressionModel, LogisticMcidModel};
use gbcal_core::uq::{RegionBuilder, Target};
use gbcal_core::{Dataset, RandomStream};
use rand::Rng;
use rand_distr::StandardNormal;

fn logistic_data(n: usize, b0: f64, b1: f64, seed: u64) -> Dataset {
    let mut rng = RandomStream::new(seed).rng();
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.sample::<f64, _>(StandardNormal) * 2.0 + 1.0;
        let p = 1.0 / (1.0 + (-(b0 + b1 * x)).exp());
        rows.push(vec![x]);
        y.push(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
    }
    Dataset::from_rows(&rows, y).unwrap()
}

#[test]
fn information_identity_well_specified() {
    let full = LyddonConfig::default();
    let gauss = ToyDgp::with_eta_star(1.0, 1.0, 0.5)
        .unwrap()
        .generate(2000, &RandomStream::new(1))
        .unwrap();
    let sw = estimate_sandwich(&GaussianLocationModel::flat(1.0).unwrap(), &gauss).unwrap();
    assert!((sw.lambda_hat[(0, 0)] + sw.v_hat[(0, 0)]).abs() < 0.1 * sw.v_hat[(0, 0)].abs());

    let homo = DependentErrorsDgp {
        s_small: 1.0,
        s_mod: 1.0,
        ..DependentErrorsDgp::degree(1).unwrap()
    };
    let lin = homo.generate(2000, &RandomStream::new(2)).unwrap();
    let eta = lyddon_select(&LinearRegressionModel::default(), &lin, &full)
        .unwrap()
        .eta_hat;
    assert!((eta - 1.0).abs() < 0.1, "linear {eta}");

    let logi = logistic_data(2000, -1.0, 0.8, 3);
    let eta = lyddon_select(&LogisticMcidModel::default(), &logi, &full)
        .unwrap()
        .eta_hat;
    assert!((eta - 1.0).abs() < 0.1, "logistic {eta}");
}

#[test]
fn sandwich_lambda_is_psd() {
    let d = DependentErrorsDgp::degree(3)
        .unwrap()
        .generate(80, &RandomStream::new(4))
        .unwrap();
    let sw = estimate_sandwich(&LinearRegressionModel::default(), &d).unwrap();
    let eig = sw.lambda_hat.clone().symmetric_eigen().eigenvalues;
    assert!(eig.iter().all(|&e| e >= -1e-10));
    assert_eq!(sw.lambda_hat, sw.lambda_hat.transpose());
}

#[test]
fn lyddon_three_row_hand_computation() {
    // p = 1, x = (1, 2, 3), y = (1, 1, 4): β̂ = 15/14, residuals r = (−1/14, −16/14, 11/14)
    let d = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], vec![1.0, 1.0, 4.0]).unwrap();
    let x = [1.0, 2.0, 3.0];
    let r = [-1.0 / 14.0, -16.0 / 14.0, 11.0 / 14.0];
    let s2 = r.iter().map(|v| v * v).sum::<f64>() / 3.0;
    // per-row score (x r / s², (r² − s²) / (2 s⁴)); J = −mean Hessian
    let mut lam = [[0.0; 2]; 2];
    for i in 0..3 {
        let g = [x[i] * r[i] / s2, (r[i] * r[i] - s2) / (2.0 * s2 * s2)];
        for a in 0..2 {
            for b in 0..2 {
                lam[a][b] += g[a] * g[b] / 3.0;
            }
        }
    }
    let j = [14.0 / 3.0 / s2, 1.0 / (2.0 * s2 * s2)]; // off-diagonal vanishes at the MLE
    let det = lam[0][0] * lam[1][1] - lam[0][1] * lam[0][1];
    let inv = [
        [lam[1][1] / det, -lam[0][1] / det],
        [-lam[0][1] / det, lam[0][0] / det],
    ];
    let num = j[0] * j[0] * inv[0][0] + j[1] * j[1] * inv[1][1];
    let expect = num / (j[0] + j[1]);
    let cfg = LyddonConfig {
        bounds: EtaBounds {
            min: 1e-6,
            max: 1e6,
        },
        ..LyddonConfig::default()
    };
    let got = lyddon_select(&LinearRegressionModel::default(), &d, &cfg)
        .unwrap()
        .eta_hat;
    assert!((got - expect).abs() < 1e-9 * expect, "{got} vs {expect}");
}

#[test]
fn lyddon_scale_equivariance() {
    let y = vec![0.3, -1.1, 2.4, 0.8, -0.2, 1.7];
    let m = GaussianLocationModel::flat(1.0).unwrap();
    let cfg = LyddonConfig {
        bounds: EtaBounds {
            min: 1e-6,
            max: 1e6,
        },
        ..LyddonConfig::default()
    };
    let base = lyddon_select(&m, &Dataset::response_only(y.clone()).unwrap(), &cfg)
        .unwrap()
        .eta_hat;
    for c in [0.5, 3.0] {
        let scaled = Dataset::response_only(y.iter().map(|v| v * c).collect()).unwrap();
        let eta = lyddon_select(&m, &scaled, &cfg).unwrap().eta_hat;
        assert!((eta * c * c - base).abs() < 1e-12 * base);
    }
}

#[test]
fn holmes_walker_duplication_with_prior_draws() {
    let d = DependentErrorsDgp::degree(2)
        .unwrap()
        .generate(40, &RandomStream::new(9))
        .unwrap();
    let m = LinearRegressionModel::default();
    let cfg = HolmesWalkerConfig::default();
    let s = RandomStream::new(10);
    let a = holmes_walker_select(&m, &d, &cfg, &s).unwrap().eta_hat;
    let b = holmes_walker_select(&m, &d.duplicated(), &cfg, &s)
        .unwrap()
        .eta_hat;
    assert!((a - b).abs() < 1e-10 * a);
}

#[test]
fn selectors_reproducible_and_bounded() {
    let d = DependentErrorsDgp::degree(1)
        .unwrap()
        .generate(60, &RandomStream::new(12))
        .unwrap();
    let m = LinearRegressionModel::default();
    let s = RandomStream::new(13);
    let builder = RegionBuilder::new(Target::Leading(4), 0.95);
    let cfg = GpcConfig::default();
    let runs = [
        gpc_select(&m, &d, &builder, &cfg, &s).unwrap().eta_hat,
        safebayes_select(&m, &d, &default_grid(), &s)
            .unwrap()
            .eta_hat,
        holmes_walker_select(&m, &d, &HolmesWalkerConfig::default(), &s)
            .unwrap()
            .eta_hat,
    ];
    let again = [
        gpc_select(&m, &d, &builder, &cfg, &s).unwrap().eta_hat,
        safebayes_select(&m, &d, &default_grid(), &s)
            .unwrap()
            .eta_hat,
        holmes_walker_select(&m, &d, &HolmesWalkerConfig::default(), &s)
            .unwrap()
            .eta_hat,
    ];
    assert_eq!(runs.map(f64::to_bits), again.map(f64::to_bits));
    assert!(runs.iter().all(|&e| (0.01..=5.0).contains(&e)));
}

#[test]
fn gpc_fixed_point_at_nominal_coverage() {
    let cfg = GpcConfig::default();
    for t in [0, 3, 17] {
        assert_eq!(sa_update(0.8, 1.0 - cfg.alpha, t, &cfg), (0.8, false));
    }
}

#[test]
fn gpc_recovers_toy_learning_rate() {
    let dgp = ToyDgp::with_eta_star(0.25, 1.0, 0.0).unwrap();
    let m = GaussianLocationModel::flat(1.0).unwrap();
    let builder = RegionBuilder::new(Target::Full, 0.95);
    let reps = 10;
    let mean = (0..reps)
        .map(|r| {
            let s = RandomStream::with_path(77, &[r]);
            let d = dgp.generate(800, &s.child(0)).unwrap();
            gpc_select(&m, &d, &builder, &GpcConfig::default(), &s.child(1))
                .unwrap()
                .eta_hat
        })
        .sum::<f64>()
        / reps as f64;
    assert!((mean - 0.25).abs() < 0.1, "mean η̂ {mean}");
}

#[test]
fn safebayes_prefers_small_eta_under_overdispersion() {
    // data sd 3 against model sd 1 with a vague prior
    let mut rng = RandomStream::new(31).rng();
    let y: Vec<f64> = (0..400)
        .map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let d = Dataset::response_only(y).unwrap();
    let m = GaussianLocationModel::new(1.0, 0.0, 100.0).unwrap();
    let r = safebayes_select(&m, &d, &default_grid(), &RandomStream::new(0)).unwrap();
    assert!(r.eta_hat <= 1.0);
    assert_eq!(r.trace.len(), default_grid().len());
}
