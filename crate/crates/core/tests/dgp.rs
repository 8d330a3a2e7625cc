use gbcal_core::dgp::{DependentErrorsDgp, MixtureLogisticDgp, TErrorsDgp, ToyDgp};
use gbcal_core::models::{LinearRegressionModel, LogisticMcidModel};
use gbcal_core::{Model, RandomStream};

const N: usize = 100_000;

#[test]
fn dependent_errors_bands_and_ols() {
    let dgp = DependentErrorsDgp::degree(2).unwrap();
    let d = dgp.generate(N, &RandomStream::new(11)).unwrap();
    let x1: Vec<f64> = (0..N).map(|i| d.x()[(i, 0)]).collect();
    let (lo, hi) = DependentErrorsDgp::thresholds(&x1);
    let k = N / 20;
    assert_eq!(x1.iter().filter(|&&v| v < lo).count(), k);
    assert_eq!(x1.iter().filter(|&&v| v > hi).count(), k);

    let mut bands = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..N {
        let r = d.y()[i] - (0..4).map(|j| d.x()[(i, j)] * dgp.beta[j]).sum::<f64>();
        let b = if x1[i] < lo {
            0
        } else if x1[i] <= hi {
            1
        } else {
            2
        };
        bands[b].push(r);
    }
    for (band, s) in bands.iter().zip([dgp.s_small, dgp.s_mod, 1.0]) {
        let m = band.len() as f64;
        let sd = (band.iter().map(|r| r * r).sum::<f64>() / m).sqrt();
        // sd of the sample sd is about s/sqrt(2m)
        assert!(
            (sd - s).abs() < 3.0 * s / (2.0 * m).sqrt(),
            "band sd {sd} vs {s}"
        );
    }

    let fit = LinearRegressionModel::default().mle(&d).unwrap();
    for j in 0..4 {
        assert!((fit[j] - dgp.beta[j]).abs() < 0.01, "β{j} = {}", fit[j]);
    }

    let (c1, c3): (Vec<f64>, Vec<f64>) = (0..N).map(|i| (d.x()[(i, 0)], d.x()[(i, 2)])).unzip();
    let corr = c1.iter().zip(&c3).map(|(a, b)| a * b).sum::<f64>() / N as f64;
    assert!((corr - 0.04).abs() < 0.01, "corr {corr}");
}

#[test]
fn homoscedastic_when_scales_are_one() {
    let dgp = DependentErrorsDgp {
        s_small: 1.0,
        s_mod: 1.0,
        ..DependentErrorsDgp::degree(1).unwrap()
    };
    let d = dgp.generate(20_000, &RandomStream::new(2)).unwrap();
    let rss: f64 = (0..d.n())
        .map(|i| (d.y()[i] - (0..4).map(|j| d.x()[(i, j)] * dgp.beta[j]).sum::<f64>()).powi(2))
        .sum();
    let sd = (rss / d.n() as f64).sqrt();
    assert!((sd - 1.0).abs() < 3.0 / (2.0 * d.n() as f64).sqrt());
}

#[test]
fn t_errors_variance() {
    let d = TErrorsDgp::degree(1)
        .unwrap()
        .generate(N, &RandomStream::new(5))
        .unwrap();
    let fit = LinearRegressionModel::default().mle(&d).unwrap();
    // ν = 5 gives variance 5/3
    assert!((fit[4] - 5.0 / 3.0).abs() < 0.06, "σ̂² = {}", fit[4]);
}

#[test]
fn mixture_response_rate_matches_quadrature() {
    let dgp = MixtureLogisticDgp::degree(3).unwrap();
    let d = dgp.generate(N, &RandomStream::new(8)).unwrap();
    let rate = d.y().iter().filter(|&&y| y > 0.0).count() as f64 / N as f64;
    let (lo, hi, m) = (-10.0, 25.0, 20_000);
    let h = (hi - lo) / m as f64;
    let expect: f64 = (0..m)
        .map(|k| {
            let x = lo + (k as f64 + 0.5) * h;
            dgp.f_star(x) * dgp.density(x) * h
        })
        .sum();
    let se = (expect * (1.0 - expect) / N as f64).sqrt();
    assert!((rate - expect).abs() < 3.0 * se, "{rate} vs {expect}");
}

#[test]
fn mcid_roots() {
    for deg in 1..=3 {
        let dgp = MixtureLogisticDgp::degree(deg).unwrap();
        let r = dgp.mcid().unwrap();
        assert!((dgp.f_star(r) - 0.5).abs() < 1e-9);
    }
}

#[test]
fn projection_matches_large_sample_fit() {
    let dgp = MixtureLogisticDgp::degree(2).unwrap();
    let d = dgp.generate(200_000, &RandomStream::new(21)).unwrap();
    let fit = LogisticMcidModel::default().mle(&d).unwrap();
    let (b0, b1) = dgp.logistic_projection().unwrap();
    assert!(
        (fit[0] - b0).abs() < 0.1 && (fit[1] - b1).abs() < 0.02,
        "{fit:?} vs ({b0}, {b1})"
    );
    let ratio = dgp.projection_ratio().unwrap();
    assert!((-fit[0] / fit[1] - ratio).abs() < 0.02);
    assert!(ratio > dgp.mcid().unwrap());
}

#[test]
fn generation_is_deterministic_per_stream() {
    let toy = ToyDgp::with_eta_star(0.4, 1.0, 0.0).unwrap();
    let s = RandomStream::with_path(3, &[1, 2]);
    assert_eq!(toy.generate(50, &s).unwrap(), toy.generate(50, &s).unwrap());
    assert_ne!(
        toy.generate(50, &s).unwrap(),
        toy.generate(50, &s.child(0)).unwrap()
    );
}
