//! Piecewise-constant densities on a bounded interval.

use rand::Rng;

use crate::error::{Error, Result};

/// Density that is constant on each cell `[breaks[k], breaks[k+1])`.
///
/// `weights[k]` is the probability of cell `k`; zero-width cells must carry
/// zero weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breaks: Vec<f64>,
    weights: Vec<f64>,
    cdf: Vec<f64>,
}

impl PiecewiseConstant {
    /// Builds the density from unnormalized log cell weights. Cells with
    /// non-positive width are assigned zero mass.
    pub fn from_log_weights(breaks: Vec<f64>, log_weights: &[f64]) -> Result<Self> {
        if breaks.len() < 2 || log_weights.len() + 1 != breaks.len() {
            return Err(Error::InvalidParameter(
                "need k+1 breaks for k cells".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter(
                "breaks must be non-decreasing".into(),
            ));
        }
        let max = breaks
            .windows(2)
            .zip(log_weights)
            .filter(|(w, _)| w[1] > w[0])
            .map(|(_, &lw)| lw)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::ImproperPosterior(
                "no cell with positive width and mass".into(),
            ));
        }
        let mut weights: Vec<f64> = breaks
            .windows(2)
            .zip(log_weights)
            .map(|(w, &lw)| if w[1] > w[0] { (lw - max).exp() } else { 0.0 })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(breaks, weights)
    }

    /// Builds the density from normalized cell probabilities.
    pub fn new(breaks: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if breaks.len() != weights.len() + 1 || weights.is_empty() {
            return Err(Error::InvalidParameter(
                "need k+1 breaks for k cells".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "cell weights sum to {total}"
            )));
        }
        if breaks
            .windows(2)
            .zip(&weights)
            .any(|(b, &w)| w > 0.0 && b[1] <= b[0])
        {
            return Err(Error::InvalidParameter(
                "zero-width cell with positive mass".into(),
            ));
        }
        let mut cdf = Vec::with_capacity(breaks.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cdf.push(acc);
        }
        Ok(Self {
            breaks,
            weights,
            cdf,
        })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breaks[0], *self.breaks.last().unwrap())
    }

    fn density_in(&self, k: usize) -> f64 {
        let width = self.breaks[k + 1] - self.breaks[k];
        if width > 0.0 {
            self.weights[k] / width
        } else {
            0.0
        }
    }

    /// Index of the cell containing `t` (clamped to the support).
    fn cell_of(&self, t: f64) -> usize {
        let k = self.breaks.partition_point(|&b| b <= t);
        k.saturating_sub(1).min(self.weights.len() - 1)
    }

    pub fn density(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t < lo || t > hi {
            return 0.0;
        }
        self.density_in(self.cell_of(t))
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let (lo, hi) = self.support();
        if t <= lo {
            return 0.0;
        }
        if t >= hi {
            return 1.0;
        }
        let k = self.cell_of(t);
        (self.cdf[k] + (t - self.breaks[k]) * self.density_in(k)).min(1.0)
    }

    /// Smallest `t` with `cdf(t) >= p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let n = self.weights.len();
        // first cell whose upper cdf value reaches p and that carries mass
        let mut k = self.cdf[1..].partition_point(|&c| c < p).min(n - 1);
        while k < n - 1 && self.weights[k] == 0.0 {
            k += 1;
        }
        let dens = self.density_in(k);
        if dens == 0.0 {
            return self.breaks[k];
        }
        (self.breaks[k] + (p - self.cdf[k]) / dens).clamp(self.breaks[k], self.breaks[k + 1])
    }

    pub fn mean(&self) -> f64 {
        self.breaks
            .windows(2)
            .zip(&self.weights)
            .map(|(b, w)| w * 0.5 * (b[0] + b[1]))
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let second: f64 = self
            .breaks
            .windows(2)
            .zip(&self.weights)
            .map(|(b, w)| w * (b[0] * b[0] + b[0] * b[1] + b[1] * b[1]) / 3.0)
            .sum();
        (second - m * m).max(0.0)
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }

    /// Shortest interval `[a, b]` with `cdf(b) − cdf(a) = level`.
    ///
    /// The window length is piecewise linear in its left end, so the
    /// optimum has one end on a break point; both families are scanned.
    pub fn shortest_interval(&self, level: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, self.support());
        let eps = 1e-12;
        for &a in &self.breaks {
            let fa = self.cdf(a);
            if fa + level > 1.0 + eps {
                break;
            }
            let b = self.quantile((fa + level).min(1.0));
            if b - a < best.0 {
                best = (b - a, (a, b));
            }
        }
        for &b in &self.breaks {
            let fb = self.cdf(b);
            if fb + eps < level {
                continue;
            }
            let a = self.quantile((fb - level).max(0.0));
            if b - a < best.0 {
                best = (b - a, (a, b));
            }
        }
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cells() -> PiecewiseConstant {
        // density 0.25 on [0,2), 0.5 on [2,3)
        PiecewiseConstant::new(vec![0.0, 2.0, 3.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn cdf_and_quantile_agree() {
        let pc = two_cells();
        assert_eq!(pc.cdf(1.0), 0.25);
        assert_eq!(pc.cdf(2.5), 0.75);
        for p in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
            assert!((pc.cdf(pc.quantile(p)) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn moments() {
        let pc = two_cells();
        assert!((pc.mean() - (0.5 * 1.0 + 0.5 * 2.5)).abs() < 1e-12);
        // E[X^2] = 0.5 * 4/3 + 0.5 * (4 + 6 + 9)/3
        let second = 0.5 * 4.0 / 3.0 + 0.5 * 19.0 / 3.0;
        assert!((pc.variance() - (second - 1.75f64.powi(2))).abs() < 1e-12);
    }

    #[test]
    fn shortest_interval_prefers_dense_cell() {
        let pc = two_cells();
        let (a, b) = pc.shortest_interval(0.5);
        assert!(
            (a - 2.0).abs() < 1e-12 && (b - 3.0).abs() < 1e-12,
            "{a} {b}"
        );
        let (a, b) = pc.shortest_interval(0.75);
        assert!((b - a - 2.0).abs() < 1e-12, "{a} {b}");
        assert!((pc.cdf(b) - pc.cdf(a) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn uniform_interval_length() {
        let pc =
            PiecewiseConstant::from_log_weights(vec![1.0, 2.0, 4.0], &[0.0, 2f64.ln()]).unwrap();
        let (a, b) = pc.shortest_interval(0.95);
        assert!((b - a - 0.95 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_width_cells_carry_no_mass() {
        let pc = PiecewiseConstant::from_log_weights(vec![0.0, 1.0, 1.0, 2.0], &[0.0, 50.0, 0.0])
            .unwrap();
        assert_eq!(pc.weights()[1], 0.0);
        assert!((pc.cdf(1.0) - 0.5).abs() < 1e-12);
        assert!((pc.quantile(0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(PiecewiseConstant::new(vec![0.0, 1.0], vec![0.9]).is_err());
    }
}
