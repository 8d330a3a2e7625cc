//! R-SafeBayes: the grid minimizer of the cumulative sequential predictive
//! loss `Σᵢ ∫ −log p_θ(Yᵢ | Xᵢ) dΠ_{i−1}^{(η)}`.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lrate::{Diagnostics, LearningRateResult, Method, TracePoint};
use crate::model::Model;
use crate::stream::RandomStream;

/// `{0.05, 0.10, …, 1.00}`.
pub fn default_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

/// Rows are processed in their stored order. Every grid point uses the same
/// `stream`, so Monte Carlo terms share random numbers across η.
pub fn safebayes_select<M: Model + ?Sized>(
    model: &M,
    data: &Dataset,
    grid: &[f64],
    stream: &RandomStream,
) -> Result<LearningRateResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty SafeBayes grid".into()));
    }
    if let Some(bad) = grid.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidConfig(format!(
            "SafeBayes grid point {bad} outside (0, 1]"
        )));
    }
    let mut trace = Vec::with_capacity(grid.len());
    let mut diagnostics = Diagnostics::default();
    let mut best: Option<TracePoint> = None;
    for &eta in grid {
        let objective = match model.sequential_terms(data, eta, stream) {
            Ok(terms) => terms.into_iter().flatten().sum::<f64>(),
            Err(Error::Numerical(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        trace.push(TracePoint {
            eta,
            value: objective,
        });
        if !objective.is_finite() {
            diagnostics.excluded.push(eta);
            continue;
        }
        if best.is_none_or(|b| objective < b.value) {
            best = Some(TracePoint {
                eta,
                value: objective,
            });
        }
    }
    let best = best.ok_or_else(|| {
        Error::Numerical("SafeBayes objective non-finite on the whole grid".into())
    })?;
    Ok(LearningRateResult {
        eta_hat: best.eta,
        method: Method::SafeBayes,
        trace,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GaussianLocationModel;

    #[test]
    fn single_point_grid() {
        let d = Dataset::response_only(vec![0.1, 0.5, -0.3]).unwrap();
        let m = GaussianLocationModel::new(1.0, 0.0, 10.0).unwrap();
        let r = safebayes_select(&m, &d, &[0.5], &RandomStream::new(0)).unwrap();
        assert_eq!(r.eta_hat, 0.5);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn rejects_out_of_range_grid() {
        let d = Dataset::response_only(vec![0.1, 0.5]).unwrap();
        let m = GaussianLocationModel::flat(1.0).unwrap();
        assert!(safebayes_select(&m, &d, &[0.5, 1.5], &RandomStream::new(0)).is_err());
        assert!(safebayes_select(&m, &d, &[], &RandomStream::new(0)).is_err());
    }
}
