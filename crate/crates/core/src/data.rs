use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Covariate matrix plus response vector.
///
/// `x` is `n × p`; `p = 0` is allowed for covariate-free models, in which
/// case `x` still carries `n` (empty) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::InvalidData(format!(
                "x has {} rows but y has length {}",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Self { x, y })
    }

    /// Dataset without covariates.
    pub fn response_only(y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        Self::new(DMatrix::zeros(n, 0), DVector::from_vec(y))
    }

    /// Builds a dataset from row-major covariates.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidData("ragged covariate rows".into()));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(x, DVector::from_vec(y))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Covariate row `i` as an owned vector.
    pub fn x_row(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }

    /// Rows in the given order; indices may repeat (bootstrap resamples).
    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(idx.len(), self.p(), |i, j| self.x[(idx[i], j)]);
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        Dataset { x, y }
    }

    /// The first `k` rows.
    pub fn prefix(&self, k: usize) -> Dataset {
        let k = k.min(self.n());
        Dataset {
            x: self.x.rows(0, k).into_owned(),
            y: self.y.rows(0, k).into_owned(),
        }
    }

    /// Two stacked copies of this dataset.
    pub fn duplicated(&self) -> Dataset {
        let idx: Vec<usize> = (0..self.n()).chain(0..self.n()).collect();
        self.select_rows(&idx)
    }
}

/// Model parameter θ. Its length and constraints are owned by the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(DVector<f64>);

impl ParamVector {
    pub fn new(theta: DVector<f64>) -> Self {
        Self(theta)
    }

    pub fn from_slice(theta: &[f64]) -> Self {
        Self(DVector::from_column_slice(theta))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<DVector<f64>> for ParamVector {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_lengths() {
        let x = DMatrix::zeros(3, 2);
        let y = DVector::zeros(2);
        assert!(matches!(Dataset::new(x, y), Err(Error::InvalidData(_))));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Dataset::response_only(vec![1.0, f64::NAN]).is_err());
        assert!(Dataset::from_rows(&[vec![f64::INFINITY]], vec![0.0]).is_err());
    }

    #[test]
    fn covariate_free_dataset_keeps_rows() {
        let d = Dataset::response_only(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.p(), 0);
        assert_eq!(d.x().nrows(), 3);
    }

    #[test]
    fn select_and_prefix() {
        let d =
            Dataset::from_rows(&[vec![1.0], vec![2.0], vec![3.0]], vec![10.0, 20.0, 30.0]).unwrap();
        let s = d.select_rows(&[2, 2, 0]);
        assert_eq!(s.y().as_slice(), &[30.0, 30.0, 10.0]);
        assert_eq!(s.x()[(1, 0)], 3.0);
        let p = d.prefix(2);
        assert_eq!(p.n(), 2);
        assert_eq!(p.y()[1], 20.0);
        assert_eq!(d.duplicated().n(), 6);
    }
}
