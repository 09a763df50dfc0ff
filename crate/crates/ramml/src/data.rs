//! Regression dataset container.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Response vector plus predictor matrix for the linear model
/// `y_i = beta0 + x_i' beta + e_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    y: Vec<f64>,
    x: Matrix,
}

impl RegressionData {
    /// Requires `n > m + 1` and finite responses.
    pub fn new(y: Vec<f64>, x: Matrix) -> Result<Self> {
        if y.len() != x.rows() {
            return Err(Error::DimensionMismatch(format!(
                "y has {} entries, X has {} rows",
                y.len(),
                x.rows()
            )));
        }
        if y.len() <= x.cols() + 1 {
            return Err(Error::TooFewObservations {
                n: y.len(),
                m: x.cols(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response entry".into()));
        }
        Ok(Self { y, x })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.x.cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    /// Design matrix `[1 | X]` with a leading intercept column.
    pub fn design_with_intercept(&self) -> Matrix {
        let (n, m) = (self.n(), self.m());
        let mut data = Vec::with_capacity(n * (m + 1));
        for i in 0..n {
            data.push(1.0);
            data.extend_from_slice(self.x.row(i));
        }
        Matrix::new(n, m + 1, data).expect("finite design")
    }

    /// Residuals `y_i - intercept - x_i' coefficients`.
    pub fn residuals(&self, intercept: f64, coefficients: &[f64]) -> Vec<f64> {
        assert_eq!(coefficients.len(), self.m());
        (0..self.n())
            .map(|i| self.y[i] - intercept - crate::numerics::dot(self.x.row(i), coefficients))
            .collect()
    }

    /// Fitted values `intercept + x_i' coefficients`.
    pub fn predict(&self, intercept: f64, coefficients: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| intercept + crate::numerics::dot(self.x.row(i), coefficients))
            .collect()
    }
}
