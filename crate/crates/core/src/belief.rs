use nalgebra::{DMatrix, DVector};

use crate::linalg::symmetrize;
use crate::Scalar;

/// Mean and covariance of a Gaussian state density.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief<T: Scalar> {
    pub mean: DVector<T>,
    pub cov: DMatrix<T>,
}

impl<T: Scalar> GaussianBelief<T> {
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Self {
        Self { mean, cov }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub(crate) fn symmetrized(mut self) -> Self {
        symmetrize(&mut self.cov);
        self
    }
}
