//! Gaussian moment integrals by the unscented transform.
//!
//! Every estimator in the crate reduces its Gaussian integrals to
//! [`propagate`]: mean, covariance and state cross-covariance of a mapped
//! point set. Process/measurement noise is added by the caller.

use nalgebra::{DMatrix, DVector};

use crate::belief::GaussianBelief;
use crate::linalg::{all_finite, repaired_cholesky, symmetrize};
use crate::{lit, Error, Result, Scalar};

/// Spread and weighting parameters of the unscented transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtParams<T: Scalar> {
    pub alpha: T,
    pub beta: T,
    pub kappa: T,
}

impl<T: Scalar> Default for UtParams<T> {
    /// `α = 1`, `β = 2`, `κ = 0`.
    fn default() -> Self {
        Self {
            alpha: T::one(),
            beta: lit(2.0),
            kappa: T::zero(),
        }
    }
}

impl<T: Scalar> UtParams<T> {
    /// Scaling `λ = α²(n+κ) − n`.
    pub fn lambda(&self, n: usize) -> T {
        let n = lit::<T>(n as f64);
        self.alpha * self.alpha * (n + self.kappa) - n
    }

    /// Mean and covariance weights for a state of dimension `n`.
    pub fn weights(&self, n: usize) -> Result<(Vec<T>, Vec<T>)> {
        let lambda = self.lambda(n);
        let denom = lit::<T>(n as f64) + lambda;
        if denom == T::zero() || !denom.is_finite() {
            return Err(Error::InvalidParameter("UT scaling gives n + λ = 0".into()));
        }
        let w = lit::<T>(0.5) / denom;
        let mut wm = vec![w; 2 * n + 1];
        let mut wc = wm.clone();
        wm[0] = lambda / denom;
        wc[0] = lambda / denom + (T::one() - self.alpha * self.alpha + self.beta);
        Ok((wm, wc))
    }
}

/// A weighted point set representing a Gaussian.
#[derive(Debug, Clone)]
pub struct SigmaSet<T: Scalar> {
    /// Centre of the set, i.e. the Gaussian mean.
    pub center: DVector<T>,
    pub points: Vec<DVector<T>>,
    pub w_mean: Vec<T>,
    pub w_cov: Vec<T>,
}

/// Any deterministic point/weight rule for Gaussian integrals.
pub trait Quadrature<T: Scalar>: Sync {
    fn sigma_set(&self, belief: &GaussianBelief<T>) -> Result<SigmaSet<T>>;
}

impl<T: Scalar> Quadrature<T> for UtParams<T> {
    fn sigma_set(&self, belief: &GaussianBelief<T>) -> Result<SigmaSet<T>> {
        make_sigma(belief, self)
    }
}

/// Standard `2n+1` unscented point set, using a lower Cholesky factor of `P`.
pub fn make_sigma<T: Scalar>(belief: &GaussianBelief<T>, params: &UtParams<T>) -> Result<SigmaSet<T>> {
    let n = belief.dim();
    if !all_finite(&belief.mean) {
        return Err(Error::NonFiniteState);
    }
    let (w_mean, w_cov) = params.weights(n)?;
    let chol = repaired_cholesky(&belief.cov)?;
    let scale = (lit::<T>(n as f64) + params.lambda(n)).sqrt();
    let l = chol.l() * scale;
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(belief.mean.clone());
    for i in 0..n {
        points.push(&belief.mean + l.column(i));
    }
    for i in 0..n {
        points.push(&belief.mean - l.column(i));
    }
    Ok(SigmaSet {
        center: belief.mean.clone(),
        points,
        w_mean,
        w_cov,
    })
}

/// Moments of `g(x)` under the Gaussian represented by a sigma set.
#[derive(Debug, Clone)]
pub struct Moments<T: Scalar> {
    /// `E[g(x)]`
    pub mean: DVector<T>,
    /// `Cov[g(x)]`, symmetrized, without any additive noise.
    pub cov: DMatrix<T>,
    /// `Cov[x, g(x)]`
    pub cross: DMatrix<T>,
}

/// Pushes a sigma set through `g` and returns `(μ, S, C)`.
pub fn propagate<T, G>(sigma: &SigmaSet<T>, g: G) -> Result<Moments<T>>
where
    T: Scalar,
    G: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    let count = sigma.points.len();
    let n = sigma.center.len();
    let mut mapped: Option<DMatrix<T>> = None;
    for (i, pt) in sigma.points.iter().enumerate() {
        let out = g(pt)?;
        if !all_finite(&out) {
            return Err(Error::NonFiniteSigmaPoint { index: i });
        }
        let mat = mapped.get_or_insert_with(|| DMatrix::zeros(out.len(), count));
        if out.len() != mat.nrows() {
            return Err(Error::Dimension("mapped points differ in length".into()));
        }
        mat.set_column(i, &out);
    }
    let mut mapped = mapped.ok_or(Error::Empty("sigma set"))?;
    let p = mapped.nrows();

    let mut mean = DVector::zeros(p);
    for (i, w) in sigma.w_mean.iter().enumerate() {
        mean.axpy(*w, &mapped.column(i), T::one());
    }
    let mut state_dev = DMatrix::zeros(n, count);
    for i in 0..count {
        let mut c = mapped.column_mut(i);
        c -= &mean;
        state_dev.set_column(i, &(&sigma.points[i] - &sigma.center));
    }
    let mut weighted = mapped.clone();
    for (i, w) in sigma.w_cov.iter().enumerate() {
        weighted.column_mut(i).scale_mut(*w);
    }
    let mut cov = &weighted * mapped.transpose();
    symmetrize(&mut cov);
    let cross = state_dev * weighted.transpose();
    Ok(Moments { mean, cov, cross })
}

/// `W = E[(y − h(x))(y − h(x))ᵀ] = (y − μ)(y − μ)ᵀ + U` under `belief`.
pub fn expected_outer_residual<T, H, Q>(
    belief: &GaussianBelief<T>,
    y: &DVector<T>,
    h: H,
    rule: &Q,
) -> Result<DMatrix<T>>
where
    T: Scalar,
    H: Fn(&DVector<T>) -> Result<DVector<T>>,
    Q: Quadrature<T> + ?Sized,
{
    let sigma = rule.sigma_set(belief)?;
    let mom = propagate(&sigma, h)?;
    Ok(outer_residual_from_moments(y, &mom))
}

pub(crate) fn outer_residual_from_moments<T: Scalar>(y: &DVector<T>, mom: &Moments<T>) -> DMatrix<T> {
    let r = y - &mom.mean;
    let mut w = &r * r.transpose() + &mom.cov;
    symmetrize(&mut w);
    w
}
