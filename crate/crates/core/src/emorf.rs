//! EM-based outlier-robust filter.
//!
//! Each time step predicts once, then alternates
//!
//! 1. a Gaussian update with the masked covariance `R(Î)` (E-step), and
//! 2. a coordinate sweep over the indicators using `W` from that posterior (M-step),
//!
//! until the relative change of the posterior mean falls below `tol`.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::belief::GaussianBelief;
use crate::linalg::{spd_solve, symmetrize};
use crate::outlier::{masked_cov, sweep_indicators, IndicatorVector, OutlierPrior, SweepOrder};
use crate::sigma::{outer_residual_from_moments, propagate, Moments, Quadrature};
use crate::ssm::{NoiseSpec, StateSpaceModel};
use crate::{lit, Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig<T: Scalar> {
    pub epsilon: T,
    /// Prior probability of a clean dimension, shared by all dimensions.
    pub theta: T,
    /// Threshold on `‖m_t − m_{t−1}‖ / ‖m_{t−1}‖` between EM iterations.
    pub tol: T,
    pub max_iter: usize,
    pub order: SweepOrder,
}

impl<T: Scalar> Default for EmConfig<T> {
    fn default() -> Self {
        Self {
            epsilon: lit(1e-6),
            theta: lit(0.5),
            tol: lit(1e-4),
            max_iter: 50,
            order: SweepOrder::Ascending,
        }
    }
}

impl<T: Scalar> EmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > T::zero() && self.epsilon < T::one()) {
            return Err(Error::InvalidParameter("epsilon must lie in (0, 1)".into()));
        }
        if !(self.theta > T::zero() && self.theta < T::one()) {
            return Err(Error::InvalidParameter("theta must lie in (0, 1)".into()));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    pub fn prior(&self, m: usize) -> Result<OutlierPrior<T>> {
        OutlierPrior::uniform(m, self.theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStepResult<T: Scalar> {
    pub posterior: GaussianBelief<T>,
    pub indicators: IndicatorVector<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// `(m⁻, P⁻)`: unscented moments of `f` plus `Q`.
pub fn predict<T, M, Q>(
    prev: &GaussianBelief<T>,
    model: &M,
    q: &DMatrix<T>,
    rule: &Q,
) -> Result<GaussianBelief<T>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    let sigma = rule.sigma_set(prev)?;
    let mom = propagate(&sigma, |x| model.transition(x))?;
    Ok(GaussianBelief::new(mom.mean, mom.cov + q).symmetrized())
}

/// `(μ, U, C)` of the measurement map under the predicted belief.
pub fn measurement_moments<T, M, Q>(pred: &GaussianBelief<T>, model: &M, rule: &Q) -> Result<Moments<T>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    let sigma = rule.sigma_set(pred)?;
    propagate(&sigma, |x| model.measurement(x))
}

/// Gaussian update from precomputed measurement moments.
///
/// `K` solves `(U + R_eff) Kᵀ = Cᵀ`; `m⁺ = m⁻ + K(y − μ)`, `P⁺ = P⁻ − C Kᵀ`.
pub fn update_with_moments<T: Scalar>(
    pred: &GaussianBelief<T>,
    y: &DVector<T>,
    mom: &Moments<T>,
    r_eff: &DMatrix<T>,
) -> Result<GaussianBelief<T>> {
    if y.len() != mom.mean.len() || r_eff.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "measurement has {} entries, model predicts {}, R has {} rows",
            y.len(),
            mom.mean.len(),
            r_eff.nrows()
        )));
    }
    let innov = &mom.cov + r_eff;
    let gain_t = spd_solve(&innov, &mom.cross.transpose()).ok_or(Error::SingularInnovation)?;
    let mean = &pred.mean + gain_t.tr_mul(&(y - &mom.mean));
    let mut cov = &pred.cov - &mom.cross * &gain_t;
    symmetrize(&mut cov);
    Ok(GaussianBelief::new(mean, cov))
}

/// Standard Gaussian measurement update with effective covariance `r_eff`.
pub fn gaussian_update<T, M, Q>(
    pred: &GaussianBelief<T>,
    y: &DVector<T>,
    model: &M,
    r_eff: &DMatrix<T>,
    rule: &Q,
) -> Result<GaussianBelief<T>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    let mom = measurement_moments(pred, model, rule)?;
    update_with_moments(pred, y, &mom, r_eff)
}

/// One step of the plain unscented filter (no outlier handling).
pub fn unscented_step<T, M, Q>(
    prev: &GaussianBelief<T>,
    y: &DVector<T>,
    model: &M,
    noise: &NoiseSpec<T>,
    rule: &Q,
) -> Result<GaussianBelief<T>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    let pred = predict(prev, model, &noise.q, rule)?;
    gaussian_update(&pred, y, model, &noise.r, rule)
}

pub(crate) fn relative_change<T: Scalar>(new: &DVector<T>, old: &DVector<T>) -> T {
    let diff = (new - old).norm();
    let base = old.norm();
    if base > T::zero() {
        diff / base
    } else if diff == T::zero() {
        T::zero()
    } else {
        T::max_value().unwrap_or(diff)
    }
}

/// EM iterations for one measurement, given the prediction.
pub fn emorf_update<T, M, Q>(
    pred: &GaussianBelief<T>,
    y: &DVector<T>,
    model: &M,
    r: &DMatrix<T>,
    cfg: &EmConfig<T>,
    rule: &Q,
) -> Result<FilterStepResult<T>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    let m = y.len();
    if r.nrows() != m || r.ncols() != m {
        return Err(Error::Dimension(format!("measurement of length {m} with {}×{} R", r.nrows(), r.ncols())));
    }
    let prior = cfg.prior(m)?;
    // μ, U, C depend only on the prediction, not on the indicators
    let mom = measurement_moments(pred, model, rule)?;
    let mut indicators = IndicatorVector::all_clean(m, cfg.epsilon)?;
    let mut last_mean: Option<DVector<T>> = None;
    let mut result = None;
    for iteration in 1..=cfg.max_iter {
        let step = || -> Result<(GaussianBelief<T>, IndicatorVector<T>)> {
            let r_eff = masked_cov(r, &indicators);
            let post = update_with_moments(pred, y, &mom, &r_eff)?;
            let sigma = rule.sigma_set(&post)?;
            let w = outer_residual_from_moments(y, &propagate(&sigma, |x| model.measurement(x))?);
            let next = sweep_indicators(&w, r, &indicators, &prior, &cfg.order)?;
            Ok((post, next))
        };
        let (post, next) = step().map_err(|e| e.at_iteration(iteration))?;
        let converged = last_mean
            .as_ref()
            .is_some_and(|prev| relative_change(&post.mean, prev) < cfg.tol);
        last_mean = Some(post.mean.clone());
        indicators = next;
        result = Some(FilterStepResult {
            posterior: post,
            indicators: indicators.clone(),
            iterations: iteration,
            converged,
        });
        if converged {
            break;
        }
    }
    Ok(result.expect("max_iter >= 1"))
}

/// Predict, then run the EM loop on `y`.
pub fn emorf_step<T, M, Q>(
    prev: &GaussianBelief<T>,
    y: &DVector<T>,
    model: &M,
    noise: &NoiseSpec<T>,
    cfg: &EmConfig<T>,
    rule: &Q,
) -> Result<FilterStepResult<T>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    cfg.validate()?;
    let pred = predict(prev, model, &noise.q, rule)?;
    emorf_update(&pred, y, model, &noise.r, cfg, rule)
}

/// Output of [`run_filter`]. On failure `steps` holds everything before the failing step.
#[derive(Debug)]
pub struct FilterRun<T: Scalar> {
    pub steps: Vec<FilterStepResult<T>>,
    pub step_times: Vec<Duration>,
    pub failure: Option<Error>,
}

impl<T: Scalar> FilterRun<T> {
    pub fn into_result(self) -> Result<Vec<FilterStepResult<T>>> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.steps),
        }
    }

    pub fn means(&self) -> Vec<DVector<T>> {
        self.steps.iter().map(|s| s.posterior.mean.clone()).collect()
    }

    pub fn total_time(&self) -> Duration {
        self.step_times.iter().sum()
    }
}

/// Runs [`emorf_step`] over a measurement sequence.
pub fn run_filter<T, M, Q>(
    ys: &[DVector<T>],
    model: &M,
    noise: &NoiseSpec<T>,
    cfg: &EmConfig<T>,
    init: &GaussianBelief<T>,
    rule: &Q,
) -> FilterRun<T>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    let mut run = FilterRun {
        steps: Vec::with_capacity(ys.len()),
        step_times: Vec::with_capacity(ys.len()),
        failure: None,
    };
    if ys.is_empty() {
        run.failure = Some(Error::Empty("measurement sequence"));
        return run;
    }
    let mut prev = init.clone();
    for (k, y) in ys.iter().enumerate() {
        let start = Instant::now();
        match emorf_step(&prev, y, model, noise, cfg, rule) {
            Ok(step) => {
                run.step_times.push(start.elapsed());
                prev = step.posterior.clone();
                run.steps.push(step);
            }
            Err(e) => {
                run.failure = Some(e.at_step(k + 1));
                break;
            }
        }
    }
    run
}
