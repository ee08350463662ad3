//! EM-based outlier-robust RTS smoother.
//!
//! Every outer iteration runs a forward unscented pass with the current
//! indicators, an RTS backward pass, and then one indicator sweep per time
//! step with `W` taken over the smoothed marginal.

use nalgebra::DVector;

use crate::belief::GaussianBelief;
use crate::emorf::{gaussian_update, predict, relative_change, EmConfig};
use crate::linalg::{spd_solve, symmetrize};
use crate::outlier::{masked_cov, sweep_indicators, IndicatorVector};
use crate::sigma::{expected_outer_residual, propagate, Quadrature};
use crate::ssm::{NoiseSpec, StateSpaceModel};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SmootherConfig<T: Scalar> {
    /// Indicator prior, sweep order, `tol` (applied to the stacked smoothed means).
    pub em: EmConfig<T>,
    pub max_outer: usize,
    /// Start each sweep from the previous indicators instead of all ones.
    pub warm_start: bool,
}

impl<T: Scalar> Default for SmootherConfig<T> {
    fn default() -> Self {
        Self { em: EmConfig::default(), max_outer: 25, warm_start: true }
    }
}

impl<T: Scalar> SmootherConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.em.validate()?;
        if self.max_outer == 0 {
            return Err(Error::InvalidParameter("max_outer must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmootherState<T: Scalar> {
    pub filtered: Vec<GaussianBelief<T>>,
    pub predicted: Vec<GaussianBelief<T>>,
    pub smoothed: Vec<GaussianBelief<T>>,
    pub indicators: Vec<IndicatorVector<T>>,
    pub iterations: usize,
    pub converged: bool,
}

/// Unscented filter pass with `R(I_k)` at step `k`.
///
/// Returns `(predicted, filtered)`; entry `k` belongs to measurement `k`.
pub fn forward_pass<T, M, Q>(
    ys: &[DVector<T>],
    model: &M,
    noise: &NoiseSpec<T>,
    indicators: &[IndicatorVector<T>],
    init: &GaussianBelief<T>,
    rule: &Q,
) -> Result<(Vec<GaussianBelief<T>>, Vec<GaussianBelief<T>>)>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    if ys.is_empty() {
        return Err(Error::Empty("measurement sequence"));
    }
    if indicators.len() != ys.len() {
        return Err(Error::Dimension(format!(
            "{} indicator vectors for {} measurements",
            indicators.len(),
            ys.len()
        )));
    }
    let mut predicted = Vec::with_capacity(ys.len());
    let mut filtered = Vec::with_capacity(ys.len());
    let mut prev = init.clone();
    for (k, (y, ind)) in ys.iter().zip(indicators).enumerate() {
        let step = || -> Result<(GaussianBelief<T>, GaussianBelief<T>)> {
            let pred = predict(&prev, model, &noise.q, rule)?;
            let post = gaussian_update(&pred, y, model, &masked_cov(&noise.r, ind), rule)?;
            Ok((pred, post))
        };
        if ind.len() != noise.r.nrows() || y.len() != noise.r.nrows() {
            return Err(Error::Dimension(format!(
                "measurement of length {} with {} indicators and {}×{} R",
                y.len(),
                ind.len(),
                noise.r.nrows(),
                noise.r.nrows()
            ))
            .at_step(k + 1));
        }
        let (pred, post) = step().map_err(|e| e.at_step(k + 1))?;
        prev = post.clone();
        predicted.push(pred);
        filtered.push(post);
    }
    Ok((predicted, filtered))
}

/// RTS backward recursion over the outputs of a forward pass.
///
/// `predicted[k + 1]` must be the prediction made from `filtered[k]`.
pub fn backward_pass<T, M, Q>(
    predicted: &[GaussianBelief<T>],
    filtered: &[GaussianBelief<T>],
    model: &M,
    rule: &Q,
) -> Result<Vec<GaussianBelief<T>>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    let k_len = filtered.len();
    if predicted.len() != k_len {
        return Err(Error::Dimension("predicted and filtered lengths differ".into()));
    }
    let Some(last) = filtered.last() else {
        return Err(Error::Empty("filtered sequence"));
    };
    let mut smoothed = vec![last.clone(); k_len];
    for k in (0..k_len - 1).rev() {
        let step = || -> Result<GaussianBelief<T>> {
            let sigma = rule.sigma_set(&filtered[k])?;
            // L = Cov[x_k, f(x_k)], G = L (P⁻_{k+1})⁻¹
            let cross = propagate(&sigma, |x| model.transition(x))?.cross;
            let next_pred = &predicted[k + 1];
            let gain_t = spd_solve(&next_pred.cov, &cross.transpose())
                .ok_or(Error::Singular("predicted covariance"))?;
            let next = &smoothed[k + 1];
            let mean = &filtered[k].mean + gain_t.tr_mul(&(&next.mean - &next_pred.mean));
            let mut cov = &filtered[k].cov + gain_t.tr_mul(&((&next.cov - &next_pred.cov) * &gain_t));
            symmetrize(&mut cov);
            Ok(GaussianBelief::new(mean, cov))
        };
        smoothed[k] = step().map_err(|e| e.at_step(k + 1))?;
    }
    Ok(smoothed)
}

/// Plain unscented RTS smoother: all indicators fixed at 1.
pub fn unscented_smoother<T, M, Q>(
    ys: &[DVector<T>],
    model: &M,
    noise: &NoiseSpec<T>,
    init: &GaussianBelief<T>,
    rule: &Q,
) -> Result<Vec<GaussianBelief<T>>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    // ε is irrelevant when every dimension is clean
    let clean = all_clean(ys, T::one() / (T::one() + T::one()))?;
    let (pred, filt) = forward_pass(ys, model, noise, &clean, init, rule)?;
    backward_pass(&pred, &filt, model, rule)
}

fn all_clean<T: Scalar>(ys: &[DVector<T>], epsilon: T) -> Result<Vec<IndicatorVector<T>>> {
    ys.iter().map(|y| IndicatorVector::all_clean(y.len(), epsilon)).collect()
}

fn stack<T: Scalar>(beliefs: &[GaussianBelief<T>]) -> DVector<T> {
    let n: usize = beliefs.iter().map(|b| b.mean.len()).sum();
    DVector::from_iterator(n, beliefs.iter().flat_map(|b| b.mean.iter().copied()))
}

/// Runs the smoother to convergence of the stacked smoothed means.
pub fn emors_run<T, M, Q>(
    ys: &[DVector<T>],
    model: &M,
    noise: &NoiseSpec<T>,
    cfg: &SmootherConfig<T>,
    init: &GaussianBelief<T>,
    rule: &Q,
) -> Result<SmootherState<T>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
    Q: Quadrature<T> + ?Sized,
{
    cfg.validate()?;
    let eps = cfg.em.epsilon;
    let mut indicators = all_clean(ys, eps)?;
    let mut last: Option<DVector<T>> = None;
    let mut state = None;
    for iteration in 1..=cfg.max_outer {
        let outer = || -> Result<SmootherState<T>> {
            let (predicted, filtered) = forward_pass(ys, model, noise, &indicators, init, rule)?;
            let smoothed = backward_pass(&predicted, &filtered, model, rule)?;
            let mut next = Vec::with_capacity(ys.len());
            for (k, (y, belief)) in ys.iter().zip(&smoothed).enumerate() {
                let sweep = || -> Result<IndicatorVector<T>> {
                    let prior = cfg.em.prior(y.len())?;
                    let w = expected_outer_residual(belief, y, |x| model.measurement(x), rule)?;
                    let start = if cfg.warm_start {
                        indicators[k].clone()
                    } else {
                        IndicatorVector::all_clean(y.len(), eps)?
                    };
                    sweep_indicators(&w, &noise.r, &start, &prior, &cfg.em.order)
                };
                next.push(sweep().map_err(|e| e.at_step(k + 1))?);
            }
            Ok(SmootherState {
                filtered,
                predicted,
                smoothed,
                indicators: next,
                iterations: iteration,
                converged: false,
            })
        };
        let mut current = outer().map_err(|e| e.at_iteration(iteration))?;
        let stacked = stack(&current.smoothed);
        current.converged = last
            .as_ref()
            .is_some_and(|prev| relative_change(&stacked, prev) < cfg.em.tol);
        last = Some(stacked);
        indicators = current.indicators.clone();
        let done = current.converged;
        state = Some(current);
        if done {
            break;
        }
    }
    Ok(state.expect("max_outer >= 1"))
}
