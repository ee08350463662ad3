use nalgebra::DVector;

use crate::bcrb::RejectorMask;
use crate::belief::GaussianBelief;
use crate::emorf::{measurement_moments, predict, update_with_moments};
use crate::emors::backward_pass;
use crate::linalg::{block, submatrix, subvector};
use crate::sigma::{Moments, Quadrature};
use crate::ssm::{NoiseSpec, StateSpaceModel};
use crate::{Error, Result, Scalar};

/// Forward pass that deletes the dimensions flagged in `masks`.
///
/// The moments of `h` over the retained rows are the corresponding rows of the
/// full moments, so the full measurement map is propagated once and subselected.
pub fn perfect_rejector_forward<T, M, Q>(
    ys: &[DVector<T>],
    masks: &[RejectorMask],
    model: &M,
    noise: &NoiseSpec<T>,
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
    if masks.len() != ys.len() {
        return Err(Error::Dimension(format!("{} masks for {} measurements", masks.len(), ys.len())));
    }
    let mut predicted = Vec::with_capacity(ys.len());
    let mut filtered = Vec::with_capacity(ys.len());
    let mut prev = init.clone();
    for (k, (y, mask)) in ys.iter().zip(masks).enumerate() {
        let step = || -> Result<(GaussianBelief<T>, GaussianBelief<T>)> {
            let pred = predict(&prev, model, &noise.q, rule)?;
            let keep = mask.retained();
            if keep.is_empty() {
                return Ok((pred.clone(), pred));
            }
            let full = measurement_moments(&pred, model, rule)?;
            let all: Vec<usize> = (0..pred.dim()).collect();
            let mom = Moments {
                mean: subvector(&full.mean, &keep),
                cov: submatrix(&full.cov, &keep),
                cross: block(&full.cross, &all, &keep),
            };
            let post = update_with_moments(&pred, &subvector(y, &keep), &mom, &submatrix(&noise.r, &keep))?;
            Ok((pred, post))
        };
        let (pred, post) = step().map_err(|e| e.at_step(k + 1))?;
        prev = post.clone();
        predicted.push(pred);
        filtered.push(post);
    }
    Ok((predicted, filtered))
}

pub fn perfect_rejector_filter<T, M, Q>(
    ys: &[DVector<T>],
    masks: &[RejectorMask],
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
    Ok(perfect_rejector_forward(ys, masks, model, noise, init, rule)?.1)
}

pub fn perfect_rejector_smoother<T, M, Q>(
    ys: &[DVector<T>],
    masks: &[RejectorMask],
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
    let (pred, filt) = perfect_rejector_forward(ys, masks, model, noise, init, rule)?;
    backward_pass(&pred, &filt, model, rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emorf::unscented_step;
    use crate::emors::unscented_smoother;
    use crate::sigma::UtParams;
    use crate::ssm::LinearModel;
    use nalgebra::DMatrix;

    fn setup() -> (LinearModel<f64>, NoiseSpec<f64>, GaussianBelief<f64>, Vec<DVector<f64>>) {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let q = DMatrix::identity(2, 2) * 0.1;
        let r = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.4, 0.4, 1.0, 0.4, 0.4, 0.4, 1.0]);
        let init = GaussianBelief::new(DVector::zeros(2), DMatrix::identity(2, 2));
        let ys = (0..6).map(|k| DVector::from_row_slice(&[k as f64, 1.0, k as f64 + 1.0])).collect();
        (LinearModel::new(f, h), NoiseSpec::new(q, r).unwrap(), init, ys)
    }

    #[test]
    fn all_included_is_plain_filter() {
        let (model, noise, init, ys) = setup();
        let masks = vec![RejectorMask::all_included(3); ys.len()];
        let out = perfect_rejector_filter(&ys, &masks, &model, &noise, &init, &UtParams::default()).unwrap();
        let mut b = init.clone();
        for (y, o) in ys.iter().zip(&out) {
            b = unscented_step(&b, y, &model, &noise, &UtParams::default()).unwrap();
            assert!((&b.mean - &o.mean).amax() < 1e-12);
            assert!((&b.cov - &o.cov).amax() < 1e-12);
        }
        let s = perfect_rejector_smoother(&ys, &masks, &model, &noise, &init, &UtParams::default()).unwrap();
        let u = unscented_smoother(&ys, &model, &noise, &init, &UtParams::default()).unwrap();
        for (a, b) in s.iter().zip(&u) {
            assert!((&a.mean - &b.mean).amax() < 1e-12);
        }
    }

    #[test]
    fn fully_rejected_step_keeps_prediction() {
        let (model, noise, init, ys) = setup();
        let mut masks = vec![RejectorMask::all_included(3); ys.len()];
        masks[2] = RejectorMask::from_flags(vec![false; 3]);
        let (pred, filt) = perfect_rejector_forward(&ys, &masks, &model, &noise, &init, &UtParams::default()).unwrap();
        assert_eq!(pred[2], filt[2]);
        assert_ne!(pred[3], filt[3]);
    }

    #[test]
    fn rejected_value_is_ignored() {
        let (model, noise, init, mut ys) = setup();
        let mut masks = vec![RejectorMask::all_included(3); ys.len()];
        masks[1] = RejectorMask::from_flags(vec![true, false, true]);
        let a = perfect_rejector_filter(&ys, &masks, &model, &noise, &init, &UtParams::default()).unwrap();
        ys[1][1] = 1e6;
        let b = perfect_rejector_filter(&ys, &masks, &model, &noise, &init, &UtParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
