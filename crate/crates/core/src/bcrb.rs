//! Bayesian Cramér–Rao bounds for a filter/smoother that knows exactly which
//! measurement dimensions are corrupted and discards them.
//!
//! Indexing: states are `x_0 … x_K`, measurements `y_1 … y_K`. Block set `j`
//! (`0 ≤ j < K`) links `x_j → x_{j+1}` and `y_{j+1}`:
//!
//! * `D11_j = E[F(x_j)ᵀ Q⁻¹ F(x_j)]`, `D12_j = −E[F(x_j)]ᵀ Q⁻¹`, `D22(1)_j = Q⁻¹`
//! * `D22(2)_j = E[H(x_{j+1})ᵀ R⁻¹(mask_{j+1}) H(x_{j+1})]`
//!
//! Output sequences have length `K`; entry `k − 1` holds the FIM of `x_k`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{spd_inverse, spd_solve, submatrix, symmetrize};
use crate::ssm::StateSpaceModel;
use crate::{Error, Result, Scalar};

/// Ground-truth inclusion flags for one time step (`true` = kept).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectorMask {
    included: Vec<bool>,
}

impl RejectorMask {
    pub fn all_included(m: usize) -> Self {
        Self { included: vec![true; m] }
    }

    pub fn from_flags(included: Vec<bool>) -> Self {
        Self { included }
    }

    pub fn len(&self) -> usize {
        self.included.len()
    }

    pub fn is_empty(&self) -> bool {
        self.included.is_empty()
    }

    pub fn is_included(&self, i: usize) -> bool {
        self.included[i]
    }

    pub fn flags(&self) -> &[bool] {
        &self.included
    }

    pub fn retained(&self) -> Vec<usize> {
        (0..self.included.len()).filter(|&i| self.included[i]).collect()
    }

    pub fn rejected_count(&self) -> usize {
        self.included.iter().filter(|c| !**c).count()
    }
}

/// `R⁻¹(mask)`: the retained block of `R` inverted, zeros on rejected rows and columns.
pub fn masked_precision<T: Scalar>(r: &DMatrix<T>, mask: &RejectorMask) -> Result<DMatrix<T>> {
    let m = r.nrows();
    if mask.len() != m {
        return Err(Error::Dimension(format!("mask of length {} for {m}×{m} R", mask.len())));
    }
    let keep = mask.retained();
    let inv = spd_inverse(&submatrix(r, &keep)).ok_or(Error::RetainedBlockSingular)?;
    let mut out = DMatrix::zeros(m, m);
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            out[(i, j)] = inv[(a, b)];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DBlocks<T: Scalar> {
    pub d11: DMatrix<T>,
    pub d12: DMatrix<T>,
    pub d22_1: DMatrix<T>,
    pub d22_2: DMatrix<T>,
}

impl<T: Scalar> DBlocks<T> {
    pub fn d21(&self) -> DMatrix<T> {
        self.d12.transpose()
    }
}

/// Mask-independent trajectory averages.
///
/// `D22(2)` is linear in `R⁻¹(mask)`, so storing `S = E[vec(H) vec(H)ᵀ]`
/// (row-major `vec`) lets each outlier pattern be evaluated in `O(m²n²)`
/// without touching the samples again.
#[derive(Debug, Clone)]
pub struct TrajectoryMoments<T: Scalar> {
    n: usize,
    m: usize,
    d11: Vec<DMatrix<T>>,
    d12: Vec<DMatrix<T>>,
    q_inv: DMatrix<T>,
    h_second: Vec<DMatrix<T>>,
}

impl<T: Scalar> TrajectoryMoments<T> {
    /// `trajectories[s][k]` is `x_k` of sample `s`; every sample must hold `x_0 … x_K`.
    pub fn new<M>(trajectories: &[Vec<DVector<T>>], model: &M, q: &DMatrix<T>) -> Result<Self>
    where
        M: StateSpaceModel<T> + ?Sized,
    {
        let first = trajectories.first().ok_or(Error::Empty("trajectory samples"))?;
        let len = first.len();
        if len < 2 {
            return Err(Error::InvalidParameter("trajectories need at least x_0 and x_1".into()));
        }
        if trajectories.iter().any(|t| t.len() != len) {
            return Err(Error::Dimension("trajectory samples differ in length".into()));
        }
        let n = model.state_dim();
        let m = model.meas_dim();
        let q_inv = spd_inverse(q).ok_or(Error::Singular("process covariance"))?;
        let count = T::from_usize(trajectories.len()).expect("sample count");
        let horizon = len - 1;
        let mut d11 = Vec::with_capacity(horizon);
        let mut d12 = Vec::with_capacity(horizon);
        let mut h_second = Vec::with_capacity(horizon);
        for j in 0..horizon {
            let mut f_mean = DMatrix::zeros(n, n);
            let mut ftqf = DMatrix::zeros(n, n);
            let mut hs = DMatrix::zeros(m * n, trajectories.len());
            for (s, traj) in trajectories.iter().enumerate() {
                let f = model.transition_jacobian(&traj[j])?;
                ftqf += f.tr_mul(&(&q_inv * &f));
                f_mean += &f;
                let h = model.measurement_jacobian(&traj[j + 1])?;
                for a in 0..m {
                    for i in 0..n {
                        hs[(a * n + i, s)] = h[(a, i)];
                    }
                }
            }
            let mut a = ftqf / count;
            symmetrize(&mut a);
            d11.push(a);
            d12.push(-(f_mean / count).tr_mul(&q_inv));
            let mut s2 = &hs * hs.transpose() / count;
            symmetrize(&mut s2);
            h_second.push(s2);
        }
        Ok(Self { n, m, d11, d12, q_inv, h_second })
    }

    /// Number of block sets, `K`.
    pub fn horizon(&self) -> usize {
        self.d11.len()
    }

    /// `D22(2)` for a given `R⁻¹(mask)` at block index `j`.
    fn d22_2(&self, j: usize, prec: &DMatrix<T>) -> DMatrix<T> {
        let (n, m) = (self.n, self.m);
        let s = &self.h_second[j];
        let mut out = DMatrix::zeros(n, n);
        for a in 0..m {
            for b in 0..m {
                let w = prec[(a, b)];
                if w == T::zero() {
                    continue;
                }
                out += s.view((a * n, b * n), (n, n)) * w;
            }
        }
        symmetrize(&mut out);
        out
    }

    /// Blocks for one outlier pattern; `masks[j]` belongs to `y_{j+1}`.
    pub fn blocks(&self, r: &DMatrix<T>, masks: &[RejectorMask]) -> Result<Vec<DBlocks<T>>> {
        if masks.len() != self.horizon() {
            return Err(Error::Dimension(format!("{} masks for horizon {}", masks.len(), self.horizon())));
        }
        if r.nrows() != self.m {
            return Err(Error::Dimension("R does not match the measurement dimension".into()));
        }
        masks
            .iter()
            .enumerate()
            .map(|(j, mask)| {
                let prec = masked_precision(r, mask).map_err(|e| e.at_step(j + 1))?;
                Ok(DBlocks {
                    d11: self.d11[j].clone(),
                    d12: self.d12[j].clone(),
                    d22_1: self.q_inv.clone(),
                    d22_2: self.d22_2(j, &prec),
                })
            })
            .collect()
    }
}

/// Sample-average D-blocks over `trajectories` for a single mask sequence.
pub fn d_blocks<T, M>(
    trajectories: &[Vec<DVector<T>>],
    model: &M,
    q: &DMatrix<T>,
    r: &DMatrix<T>,
    masks: &[RejectorMask],
) -> Result<Vec<DBlocks<T>>>
where
    T: Scalar,
    M: StateSpaceModel<T> + ?Sized,
{
    TrajectoryMoments::new(trajectories, model, q)?.blocks(r, masks)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FimSequence<T: Scalar> {
    pub j_minus: Vec<DMatrix<T>>,
    pub j_plus: Vec<DMatrix<T>>,
    pub j_s: Vec<DMatrix<T>>,
}

/// Forward recursion from `J⁺_0 = j0`:
///
/// `J⁻_k = D22(1)_{k−1} − D21_{k−1} (J⁺_{k−1} + D11_{k−1})⁻¹ D12_{k−1}`,
/// `J⁺_k = J⁻_k + D22(2)_{k−1}`.
pub fn fim_filter<T: Scalar>(
    blocks: &[DBlocks<T>],
    j0: &DMatrix<T>,
) -> Result<(Vec<DMatrix<T>>, Vec<DMatrix<T>>)> {
    let mut j_minus = Vec::with_capacity(blocks.len());
    let mut j_plus = Vec::with_capacity(blocks.len());
    let mut prev = j0.clone();
    for (j, b) in blocks.iter().enumerate() {
        let solved = spd_solve(&(&prev + &b.d11), &b.d12)
            .ok_or(Error::Singular("J⁺ + D11"))
            .map_err(|e| e.at_step(j + 1))?;
        let mut jm = &b.d22_1 - b.d12.tr_mul(&solved);
        symmetrize(&mut jm);
        let mut jp = &jm + &b.d22_2;
        symmetrize(&mut jp);
        j_minus.push(jm);
        prev = jp.clone();
        j_plus.push(jp);
    }
    Ok((j_minus, j_plus))
}

/// Backward recursion from `Jˢ_K = J⁺_K`:
///
/// `Jˢ_k = J⁺_k + D11_k − D12_k (D22(1)_k + Jˢ_{k+1} − J⁻_{k+1})⁻¹ D21_k`.
///
/// `J⁻_{k+1}` is subtracted: `Jˢ_{k+1} − J⁻_{k+1}` is the information about
/// `x_{k+1}` that does not already flow through the transition from `x_k`.
/// Adding it instead double counts the prior and breaks agreement with RTS.
pub fn fim_smoother<T: Scalar>(
    blocks: &[DBlocks<T>],
    j_minus: &[DMatrix<T>],
    j_plus: &[DMatrix<T>],
) -> Result<Vec<DMatrix<T>>> {
    let len = j_plus.len();
    if j_minus.len() != len || blocks.len() != len {
        return Err(Error::Dimension("FIM and block sequences differ in length".into()));
    }
    let Some(last) = j_plus.last() else {
        return Err(Error::Empty("FIM sequence"));
    };
    let mut j_s = vec![last.clone(); len];
    // entry i holds time k = i + 1; blocks[k] is blocks[i + 1]
    for i in (0..len - 1).rev() {
        let b = &blocks[i + 1];
        let middle = &b.d22_1 + &j_s[i + 1] - &j_minus[i + 1];
        let solved = spd_solve(&middle, &b.d21())
            .ok_or(Error::Singular("smoothing middle term"))
            .map_err(|e| e.at_step(i + 1))?;
        let mut js = &j_plus[i] + &b.d11 - &b.d12 * solved;
        symmetrize(&mut js);
        j_s[i] = js;
    }
    Ok(j_s)
}

/// Filtering and smoothing FIMs in one call.
pub fn fim_sequence<T: Scalar>(blocks: &[DBlocks<T>], j0: &DMatrix<T>) -> Result<FimSequence<T>> {
    let (j_minus, j_plus) = fim_filter(blocks, j0)?;
    let j_s = fim_smoother(blocks, &j_minus, &j_plus)?;
    Ok(FimSequence { j_minus, j_plus, j_s })
}

/// `tr(J⁻¹)` per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTraces<T: Scalar> {
    pub filter: Vec<T>,
    pub smoother: Vec<T>,
}

fn inverse_traces<T: Scalar>(fims: &[DMatrix<T>]) -> Result<Vec<T>> {
    fims.iter()
        .enumerate()
        .map(|(i, j)| {
            spd_inverse(j)
                .map(|inv| inv.trace())
                .ok_or(Error::Singular("FIM"))
                .map_err(|e| e.at_step(i + 1))
        })
        .collect()
}

pub fn bcrb_traces<T: Scalar>(fims: &FimSequence<T>) -> Result<BoundTraces<T>> {
    Ok(BoundTraces { filter: inverse_traces(&fims.j_plus)?, smoother: inverse_traces(&fims.j_s)? })
}
