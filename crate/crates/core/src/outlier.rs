//! Indicator-dependent measurement covariance algebra.
//!
//! Each measurement dimension carries an indicator `Iⁱ ∈ {ε, 1}`. The masked
//! covariance `R(I)` keeps the nominal block on clean dimensions, inflates
//! flagged diagonals by `1/ε` and zeroes every correlation touching a flagged
//! dimension. Its inverse and the one-indicator precision difference are
//! computed by index partition and a scalar Schur complement, so the sweep
//! over all `m` indicators costs `O(m⁴)`.

use nalgebra::DMatrix;

use crate::linalg::{block, spd_inverse, submatrix};
use crate::{lit, Error, Result, Scalar};

/// Per-dimension outlier indicators with values in `{ε, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorVector<T: Scalar> {
    clean: Vec<bool>,
    epsilon: T,
}

impl<T: Scalar> IndicatorVector<T> {
    pub fn all_clean(m: usize, epsilon: T) -> Result<Self> {
        Self::from_flags(vec![true; m], epsilon)
    }

    /// `clean[i] == true` means `Iⁱ = 1`, otherwise `Iⁱ = ε`.
    pub fn from_flags(clean: Vec<bool>, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero() && epsilon < T::one()) {
            return Err(Error::InvalidParameter("epsilon must lie in (0, 1)".into()));
        }
        Ok(Self { clean, epsilon })
    }

    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn is_clean(&self, i: usize) -> bool {
        self.clean[i]
    }

    pub fn set_clean(&mut self, i: usize, clean: bool) {
        self.clean[i] = clean;
    }

    pub fn flags(&self) -> &[bool] {
        &self.clean
    }

    /// Value of `Iⁱ`.
    pub fn value(&self, i: usize) -> T {
        if self.clean[i] {
            T::one()
        } else {
            self.epsilon
        }
    }

    pub fn values(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    pub fn clean_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.clean[i]).collect()
    }

    pub fn outlier_count(&self) -> usize {
        self.clean.iter().filter(|c| !**c).count()
    }

    fn with(&self, i: usize, clean: bool) -> Self {
        let mut out = self.clone();
        out.clean[i] = clean;
        out
    }
}

/// Prior probability `θⁱ` that dimension `i` is outlier-free.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierPrior<T: Scalar> {
    theta: Vec<T>,
}

impl<T: Scalar> OutlierPrior<T> {
    pub fn new(theta: Vec<T>) -> Result<Self> {
        if theta.iter().any(|t| !(*t > T::zero() && *t < T::one())) {
            return Err(Error::InvalidParameter("theta entries must lie in (0, 1)".into()));
        }
        Ok(Self { theta })
    }

    pub fn uniform(m: usize, theta: T) -> Result<Self> {
        Self::new(vec![theta; m])
    }

    pub fn theta(&self, i: usize) -> T {
        self.theta[i]
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `2 ln(1/θⁱ − 1)`
    pub fn log_odds_term(&self, i: usize) -> T {
        let t = self.theta[i];
        lit::<T>(2.0) * (T::one() / t - T::one()).ln()
    }
}

/// Order in which the sweep visits dimensions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum SweepOrder {
    #[default]
    Ascending,
    Descending,
    Custom(Vec<usize>),
}

impl SweepOrder {
    pub fn indices(&self, m: usize) -> Vec<usize> {
        match self {
            SweepOrder::Ascending => (0..m).collect(),
            SweepOrder::Descending => (0..m).rev().collect(),
            SweepOrder::Custom(v) => v.clone(),
        }
    }
}

fn check_dims<T: Scalar>(r: &DMatrix<T>, ind: &IndicatorVector<T>) -> Result<()> {
    if !r.is_square() || r.nrows() != ind.len() {
        return Err(Error::Dimension(format!(
            "R is {}x{} but there are {} indicators",
            r.nrows(),
            r.ncols(),
            ind.len()
        )));
    }
    Ok(())
}

/// `R(I)`: diagonal `Rⁱⁱ/Iⁱ`, off-diagonal `Rⁱʲ` only when both dimensions are clean.
pub fn masked_cov<T: Scalar>(r: &DMatrix<T>, ind: &IndicatorVector<T>) -> DMatrix<T> {
    let m = ind.len();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            r[(i, i)] / ind.value(i)
        } else if ind.is_clean(i) && ind.is_clean(j) {
            r[(i, j)]
        } else {
            T::zero()
        }
    })
}

/// `R(I)⁻¹` by index partition: `ε/Rⁱⁱ` on flagged dimensions, the inverse of
/// the clean block elsewhere, zero coupling.
pub fn masked_prec<T: Scalar>(r: &DMatrix<T>, ind: &IndicatorVector<T>) -> Result<DMatrix<T>> {
    check_dims(r, ind)?;
    let m = ind.len();
    let clean = ind.clean_indices();
    let inv = spd_inverse(&submatrix(r, &clean)).ok_or(Error::RetainedBlockSingular)?;
    let mut out = DMatrix::zeros(m, m);
    for (a, &i) in clean.iter().enumerate() {
        for (b, &j) in clean.iter().enumerate() {
            out[(i, j)] = inv[(a, b)];
        }
    }
    for i in (0..m).filter(|&i| !ind.is_clean(i)) {
        out[(i, i)] = ind.epsilon() / r[(i, i)];
    }
    Ok(out)
}

/// Factors shared by `ΔR⁻¹` and `τ` for one `(I, i)` pair.
///
/// `others` are the clean dimensions other than `i`. Flagged dimensions drop
/// out: they are decoupled from `i` in both `R(Iⁱ=1)` and `R(Iⁱ=ε)` and their
/// precision entries cancel in the difference.
#[derive(Debug, Clone)]
pub struct SchurParts<T: Scalar> {
    pub dim: usize,
    pub others: Vec<usize>,
    /// `(R̂⁻ⁱ⁻ⁱ)⁻¹ R⁻ⁱ'ⁱ` restricted to `others`.
    pub gain: Vec<T>,
    /// `Rⁱⁱ − Rⁱ'⁻ⁱ (R̂⁻ⁱ⁻ⁱ)⁻¹ R⁻ⁱ'ⁱ`
    pub schur: T,
    pub r_ii: T,
    pub epsilon: T,
}

impl<T: Scalar> SchurParts<T> {
    pub fn new(r: &DMatrix<T>, ind: &IndicatorVector<T>, i: usize) -> Result<Self> {
        check_dims(r, ind)?;
        let others: Vec<usize> = (0..ind.len()).filter(|&j| j != i && ind.is_clean(j)).collect();
        let r_ii = r[(i, i)];
        let (gain, schur) = if others.is_empty() {
            (Vec::new(), r_ii)
        } else {
            let d_inv = spd_inverse(&submatrix(r, &others)).ok_or(Error::RetainedBlockSingular)?;
            let col = block(r, &others, &[i]);
            let g = d_inv * &col;
            let quad = col.dot(&g);
            (g.iter().copied().collect(), r_ii - quad)
        };
        let floor = r_ii * T::default_epsilon() * lit(ind.len().max(1) as f64);
        if !(schur > floor) {
            return Err(Error::SchurNotPositive { dim: i });
        }
        Ok(Self {
            dim: i,
            others,
            gain,
            schur,
            r_ii,
            epsilon: ind.epsilon(),
        })
    }

    /// `Ξⁱⁱ = 1/s − ε/Rⁱⁱ`
    pub fn xi_diag(&self) -> T {
        T::one() / self.schur - self.epsilon / self.r_ii
    }

    /// `ln|I − R⁻ⁱ'ⁱ Rⁱ'⁻ⁱ (R̂⁻ⁱ⁻ⁱ)⁻¹ / Rⁱⁱ|`. The matrix is a rank-one
    /// update of the identity, so the determinant is `s / Rⁱⁱ`.
    pub fn log_det_term(&self) -> Result<T> {
        let arg = self.schur / self.r_ii;
        if !(arg > T::zero()) || !arg.is_finite() {
            return Err(Error::InvalidLogDeterminant { dim: self.dim });
        }
        Ok(arg.ln())
    }

    /// `tr(W ΔR⁻¹)` without forming `ΔR⁻¹`.
    pub fn trace_with(&self, w: &DMatrix<T>) -> T {
        let i = self.dim;
        let inv_s = T::one() / self.schur;
        let mut cross = T::zero();
        for (a, &j) in self.others.iter().enumerate() {
            cross += (w[(i, j)] + w[(j, i)]) * self.gain[a];
        }
        let mut quad = T::zero();
        for (a, &j) in self.others.iter().enumerate() {
            let mut row = T::zero();
            for (b, &l) in self.others.iter().enumerate() {
                row += w[(j, l)] * self.gain[b];
            }
            quad += self.gain[a] * row;
        }
        w[(i, i)] * self.xi_diag() + (quad - cross) * inv_s
    }

    /// Dense `ΔR⁻¹ = R⁻¹(Iⁱ=1) − R⁻¹(Iⁱ=ε)` assembled from the four `Ξ` blocks.
    pub fn delta_prec(&self, m: usize) -> DMatrix<T> {
        let i = self.dim;
        let inv_s = T::one() / self.schur;
        let mut out = DMatrix::zeros(m, m);
        out[(i, i)] = self.xi_diag();
        for (a, &j) in self.others.iter().enumerate() {
            let off = -self.gain[a] * inv_s;
            out[(i, j)] = off;
            out[(j, i)] = off;
            for (b, &l) in self.others.iter().enumerate() {
                out[(j, l)] = self.gain[a] * self.gain[b] * inv_s;
            }
        }
        out
    }
}

/// `R⁻¹(Iⁱ=1, I⁻ⁱ) − R⁻¹(Iⁱ=ε, I⁻ⁱ)`.
pub fn delta_prec<T: Scalar>(r: &DMatrix<T>, ind: &IndicatorVector<T>, i: usize) -> Result<DMatrix<T>> {
    Ok(SchurParts::new(r, ind, i)?.delta_prec(ind.len()))
}

/// Decision statistic for dimension `i`; `τ ≤ 0` keeps it, `τ > 0` flags it.
///
/// `τ = tr(W ΔR⁻¹) + ln|I − R⁻ⁱ'ⁱ Rⁱ'⁻ⁱ (R̂⁻ⁱ⁻ⁱ)⁻¹/Rⁱⁱ| + ln ε + 2 ln(1/θⁱ − 1)`.
/// The determinant ratio is never formed directly since `|R(I)|` carries
/// powers of `1/ε`.
pub fn tau<T: Scalar>(
    w: &DMatrix<T>,
    r: &DMatrix<T>,
    ind: &IndicatorVector<T>,
    i: usize,
    prior: &OutlierPrior<T>,
) -> Result<T> {
    let parts = SchurParts::new(r, ind, i)?;
    Ok(parts.trace_with(w) + parts.log_det_term()? + ind.epsilon().ln() + prior.log_odds_term(i))
}

/// One coordinate pass over the indicators, each update seeing the ones before it.
pub fn sweep_indicators<T: Scalar>(
    w: &DMatrix<T>,
    r: &DMatrix<T>,
    ind: &IndicatorVector<T>,
    prior: &OutlierPrior<T>,
    order: &SweepOrder,
) -> Result<IndicatorVector<T>> {
    check_dims(r, ind)?;
    if prior.len() != ind.len() || w.nrows() != ind.len() || !w.is_square() {
        return Err(Error::Dimension("W, prior and indicators disagree".into()));
    }
    let mut cur = ind.clone();
    for i in order.indices(ind.len()) {
        let t = tau(w, r, &cur, i, prior)?;
        cur = cur.with(i, t <= T::zero());
    }
    Ok(cur)
}
