//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the crate's linear algebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Gauss–Jordan inverse with partial pivoting on a plain row-major copy.
pub fn gj_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a[(i, j)]).collect();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        assert!(p != 0.0, "singular matrix in oracle");
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    DMatrix::from_fn(n, n, |i, j| m[i][n + j])
}

/// `ln|det A|` by Gaussian elimination with partial pivoting.
pub fn log_abs_det(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let mut acc = 0.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        acc += p.abs().ln();
        for r in col + 1..n {
            let f = m[r][col] / p;
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    acc
}

/// Random SPD matrix `A Aᵀ + m·I` with entries of `A` in `[-1, 1]`.
pub fn random_spd<R: Rng>(m: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(m, m) * m as f64
}

/// `R(I)` built entry by entry from the indicator values.
pub fn masked_cov_oracle(r: &DMatrix<f64>, clean: &[bool], eps: f64) -> DMatrix<f64> {
    let m = r.nrows();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            r[(i, i)] / if clean[i] { 1.0 } else { eps }
        } else if clean[i] && clean[j] {
            r[(i, j)]
        } else {
            0.0
        }
    })
}

/// Indicator-dependent part of the EM objective:
/// `−½ ln|R(I)| − ½ tr(W R(I)⁻¹) + Σ ln p(Iⁱ)` with `p(Iⁱ=1) = θ`.
pub fn em_objective(w: &DMatrix<f64>, r: &DMatrix<f64>, clean: &[bool], eps: f64, theta: f64) -> f64 {
    let rc = masked_cov_oracle(r, clean, eps);
    let inv = gj_inverse(&rc);
    let tr = (w * inv).trace();
    let prior: f64 = clean.iter().map(|&c| if c { theta.ln() } else { (1.0 - theta).ln() }).sum();
    -0.5 * log_abs_det(&rc) - 0.5 * tr + prior
}

pub struct Kalman {
    pub predicted: Vec<(DVector<f64>, DMatrix<f64>)>,
    pub filtered: Vec<(DVector<f64>, DMatrix<f64>)>,
}

/// Textbook Kalman filter for `x' = F x + b + q`, `y = H x + c + r`,
/// dropping the measurement rows not listed in `keep[k]`.
#[allow(clippy::too_many_arguments)]
pub fn kalman(
    f: &DMatrix<f64>,
    b: &DVector<f64>,
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    m0: &DVector<f64>,
    p0: &DMatrix<f64>,
    ys: &[DVector<f64>],
    keep: Option<&[Vec<usize>]>,
) -> Kalman {
    let n = m0.len();
    let (mut m, mut p) = (m0.clone(), p0.clone());
    let mut out = Kalman { predicted: Vec::new(), filtered: Vec::new() };
    for (k, y) in ys.iter().enumerate() {
        let mp = f * &m + b;
        let pp = f * &p * f.transpose() + q;
        let rows: Vec<usize> = keep.map_or_else(|| (0..y.len()).collect(), |kp| kp[k].clone());
        if rows.is_empty() {
            m = mp.clone();
            p = pp.clone();
        } else {
            let hk = DMatrix::from_fn(rows.len(), n, |i, j| h[(rows[i], j)]);
            let rk = DMatrix::from_fn(rows.len(), rows.len(), |i, j| r[(rows[i], rows[j])]);
            let yk = DVector::from_fn(rows.len(), |i, _| y[rows[i]] - c[rows[i]]);
            let s = &hk * &pp * hk.transpose() + rk;
            let gain = &pp * hk.transpose() * gj_inverse(&s);
            m = &mp + &gain * (yk - &hk * &mp);
            // Joseph-free form; fine for well-conditioned test problems
            p = &pp - &gain * &hk * &pp;
        }
        out.predicted.push((mp, pp));
        out.filtered.push((m.clone(), p.clone()));
    }
    out
}

/// Textbook RTS smoother over a [`kalman`] run.
pub fn rts(f: &DMatrix<f64>, kf: &Kalman) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    let len = kf.filtered.len();
    let mut out = vec![kf.filtered[len - 1].clone(); len];
    for k in (0..len - 1).rev() {
        let (mf, pf) = &kf.filtered[k];
        let (mp, pp) = &kf.predicted[k + 1];
        let g = pf * f.transpose() * gj_inverse(pp);
        let (ms, ps) = &out[k + 1];
        out[k] = (mf + &g * (ms - mp), pf + &g * (ps - pp) * g.transpose());
    }
    out
}

/// Two-sided exact sign test p-value for `wins` successes out of `trials`.
pub fn sign_test_p(wins: usize, trials: usize) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let k = wins.max(trials - wins);
    // upper tail P(X ≥ k) under Bin(trials, 1/2), accumulated in log space
    let ln_half_n = trials as f64 * 0.5f64.ln();
    let mut ln_c = 0.0; // ln C(trials, 0)
    let mut tail = 0.0;
    for j in 0..=trials {
        if j > 0 {
            ln_c += ((trials - j + 1) as f64).ln() - (j as f64).ln();
        }
        if j >= k {
            tail += (ln_c + ln_half_n).exp();
        }
    }
    (2.0 * tail).min(1.0)
}

/// Paired comparison: number of pairs with `a < b`, number of non-tied pairs.
pub fn paired_wins(a: &[f64], b: &[f64]) -> (usize, usize) {
    let mut wins = 0;
    let mut trials = 0;
    for (x, y) in a.iter().zip(b) {
        if x != y {
            trials += 1;
            if x < y {
                wins += 1;
            }
        }
    }
    (wins, trials)
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
