use rand::Rng;
use rand_distr::StandardNormal;

use super::{OutlierLaw, Scenario};
use crate::bcrb::RejectorMask;
use crate::ssm::{tdoa_r, StateSpaceModel};
use crate::{GaussianBelief, Matrix, Result, Vector};

/// `L` with `L Lᵀ = cov` for any symmetric PSD `cov` (including singular ones).
pub fn gaussian_factor(cov: &Matrix) -> Matrix {
    let mut sym = cov.clone();
    crate::linalg::symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();
    let mut l = eig.eigenvectors;
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

fn standard_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// `N(m₀, P₀)` with `m₀ ~ N(x₀, P₀)` and `P₀ = Q`.
pub fn initial_belief<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> GaussianBelief {
    let p0 = scenario.initial_cov();
    let mean = scenario.x0_vector() + gaussian_factor(&p0) * standard_normal(5, rng);
    GaussianBelief::new(mean, p0)
}

/// True states `x_1 … x_K`, started from the exact benchmark `x₀`.
pub fn simulate_truth<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Vec<Vector>> {
    let model = scenario.model()?;
    let lq = gaussian_factor(&scenario.initial_cov());
    let mut x = scenario.x0_vector();
    let mut out = Vec::with_capacity(scenario.horizon);
    for _ in 0..scenario.horizon {
        x = model.transition(&x)? + &lq * standard_normal(5, rng);
        out.push(x.clone());
    }
    Ok(out)
}

/// Trajectories `x_0 … x_K` with `x_0 ~ N(x₀, P₀)`, used as samples of `p(x_k)`.
pub fn sample_trajectories<R: Rng + ?Sized>(
    scenario: &Scenario,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<Vector>>> {
    let model = scenario.model()?;
    let lq = gaussian_factor(&scenario.initial_cov());
    (0..count)
        .map(|_| {
            let mut x = scenario.x0_vector() + &lq * standard_normal(5, rng);
            let mut traj = Vec::with_capacity(scenario.horizon + 1);
            traj.push(x.clone());
            for _ in 0..scenario.horizon {
                x = model.transition(&x)? + &lq * standard_normal(5, rng);
                traj.push(x.clone());
            }
            Ok(traj)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub ys: Vec<Vector>,
    /// `true` where the dimension was left clean.
    pub masks: Vec<RejectorMask>,
}

fn outlier_draw<R: Rng + ?Sized>(law: OutlierLaw, variance: f64, rng: &mut R) -> f64 {
    match law {
        OutlierLaw::Gaussian => variance.sqrt() * rng.sample::<f64, _>(StandardNormal),
        OutlierLaw::Uniform => {
            let half_width = (3.0 * variance).sqrt();
            rng.random_range(-half_width..half_width)
        }
        OutlierLaw::Laplace => {
            let b = (variance / 2.0).sqrt();
            let u: f64 = rng.random::<f64>() - 0.5;
            -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
        }
    }
}

/// Nominal TDOA noise plus sensor-level contamination.
///
/// Each TOA is hit with probability `λ`; dimension `j` is contaminated when
/// sensor 1 or sensor `j + 1` is hit.
pub fn generate_measurements<R: Rng + ?Sized>(
    states: &[Vector],
    scenario: &Scenario,
    rng: &mut R,
) -> Result<Measurements> {
    let model = scenario.model()?;
    let r = tdoa_r(&scenario.tracking);
    let lr = gaussian_factor(&r);
    let sigma2 = &scenario.tracking.sigma2;
    let m = model.meas_dim();
    let mut ys = Vec::with_capacity(states.len());
    let mut masks = Vec::with_capacity(states.len());
    for x in states {
        let mut y = model.measurement(x)? + &lr * standard_normal(m, rng);
        let hits: Vec<bool> = (0..scenario.sensor_count).map(|_| rng.random::<f64>() < scenario.lambda).collect();
        let mut clean = vec![true; m];
        for j in 0..m {
            if hits[0] || hits[j + 1] {
                clean[j] = false;
                let var = scenario.gamma * (sigma2[0] + sigma2[j + 1]);
                y[j] += outlier_draw(scenario.outlier_law, var, rng);
            }
        }
        ys.push(y);
        masks.push(RejectorMask::from_flags(clean));
    }
    Ok(Measurements { ys, masks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factor_reproduces_covariance() {
        let s = Scenario::default();
        let q = s.initial_cov();
        let l = gaussian_factor(&q);
        assert!((&l * l.transpose() - &q).amax() < 1e-14);
        assert_eq!(gaussian_factor(&Matrix::zeros(3, 3)), Matrix::zeros(3, 3));
    }

    #[test]
    fn zero_process_noise_gives_deterministic_turn() {
        let mut s = Scenario::default();
        s.tracking.eta1 = 0.0;
        s.tracking.eta2 = 0.0;
        s.horizon = 20;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let states = simulate_truth(&s, &mut rng).unwrap();
        let model = s.model().unwrap();
        let mut x = s.x0_vector();
        for st in &states {
            x = model.transition(&x).unwrap();
            assert_eq!(st, &x);
        }
    }

    #[test]
    fn contamination_extremes() {
        let mut s = Scenario::default();
        s.horizon = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let states = simulate_truth(&s, &mut rng).unwrap();
        s.lambda = 0.0;
        let clean = generate_measurements(&states, &s, &mut rng).unwrap();
        assert!(clean.masks.iter().all(|m| m.rejected_count() == 0));
        s.lambda = 1.0;
        let dirty = generate_measurements(&states, &s, &mut rng).unwrap();
        assert!(dirty.masks.iter().all(|m| m.retained().is_empty()));
    }

    #[test]
    fn outlier_laws_have_matched_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for law in [OutlierLaw::Gaussian, OutlierLaw::Uniform, OutlierLaw::Laplace] {
            let n = 200_000;
            let draws: Vec<f64> = (0..n).map(|_| outlier_draw(law, 4.0, &mut rng)).collect();
            let mean = draws.iter().sum::<f64>() / n as f64;
            let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(mean.abs() < 0.03, "{law:?} mean {mean}");
            assert!((var - 4.0).abs() < 0.1, "{law:?} var {var}");
        }
    }
}
