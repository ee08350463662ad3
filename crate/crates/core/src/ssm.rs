//! State-space model abstraction and the coordinated-turn / TDOA tracking model.

use nalgebra::{DMatrix, DVector};

use crate::linalg::all_finite;
use crate::{lit, Error, Result, Scalar};

/// `x_k = f(x_{k-1}) + q_{k-1}`, `y_k = h(x_k) + r_k` with additive Gaussian noise.
///
/// Jacobians default to central finite differences; models with closed forms
/// override them (the bound computations call them many times).
pub trait StateSpaceModel<T: Scalar>: Sync {
    fn state_dim(&self) -> usize;
    fn meas_dim(&self) -> usize;
    fn transition(&self, x: &DVector<T>) -> Result<DVector<T>>;
    fn measurement(&self, x: &DVector<T>) -> Result<DVector<T>>;

    fn transition_jacobian(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        finite_difference_jacobian(|v| self.transition(v), x)
    }

    fn measurement_jacobian(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        finite_difference_jacobian(|v| self.measurement(v), x)
    }
}

/// Central-difference Jacobian with step `ε^{1/3}·max(|xᵢ|, 1)`.
pub fn finite_difference_jacobian<T, G>(g: G, x: &DVector<T>) -> Result<DMatrix<T>>
where
    T: Scalar,
    G: Fn(&DVector<T>) -> Result<DVector<T>>,
{
    let base = T::default_epsilon().cbrt();
    let g0 = g(x)?;
    let mut jac = DMatrix::zeros(g0.len(), x.len());
    for j in 0..x.len() {
        let step = base * x[j].abs().max(T::one());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += step;
        xm[j] -= step;
        let diff = (g(&xp)? - g(&xm)?) / (step + step);
        jac.set_column(j, &diff);
    }
    Ok(jac)
}

/// Nominal process and measurement covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec<T: Scalar> {
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(q: DMatrix<T>, r: DMatrix<T>) -> Result<Self> {
        let spec = Self { q, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.q.is_square() || !self.r.is_square() {
            return Err(Error::Dimension("Q and R must be square".into()));
        }
        let tol = lit::<T>(1e-12);
        let sym = |m: &DMatrix<T>| (m - m.transpose()).amax() <= tol * m.amax().max(T::one());
        if !sym(&self.q) || !sym(&self.r) {
            return Err(Error::InvalidParameter("noise covariances must be symmetric".into()));
        }
        if self.r.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter("R must be positive definite".into()));
        }
        Ok(())
    }
}

/// Parameters of the coordinated-turn target and the TDOA sensor array.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingParams<T: Scalar> {
    /// Sampling period (s).
    pub zeta: T,
    /// Position/velocity process-noise scale.
    pub eta1: T,
    /// Turn-rate process-noise scale.
    pub eta2: T,
    pub sensor_count: usize,
    /// Per-sensor TOA variance contributions, one per sensor.
    pub sigma2: Vec<T>,
    /// Sensor spacing along the zig-zag (m).
    pub spacing: T,
}

impl<T: Scalar> TrackingParams<T> {
    /// Benchmark defaults: `ζ=1`, `η₁=0.1`, `η₂=1.75e-4`, `σ²ᵢ=10`, spacing 350 m.
    pub fn benchmark(sensor_count: usize) -> Self {
        Self {
            zeta: T::one(),
            eta1: lit(0.1),
            eta2: lit(1.75e-4),
            sensor_count,
            sigma2: vec![lit(10.0); sensor_count],
            spacing: lit(350.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.zeta > T::zero()) {
            return bad("zeta must be positive");
        }
        if !(self.eta1 >= T::zero()) || !(self.eta2 >= T::zero()) {
            return bad("eta1 and eta2 must be non-negative");
        }
        if self.sensor_count < 2 {
            return bad("at least two sensors are required");
        }
        if self.sigma2.len() != self.sensor_count {
            return bad("sigma2 must have one entry per sensor");
        }
        if self.sigma2.iter().any(|s| !(*s > T::zero())) {
            return bad("sigma2 entries must be positive");
        }
        if !(self.spacing > T::zero()) {
            return bad("sensor spacing must be positive");
        }
        Ok(())
    }

    /// Zig-zag placement: sensor `i` (0-based) at `(d·i, d·(i mod 2))`.
    pub fn sensor_positions(&self) -> Vec<(T, T)> {
        (0..self.sensor_count)
            .map(|i| {
                let a = self.spacing * lit(i as f64);
                let b = self.spacing * lit((i % 2) as f64);
                (a, b)
            })
            .collect()
    }
}

/// Below this `|ω·ζ|` the transition uses its series form.
pub const TURN_RATE_GUARD: f64 = 1e-9;
// The ω-derivatives divide by ω², so they switch to series much earlier.
const JACOBIAN_SERIES_BELOW: f64 = 1e-3;

/// `sin(u)/u` and `(cos(u) - 1)/u`.
fn turn_terms<T: Scalar>(u: T) -> (T, T) {
    if u.abs() < lit(TURN_RATE_GUARD) {
        let u2 = u * u;
        (T::one() - u2 / lit(6.0), -u / lit(2.0))
    } else {
        let half = u * lit(0.5);
        let sh = half.sin();
        (u.sin() / u, -(sh * sh) * lit(2.0) / u)
    }
}

/// Derivatives of [`turn_terms`] with respect to `u`.
fn turn_term_derivatives<T: Scalar>(u: T) -> (T, T) {
    if u.abs() < lit(JACOBIAN_SERIES_BELOW) {
        let u2 = u * u;
        let d1 = -u / lit(3.0) + u * u2 / lit(30.0);
        let d2 = lit::<T>(-0.5) + u2 / lit(8.0) - u2 * u2 / lit(144.0);
        (d1, d2)
    } else {
        let (s, c) = (u.sin(), u.cos());
        let u2 = u * u;
        ((u * c - s) / u2, (T::one() - c - u * s) / u2)
    }
}

/// Coordinated-turn transition for `x = [a, ȧ, b, ḃ, ω]`.
pub fn coordinated_turn_f<T: Scalar>(x: &DVector<T>, zeta: T) -> Result<DVector<T>> {
    if x.len() != 5 {
        return Err(Error::Dimension(format!("expected 5-state, got {}", x.len())));
    }
    if !all_finite(x) {
        return Err(Error::NonFiniteState);
    }
    let (a, ad, b, bd, w) = (x[0], x[1], x[2], x[3], x[4]);
    let u = w * zeta;
    let (g1, g2) = turn_terms(u);
    let (s, c) = (u.sin(), u.cos());
    // sin(ωζ)/ω = ζ·g1, (cos(ωζ)-1)/ω = ζ·g2
    let sw = zeta * g1;
    let cw = zeta * g2;
    Ok(DVector::from_vec(vec![
        a + sw * ad + cw * bd,
        c * ad - s * bd,
        b - cw * ad + sw * bd,
        s * ad + c * bd,
        w,
    ]))
}

/// Analytic Jacobian of [`coordinated_turn_f`].
pub fn coordinated_turn_jacobian<T: Scalar>(x: &DVector<T>, zeta: T) -> Result<DMatrix<T>> {
    if x.len() != 5 {
        return Err(Error::Dimension(format!("expected 5-state, got {}", x.len())));
    }
    if !all_finite(x) {
        return Err(Error::NonFiniteState);
    }
    let (ad, bd, w) = (x[1], x[3], x[4]);
    let u = w * zeta;
    let (g1, g2) = turn_terms(u);
    let (d1, d2) = turn_term_derivatives(u);
    let (s, c) = (u.sin(), u.cos());
    let (sw, cw) = (zeta * g1, zeta * g2);
    let z2 = zeta * zeta;
    let (dsw, dcw) = (z2 * d1, z2 * d2);
    let (ds, dc) = (zeta * c, -zeta * s);
    let o = T::zero();
    let l = T::one();
    #[rustfmt::skip]
    let jac = DMatrix::from_row_slice(5, 5, &[
        l, sw, o, cw, dsw * ad + dcw * bd,
        o, c, o, -s, dc * ad - ds * bd,
        o, -cw, l, sw, -dcw * ad + dsw * bd,
        o, s, o, c, ds * ad + dc * bd,
        o, o, o, o, l,
    ]);
    Ok(jac)
}

/// Block-diagonal `[η₁M, η₁M, η₂]` with `M = [[ζ³/3, ζ²/2], [ζ²/2, ζ]]`.
pub fn tracking_q<T: Scalar>(params: &TrackingParams<T>) -> DMatrix<T> {
    let z = params.zeta;
    let m = [
        [z * z * z / lit(3.0), z * z / lit(2.0)],
        [z * z / lit(2.0), z],
    ];
    let mut q = DMatrix::zeros(5, 5);
    for blk in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                q[(2 * blk + i, 2 * blk + j)] = params.eta1 * m[i][j];
            }
        }
    }
    q[(4, 4)] = params.eta2;
    q
}

/// TDOA measurements against sensor 1: `hʲ = ‖p − s₁‖ − ‖p − s_{j+1}‖`.
pub fn tdoa_h<T: Scalar>(x: &DVector<T>, sensors: &[(T, T)]) -> DVector<T> {
    let range = |(sa, sb): (T, T)| {
        let da = x[0] - sa;
        let db = x[2] - sb;
        (da * da + db * db).sqrt()
    };
    let r1 = range(sensors[0]);
    DVector::from_iterator(
        sensors.len() - 1,
        sensors[1..].iter().map(|&s| r1 - range(s)),
    )
}

/// Fully populated TDOA covariance: `σ²₁ + σ²_{j+1}` on the diagonal, `σ²₁` elsewhere.
pub fn tdoa_r<T: Scalar>(params: &TrackingParams<T>) -> DMatrix<T> {
    let m = params.sensor_count - 1;
    let s1 = params.sigma2[0];
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            s1 + params.sigma2[i + 1]
        } else {
            s1
        }
    })
}

/// Analytic Jacobian of [`tdoa_h`]; only the position columns are non-zero.
pub fn tdoa_jacobian<T: Scalar>(x: &DVector<T>, sensors: &[(T, T)]) -> Result<DMatrix<T>> {
    let unit = |(sa, sb): (T, T)| -> Result<(T, T)> {
        let da = x[0] - sa;
        let db = x[2] - sb;
        let r = (da * da + db * db).sqrt();
        if r == T::zero() {
            return Err(Error::JacobianAtSensor);
        }
        Ok((da / r, db / r))
    };
    let (u1a, u1b) = unit(sensors[0])?;
    let mut jac = DMatrix::zeros(sensors.len() - 1, 5);
    for (j, &s) in sensors[1..].iter().enumerate() {
        let (ua, ub) = unit(s)?;
        jac[(j, 0)] = u1a - ua;
        jac[(j, 2)] = u1b - ub;
    }
    Ok(jac)
}

/// The coordinated-turn target observed by a TDOA array.
#[derive(Debug, Clone)]
pub struct TrackingModel<T: Scalar> {
    pub params: TrackingParams<T>,
    sensors: Vec<(T, T)>,
}

impl<T: Scalar> TrackingModel<T> {
    pub fn new(params: TrackingParams<T>) -> Result<Self> {
        params.validate()?;
        let sensors = params.sensor_positions();
        Ok(Self { params, sensors })
    }

    pub fn sensors(&self) -> &[(T, T)] {
        &self.sensors
    }

    pub fn noise(&self) -> NoiseSpec<T> {
        NoiseSpec {
            q: tracking_q(&self.params),
            r: tdoa_r(&self.params),
        }
    }
}

impl<T: Scalar> StateSpaceModel<T> for TrackingModel<T> {
    fn state_dim(&self) -> usize {
        5
    }

    fn meas_dim(&self) -> usize {
        self.params.sensor_count - 1
    }

    fn transition(&self, x: &DVector<T>) -> Result<DVector<T>> {
        coordinated_turn_f(x, self.params.zeta)
    }

    fn measurement(&self, x: &DVector<T>) -> Result<DVector<T>> {
        Ok(tdoa_h(x, &self.sensors))
    }

    fn transition_jacobian(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        coordinated_turn_jacobian(x, self.params.zeta)
    }

    fn measurement_jacobian(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        tdoa_jacobian(x, &self.sensors)
    }
}

/// Affine model `f(x) = F x + b_f`, `h(x) = H x + b_h`.
#[derive(Debug, Clone)]
pub struct LinearModel<T: Scalar> {
    pub f: DMatrix<T>,
    pub f_offset: DVector<T>,
    pub h: DMatrix<T>,
    pub h_offset: DVector<T>,
}

impl<T: Scalar> LinearModel<T> {
    pub fn new(f: DMatrix<T>, h: DMatrix<T>) -> Self {
        let (n, m) = (f.nrows(), h.nrows());
        Self {
            f,
            f_offset: DVector::zeros(n),
            h,
            h_offset: DVector::zeros(m),
        }
    }

    pub fn with_offsets(mut self, f_offset: DVector<T>, h_offset: DVector<T>) -> Self {
        self.f_offset = f_offset;
        self.h_offset = h_offset;
        self
    }
}

impl<T: Scalar> StateSpaceModel<T> for LinearModel<T> {
    fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    fn meas_dim(&self) -> usize {
        self.h.nrows()
    }

    fn transition(&self, x: &DVector<T>) -> Result<DVector<T>> {
        Ok(&self.f * x + &self.f_offset)
    }

    fn measurement(&self, x: &DVector<T>) -> Result<DVector<T>> {
        Ok(&self.h * x + &self.h_offset)
    }

    fn transition_jacobian(&self, _x: &DVector<T>) -> Result<DMatrix<T>> {
        Ok(self.f.clone())
    }

    fn measurement_jacobian(&self, _x: &DVector<T>) -> Result<DMatrix<T>> {
        Ok(self.h.clone())
    }
}

/// Model built from closures; Jacobians by finite differences.
pub struct FnModel<F, H> {
    pub n: usize,
    pub m: usize,
    pub f: F,
    pub h: H,
}

impl<T, F, H> StateSpaceModel<T> for FnModel<F, H>
where
    T: Scalar,
    F: Fn(&DVector<T>) -> DVector<T> + Sync,
    H: Fn(&DVector<T>) -> DVector<T> + Sync,
{
    fn state_dim(&self) -> usize {
        self.n
    }

    fn meas_dim(&self) -> usize {
        self.m
    }

    fn transition(&self, x: &DVector<T>) -> Result<DVector<T>> {
        Ok((self.f)(x))
    }

    fn measurement(&self, x: &DVector<T>) -> Result<DVector<T>> {
        Ok((self.h)(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn dense_turn_matrix(w: f64, z: f64) -> DMatrix<f64> {
        let (s, c) = ((w * z).sin(), (w * z).cos());
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(5, 5, &[
            1.0, s / w, 0.0, (c - 1.0) / w, 0.0,
            0.0, c, 0.0, -s, 0.0,
            0.0, (1.0 - c) / w, 1.0, s / w, 0.0,
            0.0, s, 0.0, c, 0.0,
            0.0, 0.0, 0.0, 0.0, 1.0,
        ]);
        m
    }

    #[test]
    fn turn_from_benchmark_initial_state() {
        let x0 = v(&[0.0, 1.0, 0.0, -1.0, -0.0524]);
        let out = coordinated_turn_f(&x0, 1.0).unwrap();
        let expected = dense_turn_matrix(-0.0524, 1.0) * &x0;
        assert!(out.iter().all(|x| x.is_finite()));
        assert_relative_eq!(out, expected, epsilon = 1e-12);
    }

    #[test]
    fn turn_zero_velocity_is_fixed_point() {
        let x = v(&[0.0, 0.0, 0.0, 0.0, 0.1]);
        assert_eq!(coordinated_turn_f(&x, 1.0).unwrap(), x);
    }

    #[test]
    fn turn_small_rate_matches_constant_velocity() {
        let x = v(&[1.0, 2.0, 3.0, 4.0, 1e-12]);
        let out = coordinated_turn_f(&x, 1.0).unwrap();
        assert_relative_eq!(out, v(&[3.0, 2.0, 7.0, 4.0, 1e-12]), epsilon = 1e-9);
    }

    #[test]
    fn turn_continuous_across_guard() {
        let x = v(&[1.0, 2.0, 3.0, 4.0, 0.0]);
        for sign in [-1.0, 1.0] {
            let mut below = x.clone();
            let mut above = x.clone();
            below[4] = sign * TURN_RATE_GUARD * 0.999_999;
            above[4] = sign * TURN_RATE_GUARD * 1.000_001;
            let lo = coordinated_turn_f(&below, 1.0).unwrap();
            let hi = coordinated_turn_f(&above, 1.0).unwrap();
            assert!((lo - hi).amax() < 1e-8);
        }
    }

    #[test]
    fn turn_rejects_non_finite() {
        let x = v(&[f64::NAN, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(coordinated_turn_f(&x, 1.0), Err(Error::NonFiniteState)));
    }

    #[test]
    fn q_benchmark_values() {
        let p = TrackingParams::<f64>::benchmark(3);
        let q = tracking_q(&p);
        assert_relative_eq!(q[(0, 0)], 0.1 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(q[(0, 1)], 0.05, epsilon = 1e-15);
        assert_relative_eq!(q[(1, 1)], 0.1, epsilon = 1e-15);
        assert_relative_eq!(q[(2, 3)], 0.05, epsilon = 1e-15);
        assert_eq!(q[(4, 4)], 1.75e-4);
        assert_eq!(q[(0, 2)], 0.0);
    }

    #[test]
    fn q_zero_eta1_leaves_turn_noise() {
        let mut p = TrackingParams::<f64>::benchmark(3);
        p.eta1 = 0.0;
        let q = tracking_q(&p);
        assert_eq!(q.view((0, 0), (4, 4)).amax(), 0.0);
        assert_eq!(q[(4, 4)], 1.75e-4);
    }

    #[test]
    fn q_zeta_two() {
        let mut p = TrackingParams::<f64>::benchmark(3);
        p.zeta = 2.0;
        p.eta1 = 1.0;
        let q = tracking_q(&p);
        assert_relative_eq!(q[(0, 0)], 8.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(q[(0, 1)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(q[(1, 1)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn h_at_reference_sensor() {
        let p = TrackingParams::<f64>::benchmark(4);
        let s = p.sensor_positions();
        let x = v(&[0.0, 0.0, 0.0, 0.0, 0.0]);
        let y = tdoa_h(&x, &s);
        for j in 0..3 {
            let (a, b) = s[j + 1];
            assert_relative_eq!(y[j], -(a * a + b * b).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn h_equidistant_is_zero() {
        let p = TrackingParams::<f64>::benchmark(3);
        let s = p.sensor_positions();
        // perpendicular bisector of (0,0)-(350,350) passes through (350, 0)
        let y = tdoa_h(&v(&[350.0, 0.0, 0.0, 0.0, 0.0]), &s);
        assert!(y[0].abs() < 1e-12);
    }

    #[test]
    fn h_hand_computed() {
        let p = TrackingParams::<f64>::benchmark(4);
        let s = p.sensor_positions();
        let y = tdoa_h(&v(&[100.0, 0.0, 50.0, 0.0, 0.0]), &s);
        let r1 = (100.0f64 * 100.0 + 50.0 * 50.0).sqrt();
        let r2 = (250.0f64 * 250.0 + 300.0 * 300.0).sqrt();
        let r3 = (600.0f64 * 600.0 + 50.0 * 50.0).sqrt();
        let r4 = (950.0f64 * 950.0 + 300.0 * 300.0).sqrt();
        assert_relative_eq!(y, v(&[r1 - r2, r1 - r3, r1 - r4]), epsilon = 1e-10);
    }

    #[test]
    fn r_benchmark_and_degenerate() {
        let p = TrackingParams::<f64>::benchmark(3);
        assert_eq!(tdoa_r(&p), DMatrix::from_row_slice(2, 2, &[20.0, 10.0, 10.0, 20.0]));
        let mut p = p;
        p.sigma2 = vec![1.0, 2.0, 3.0];
        let r = tdoa_r(&p);
        assert_eq!(r, DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 4.0]));
        let ev = r.symmetric_eigenvalues();
        assert!(ev.iter().all(|&e| e > 0.0));
        // σ²₁ = 0 is outside TrackingParams validation but the formula is still defined
        p.sigma2 = vec![0.0, 2.0, 3.0];
        assert_eq!(tdoa_r(&p), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]));
    }

    #[test]
    fn jacobian_columns_and_far_field() {
        let p = TrackingParams::<f64>::benchmark(5);
        let s = p.sensor_positions();
        let j = tdoa_jacobian(&v(&[123.0, 4.0, -77.0, 1.0, 0.01]), &s).unwrap();
        for col in [1, 3, 4] {
            assert_eq!(j.column(col).amax(), 0.0);
        }
        let far = tdoa_jacobian(&v(&[1e9, 0.0, 0.0, 0.0, 0.0]), &s).unwrap();
        assert!(far.amax() < 1e-6);
    }

    #[test]
    fn jacobian_at_sensor_errors() {
        let p = TrackingParams::<f64>::benchmark(3);
        let s = p.sensor_positions();
        let at = v(&[350.0, 0.0, 350.0, 0.0, 0.0]);
        assert!(matches!(tdoa_jacobian(&at, &s), Err(Error::JacobianAtSensor)));
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = TrackingParams::<f64>::benchmark(1);
        assert!(p.validate().is_err());
        p = TrackingParams::benchmark(3);
        p.zeta = 0.0;
        assert!(p.validate().is_err());
        p = TrackingParams::benchmark(3);
        p.sigma2[1] = -1.0;
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn jacobians_match_finite_differences(
            a in -2000.0f64..2000.0, ad in -20.0f64..20.0,
            b in -2000.0f64..2000.0, bd in -20.0f64..20.0,
            w in prop_oneof![-0.2f64..0.2, -1e-4f64..1e-4],
        ) {
            let model = TrackingModel::new(TrackingParams::<f64>::benchmark(6)).unwrap();
            let x = v(&[a, ad, b, bd, w]);
            let check = |an: DMatrix<f64>, fd: DMatrix<f64>| {
                let scale = an.amax().max(1.0);
                prop_assert!((an - fd).amax() <= 1e-5 * scale);
                Ok(())
            };
            let fd_f = finite_difference_jacobian(|z| model.transition(z), &x).unwrap();
            check(model.transition_jacobian(&x).unwrap(), fd_f)?;
            if let Ok(jh) = model.measurement_jacobian(&x) {
                let fd_h = finite_difference_jacobian(|z| model.measurement(z), &x).unwrap();
                check(jh, fd_h)?;
            }
        }

        #[test]
        fn q_is_psd_and_r_is_pd(
            zeta in 0.01f64..10.0, eta1 in 0.0f64..5.0, eta2 in 0.0f64..1.0,
            sig in proptest::collection::vec(0.01f64..100.0, 2..12),
        ) {
            let p = TrackingParams { zeta, eta1, eta2, sensor_count: sig.len(), sigma2: sig, spacing: 350.0 };
            let q = tracking_q(&p);
            prop_assert_eq!(&q, &q.transpose());
            prop_assert!(q.symmetric_eigenvalues().min() >= -1e-12);
            let r = tdoa_r(&p);
            prop_assert!(r.symmetric_eigenvalues().min() > 0.0);
        }
    }
}
