mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use robustssm::emorf::{emorf_step, run_filter};
use robustssm::emors::{emors_run, unscented_smoother};
use robustssm::simlab::{generate_measurements, initial_belief, mse, simulate_truth, Scenario};
use robustssm::{EmConfig, GaussianBelief, LinearModel, NoiseSpec, SmootherConfig, UtParams};

fn tracking_data(seed: u64, lambda: f64, horizon: usize) -> (Scenario, GaussianBelief, Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let mut s = Scenario::benchmark(6);
    s.lambda = lambda;
    s.gamma = 500.0;
    s.horizon = horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = initial_belief(&s, &mut rng);
    let truth = simulate_truth(&s, &mut rng).unwrap();
    let meas = generate_measurements(&truth, &s, &mut rng).unwrap();
    (s, init, truth, meas.ys)
}

#[test]
fn single_step_smoother_matches_filter_decisions() {
    let f = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let h = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    let model = LinearModel::new(f, h);
    let r = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0]);
    let noise = NoiseSpec::new(DMatrix::identity(2, 2) * 0.1, r).unwrap();
    let init = GaussianBelief::new(DVector::zeros(2), DMatrix::identity(2, 2));
    for y in [[0.1, 0.2, 0.3], [40.0, 0.0, 0.1], [0.0, -25.0, 30.0], [3.0, 3.0, 3.0]] {
        let y = DVector::from_row_slice(&y);
        let filt = emorf_step(&init, &y, &model, &noise, &EmConfig::default(), &UtParams::default()).unwrap();
        let cfg = SmootherConfig { max_outer: 50, ..Default::default() };
        let smooth = emors_run(std::slice::from_ref(&y), &model, &noise, &cfg, &init, &UtParams::default()).unwrap();
        assert_eq!(smooth.indicators[0], filt.indicators);
        assert_eq!(smooth.smoothed[0], filt.posterior);
        assert_eq!(smooth.iterations, filt.iterations);
    }
}

#[test]
fn clean_tracking_smoother_matches_plain_rts() {
    for seed in 0..5 {
        let (s, init, truth, ys) = tracking_data(seed, 0.0, 60);
        let model = s.model().unwrap();
        let noise = model.noise();
        let em = emors_run(&ys, &model, &noise, &s.smoother_config(), &init, &s.ut).unwrap();
        let plain = unscented_smoother(&ys, &model, &noise, &init, &s.ut).unwrap();
        let (a, b) = (mse(&em.smoothed, &truth), mse(&plain, &truth));
        assert!((a - b).abs() <= 0.02 * b, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn burst_outliers_smoother_beats_filter() {
    let (s, init, truth, mut ys) = tracking_data(7, 0.0, 60);
    for k in 25..30 {
        for j in 0..ys[k].len() {
            if (k + j) % 2 == 0 {
                ys[k][j] += 400.0 * if j % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
    }
    let model = s.model().unwrap();
    let noise = model.noise();
    let sm = emors_run(&ys, &model, &noise, &s.smoother_config(), &init, &s.ut).unwrap();
    for k in 25..30 {
        for j in 0..ys[k].len() {
            assert_eq!(sm.indicators[k].is_clean(j), (k + j) % 2 != 0, "k={k} j={j}");
        }
    }
    let filt = run_filter(&ys, &model, &noise, &s.em, &init, &s.ut);
    let filt_beliefs: Vec<_> = filt.steps.iter().map(|st| st.posterior.clone()).collect();
    assert!(mse(&sm.smoothed, &truth) < mse(&filt_beliefs, &truth));
}

#[test]
fn tracking_filter_runs_in_single_precision() {
    let model = robustssm::ssm::TrackingModel::<f32>::new(robustssm::ssm::TrackingParams::<f32>::benchmark(5)).unwrap();
    let noise = model.noise();
    let x0 = DVector::from_row_slice(&[0.0f32, 1.0, 0.0, -1.0, -0.0524]);
    let init = robustssm::belief::GaussianBelief::<f32>::new(x0.clone(), noise.q.clone());
    let mut x = x0;
    let mut ys = Vec::new();
    for k in 0..20 {
        x = robustssm::ssm::coordinated_turn_f(&x, 1.0).unwrap();
        let mut y = robustssm::ssm::tdoa_h(&x, model.sensors());
        if k == 10 {
            y[2] += 500.0;
        }
        ys.push(y);
    }
    let cfg = robustssm::emorf::EmConfig::<f32> { epsilon: 1e-4, ..Default::default() };
    let run = run_filter(&ys, &model, &noise, &cfg, &init, &robustssm::sigma::UtParams::<f32>::default());
    assert!(run.failure.is_none());
    assert!(!run.steps[10].indicators.is_clean(2));
    let err = (&run.steps[19].posterior.mean - &x).norm();
    assert!(err < 20.0, "final error {err}");
}

#[test]
fn affine_filter_and_smoother_match_closed_form() {
    let f = DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.0, 1.0, 0.1, 0.0, 0.0, 0.95]);
    let b = DVector::from_row_slice(&[0.0, 0.01, -0.02]);
    let h = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.5, 0.5, 1.0]);
    let c = DVector::from_row_slice(&[0.3, -1.0]);
    let q = DMatrix::from_row_slice(3, 3, &[0.01, 0.0, 0.0, 0.0, 0.02, 0.005, 0.0, 0.005, 0.03]);
    let r = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.2, 0.4]);
    let model = LinearModel::new(f.clone(), h.clone()).with_offsets(b.clone(), c.clone());
    let noise = NoiseSpec::new(q.clone(), r.clone()).unwrap();
    let m0 = DVector::from_row_slice(&[1.0, 0.0, 0.5]);
    let p0 = DMatrix::identity(3, 3) * 0.5;
    let ys: Vec<_> = (0..30).map(|k| DVector::from_row_slice(&[(k as f64 * 0.3).sin() + 1.0, 0.1 * k as f64])).collect();
    let kf = kalman(&f, &b, &h, &c, &q, &r, &m0, &p0, &ys, None);
    let sm = rts(&f, &kf);
    let ours = unscented_smoother(&ys, &model, &noise, &GaussianBelief::new(m0, p0), &UtParams::default()).unwrap();
    for (o, (m, p)) in ours.iter().zip(&sm) {
        assert!((&o.mean - m).amax() < 1e-9);
        assert!((&o.cov - p).amax() < 1e-9);
    }
}
