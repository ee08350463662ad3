//! Monte Carlo harness for the TDOA tracking benchmark.
//!
//! A [`Scenario`] fixes the model, the contamination law and the estimators;
//! [`run_mc`] draws every run from its own seeded stream, runs all estimators
//! on the same data and aggregates the squared errors.

mod data;
mod mc;
mod rejector;
mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::emorf::EmConfig;
use crate::emors::SmootherConfig;
use crate::sigma::UtParams;
use crate::ssm::{tracking_q, TrackingModel, TrackingParams};
use crate::{Error, GaussianBelief, Result};

pub use data::{
    gaussian_factor, initial_belief, sample_trajectories, simulate_truth, generate_measurements,
    Measurements,
};
pub use mc::{
    mse, read_results_csv, run_mc, write_results_csv, BoundSummary, DetectionRecord,
    FailureRecord, McReport, MethodSummary, RunRecord,
};
pub use rejector::{perfect_rejector_filter, perfect_rejector_forward, perfect_rejector_smoother};
pub use stats::{boxplot_stats, BoxStats};

/// Initial target state `[a, ȧ, b, ḃ, ω]`.
pub const BENCHMARK_X0: [f64; 5] = [0.0, 1.0, 0.0, -1.0, -0.0524];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Emorf,
    Emors,
    /// Plain unscented filter.
    Ukf,
    /// Plain unscented RTS smoother.
    Urts,
    /// Unscented filter that knows the contamination pattern and drops bad dimensions.
    IdealUkf,
    IdealUrts,
}

impl Estimator {
    pub const ALL: [Estimator; 6] = [
        Estimator::Emorf,
        Estimator::Emors,
        Estimator::Ukf,
        Estimator::Urts,
        Estimator::IdealUkf,
        Estimator::IdealUrts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Emorf => "emorf",
            Estimator::Emors => "emors",
            Estimator::Ukf => "ukf",
            Estimator::Urts => "urts",
            Estimator::IdealUkf => "ideal_ukf",
            Estimator::IdealUrts => "ideal_urts",
        }
    }

    pub fn is_smoother(self) -> bool {
        matches!(self, Estimator::Emors | Estimator::Urts | Estimator::IdealUrts)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Estimator::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimator `{s}`")))
    }
}

/// Distribution of the additive outlier on a contaminated dimension.
///
/// All laws have zero mean and variance `γ(σ²₁ + σ²_{j+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierLaw {
    #[default]
    Gaussian,
    Uniform,
    Laplace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub sensor_count: usize,
    /// Per-sensor contamination probability.
    pub lambda: f64,
    /// Outlier variance scale.
    pub gamma: f64,
    pub horizon: usize,
    pub mc_runs: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub ut: UtParams<f64>,
    pub em: EmConfig<f64>,
    pub smoother_max_outer: usize,
    pub smoother_warm_start: bool,
    pub tracking: TrackingParams<f64>,
    pub x0: [f64; 5],
    pub outlier_law: OutlierLaw,
    /// Trajectory samples for the bound expectations; 0 disables the bound.
    pub n_traj: usize,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// When false every wall time is reported as 0 so outputs are byte-stable.
    pub record_timing: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::benchmark(10)
    }
}

impl Scenario {
    /// Benchmark setup with `sensor_count` sensors, no contamination.
    pub fn benchmark(sensor_count: usize) -> Self {
        Self {
            sensor_count,
            lambda: 0.0,
            gamma: 200.0,
            horizon: 100,
            mc_runs: 100,
            seed: 0,
            estimators: Estimator::ALL.to_vec(),
            ut: UtParams::default(),
            em: EmConfig::default(),
            smoother_max_outer: SmootherConfig::<f64>::default().max_outer,
            smoother_warm_start: true,
            tracking: TrackingParams::benchmark(sensor_count),
            x0: BENCHMARK_X0,
            outlier_law: OutlierLaw::Gaussian,
            n_traj: 200,
            threads: None,
            record_timing: true,
        }
    }

    /// Changes the array size, keeping the first sensor's variance for added sensors.
    pub fn set_sensor_count(&mut self, m: usize) {
        self.sensor_count = m;
        self.tracking.sensor_count = m;
        let fill = self.tracking.sigma2.first().copied().unwrap_or(10.0);
        self.tracking.sigma2.resize(m, fill);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be positive");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1");
        }
        if self.mc_runs == 0 {
            return bad("mc_runs must be at least 1");
        }
        if self.tracking.sensor_count != self.sensor_count {
            return bad("tracking.sensor_count disagrees with sensor_count");
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        if self.smoother_max_outer == 0 {
            return bad("smoother max_outer must be at least 1");
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return bad("initial state must be finite");
        }
        self.tracking.validate()?;
        self.em.validate()?;
        self.ut.weights(5)?;
        Ok(())
    }

    pub fn model(&self) -> Result<TrackingModel<f64>> {
        TrackingModel::new(self.tracking.clone())
    }

    pub fn smoother_config(&self) -> SmootherConfig<f64> {
        SmootherConfig {
            em: self.em.clone(),
            max_outer: self.smoother_max_outer,
            warm_start: self.smoother_warm_start,
        }
    }

    /// Prior covariance of the initial state (`P₀ = Q`).
    pub fn initial_cov(&self) -> crate::Matrix {
        tracking_q(&self.tracking)
    }

    pub fn x0_vector(&self) -> crate::Vector {
        crate::Vector::from_row_slice(&self.x0)
    }

    /// Belief centred on the true initial state, for tests that skip the random draw.
    pub fn exact_initial_belief(&self) -> GaussianBelief {
        GaussianBelief::new(self.x0_vector(), self.initial_cov())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert!("kalman".parse::<Estimator>().is_err());
    }

    #[test]
    fn validation_catches_ranges() {
        let mut s = Scenario::default();
        assert!(s.validate().is_ok());
        s.lambda = 1.5;
        assert!(s.validate().is_err());
        let mut s = Scenario::default();
        s.gamma = 0.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::default();
        s.mc_runs = 0;
        assert!(s.validate().is_err());
        let mut s = Scenario::default();
        s.sensor_count = 4;
        assert!(s.validate().is_err());
        s.set_sensor_count(4);
        assert!(s.validate().is_ok());
        assert_eq!(s.tracking.sigma2.len(), 4);
    }
}
