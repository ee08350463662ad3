//! TOML scenario documents.
//!
//! Every key is optional; an empty file yields the benchmark setup.

use std::path::PathBuf;

use anyhow::{bail, Result};
use robustssm::outlier::SweepOrder;
use robustssm::simlab::{Estimator, OutlierLaw, Scenario};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: Option<u32>,
    pub sensor_count: Option<usize>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub horizon: Option<usize>,
    pub mc_runs: Option<usize>,
    pub seed: Option<u64>,
    pub estimators: Option<Vec<Estimator>>,
    pub outlier_law: Option<OutlierLaw>,
    pub n_traj: Option<usize>,
    pub threads: Option<usize>,
    pub record_timing: Option<bool>,
    pub x0: Option<[f64; 5]>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub ut: UtSection,
    #[serde(default)]
    pub em: EmSection,
    #[serde(default)]
    pub smoother: SmootherSection,
    #[serde(default)]
    pub tracking: TrackingSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtSection {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum OrderSpec {
    Named(String),
    Custom(Vec<usize>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmSection {
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub order: Option<OrderSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmootherSection {
    pub max_outer: Option<usize>,
    pub warm_start: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Sigma2Spec {
    Shared(f64),
    PerSensor(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackingSection {
    pub zeta: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub sigma2: Option<Sigma2Spec>,
    pub spacing: Option<f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)?;
        if let Some(v) = file.schema_version {
            if v != SCHEMA_VERSION {
                bail!("unsupported schema_version {v} (expected {SCHEMA_VERSION})");
            }
        }
        Ok(file)
    }

    /// Applies the document on top of the benchmark defaults and validates the result.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let mut s = Scenario::benchmark(self.sensor_count.unwrap_or(10));
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(s.lambda, self.lambda);
        set!(s.gamma, self.gamma);
        set!(s.horizon, self.horizon);
        set!(s.mc_runs, self.mc_runs);
        set!(s.seed, self.seed);
        set!(s.estimators, self.estimators.clone());
        set!(s.outlier_law, self.outlier_law);
        set!(s.n_traj, self.n_traj);
        set!(s.record_timing, self.record_timing);
        set!(s.x0, self.x0);
        s.threads = self.threads;

        set!(s.ut.alpha, self.ut.alpha);
        set!(s.ut.beta, self.ut.beta);
        set!(s.ut.kappa, self.ut.kappa);

        set!(s.em.epsilon, self.em.epsilon);
        set!(s.em.theta, self.em.theta);
        set!(s.em.tol, self.em.tol);
        set!(s.em.max_iter, self.em.max_iter);
        if let Some(order) = &self.em.order {
            s.em.order = match order {
                OrderSpec::Named(n) if n == "ascending" => SweepOrder::Ascending,
                OrderSpec::Named(n) if n == "descending" => SweepOrder::Descending,
                OrderSpec::Named(n) => bail!("em.order: unknown order `{n}` (ascending, descending or a list)"),
                OrderSpec::Custom(v) => SweepOrder::Custom(v.clone()),
            };
        }

        set!(s.smoother_max_outer, self.smoother.max_outer);
        set!(s.smoother_warm_start, self.smoother.warm_start);

        set!(s.tracking.zeta, self.tracking.zeta);
        set!(s.tracking.eta1, self.tracking.eta1);
        set!(s.tracking.eta2, self.tracking.eta2);
        set!(s.tracking.spacing, self.tracking.spacing);
        match &self.tracking.sigma2 {
            Some(Sigma2Spec::Shared(v)) => s.tracking.sigma2 = vec![*v; s.sensor_count],
            Some(Sigma2Spec::PerSensor(v)) => s.tracking.sigma2 = v.clone(),
            None => {}
        }
        if let SweepOrder::Custom(idx) = &s.em.order {
            let m = s.sensor_count.saturating_sub(1);
            let mut sorted = idx.clone();
            sorted.sort_unstable();
            if sorted != (0..m).collect::<Vec<_>>() {
                bail!("em.order must be a permutation of 0..{m}");
            }
        }
        s.validate()?;
        Ok(s)
    }
}
