use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{generate_measurements, initial_belief, sample_trajectories, simulate_truth};
use super::rejector::{perfect_rejector_filter, perfect_rejector_smoother};
use super::stats::{boxplot_stats, BoxStats};
use super::{Estimator, Scenario};
use crate::bcrb::{bcrb_traces, fim_sequence, RejectorMask, TrajectoryMoments};
use crate::emorf::run_filter;
use crate::emors::{emors_run, unscented_smoother};
use crate::linalg::spd_inverse;
use crate::outlier::IndicatorVector;
use crate::ssm::{NoiseSpec, TrackingModel};
use crate::{Error, GaussianBelief, Result, Vector};

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub method: Estimator,
    pub mse: f64,
    pub wall_time_s: f64,
    /// Filter bound for filters, smoother bound for smoothers; normalized like `mse`.
    pub bcrb_trace: Option<f64>,
}

/// Indicator decisions of an EM estimator scored against the true masks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub run: usize,
    pub method: Estimator,
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl DetectionRecord {
    /// Fraction of flagged dimensions that were contaminated (1 when nothing is flagged).
    pub fn precision(&self) -> f64 {
        let flagged = self.true_positive + self.false_positive;
        if flagged == 0 {
            1.0
        } else {
            self.true_positive as f64 / flagged as f64
        }
    }

    /// Fraction of contaminated dimensions that were flagged (1 when none were).
    pub fn recall(&self) -> f64 {
        let actual = self.true_positive + self.false_negative;
        if actual == 0 {
            1.0
        } else {
            self.true_positive as f64 / actual as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub run: usize,
    /// Estimator name, or `bcrb` for the bound.
    pub method: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Estimator,
    pub completed_runs: usize,
    pub failed_runs: usize,
    pub mse: Option<BoxStats>,
    pub median_wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSummary {
    /// Mean over runs of `tr((J⁺_k)⁻¹)`, `k = 1 … K`.
    pub filter_per_step: Vec<f64>,
    /// Mean over runs of `tr((Jˢ_k)⁻¹)`.
    pub smoother_per_step: Vec<f64>,
    /// Per run: mean over `k` of `tr((J⁺_k)⁻¹) / n`.
    pub filter_per_run: Vec<f64>,
    pub smoother_per_run: Vec<f64>,
    pub filter_median: f64,
    pub smoother_median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub sensor_count: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub horizon: usize,
    pub mc_runs: usize,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
    pub runs: Vec<RunRecord>,
    pub detections: Vec<DetectionRecord>,
    pub failures: Vec<FailureRecord>,
    pub bound: Option<BoundSummary>,
}

impl McReport {
    pub fn summary(&self, method: Estimator) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn median_mse(&self, method: Estimator) -> Option<f64> {
        self.summary(method)?.mse.as_ref().map(|s| s.median)
    }

    /// Per-run MSE of `method` indexed by run; `None` where that run failed.
    pub fn mse_by_run(&self, method: Estimator) -> Vec<Option<f64>> {
        let mut out = vec![None; self.mc_runs];
        for r in self.runs.iter().filter(|r| r.method == method) {
            out[r.run] = Some(r.mse);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    pub fn results_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        write_results_csv(&self.runs, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// Writes `report.json` and `results.csv` into `dir`.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = self.to_json().map_err(std::io::Error::other)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        let csv = self.results_csv().map_err(std::io::Error::other)?;
        std::fs::write(dir.join("results.csv"), csv)
    }
}

pub fn write_results_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    if records.is_empty() {
        w.write_record(["run", "method", "mse", "wall_time_s", "bcrb_trace"])
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::InvalidParameter(e.to_string()))
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Mean over time steps and state dimensions of the squared estimation error.
pub fn mse(estimates: &[GaussianBelief], truth: &[Vector]) -> f64 {
    let total: f64 = estimates
        .iter()
        .zip(truth)
        .map(|(e, x)| (&e.mean - x).norm_squared())
        .sum();
    let count = truth.len() * truth.first().map_or(0, |x| x.len());
    total / count as f64
}

fn run_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn detection(run: usize, method: Estimator, inferred: &[IndicatorVector<f64>], truth: &[RejectorMask]) -> DetectionRecord {
    let mut rec = DetectionRecord { run, method, true_positive: 0, false_positive: 0, false_negative: 0 };
    for (ind, mask) in inferred.iter().zip(truth) {
        for (flag_clean, true_clean) in ind.flags().iter().zip(mask.flags()) {
            match (*flag_clean, *true_clean) {
                (false, false) => rec.true_positive += 1,
                (false, true) => rec.false_positive += 1,
                (true, false) => rec.false_negative += 1,
                (true, true) => {}
            }
        }
    }
    rec
}

struct RunOutcome {
    records: Vec<RunRecord>,
    detections: Vec<DetectionRecord>,
    failures: Vec<FailureRecord>,
    bound: Option<(Vec<f64>, Vec<f64>)>,
}

struct Shared<'a> {
    scenario: &'a Scenario,
    model: TrackingModel<f64>,
    noise: NoiseSpec<f64>,
    moments: Option<TrajectoryMoments<f64>>,
}

type EstimatorOutput = (Vec<GaussianBelief>, Option<Vec<IndicatorVector<f64>>>);

fn run_estimator(
    method: Estimator,
    shared: &Shared,
    ys: &[Vector],
    masks: &[RejectorMask],
    init: &GaussianBelief,
) -> Result<EstimatorOutput> {
    let s = shared.scenario;
    let (model, noise, ut) = (&shared.model, &shared.noise, &s.ut);
    Ok(match method {
        Estimator::Emorf => {
            let steps = run_filter(ys, model, noise, &s.em, init, ut).into_result()?;
            let ind = steps.iter().map(|st| st.indicators.clone()).collect();
            (steps.into_iter().map(|st| st.posterior).collect(), Some(ind))
        }
        Estimator::Emors => {
            let st = emors_run(ys, model, noise, &s.smoother_config(), init, ut)?;
            (st.smoothed, Some(st.indicators))
        }
        Estimator::Ukf => {
            let all = vec![RejectorMask::all_included(noise.r.nrows()); ys.len()];
            (perfect_rejector_filter(ys, &all, model, noise, init, ut)?, None)
        }
        Estimator::Urts => (unscented_smoother(ys, model, noise, init, ut)?, None),
        Estimator::IdealUkf => (perfect_rejector_filter(ys, masks, model, noise, init, ut)?, None),
        Estimator::IdealUrts => (perfect_rejector_smoother(ys, masks, model, noise, init, ut)?, None),
    })
}

fn run_bound(shared: &Shared, masks: &[RejectorMask]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let Some(moments) = &shared.moments else {
        return Ok(None);
    };
    let blocks = moments.blocks(&shared.noise.r, masks)?;
    let j0 = spd_inverse(&shared.scenario.initial_cov()).ok_or(Error::Singular("initial covariance"))?;
    let traces = bcrb_traces(&fim_sequence(&blocks, &j0)?)?;
    Ok(Some((traces.filter, traces.smoother)))
}

fn one_run(shared: &Shared, run: usize) -> RunOutcome {
    let s = shared.scenario;
    let mut out = RunOutcome { records: Vec::new(), detections: Vec::new(), failures: Vec::new(), bound: None };
    let mut rng = run_rng(s.seed, run as u64 + 1);
    let init = initial_belief(s, &mut rng);
    let data = simulate_truth(s, &mut rng).and_then(|truth| {
        let meas = generate_measurements(&truth, s, &mut rng)?;
        Ok((truth, meas))
    });
    let (truth, meas) = match data {
        Ok(d) => d,
        Err(e) => {
            out.failures.push(FailureRecord { run, method: "simulation".into(), message: e.to_string() });
            return out;
        }
    };

    let bound = match run_bound(shared, &meas.masks) {
        Ok(b) => b,
        Err(e) => {
            out.failures.push(FailureRecord { run, method: "bcrb".into(), message: e.to_string() });
            None
        }
    };
    let n = init.dim() as f64;
    let per_run = |v: &Vec<f64>| v.iter().sum::<f64>() / (v.len() as f64 * n);

    for &method in &s.estimators {
        let start = Instant::now();
        let result = run_estimator(method, shared, &meas.ys, &meas.masks, &init);
        let elapsed = start.elapsed().as_secs_f64();
        match result {
            Ok((beliefs, indicators)) => {
                let err = mse(&beliefs, &truth);
                if !err.is_finite() {
                    out.failures.push(FailureRecord { run, method: method.to_string(), message: "non-finite estimate".into() });
                    continue;
                }
                let bcrb_trace = bound.as_ref().map(|(f, sm)| per_run(if method.is_smoother() { sm } else { f }));
                out.records.push(RunRecord {
                    run,
                    method,
                    mse: err,
                    wall_time_s: if s.record_timing { elapsed } else { 0.0 },
                    bcrb_trace,
                });
                if let Some(ind) = indicators {
                    out.detections.push(detection(run, method, &ind, &meas.masks));
                }
            }
            Err(e) => out.failures.push(FailureRecord { run, method: method.to_string(), message: e.to_string() }),
        }
    }
    out.bound = bound;
    out
}

fn median(values: &[f64]) -> Option<f64> {
    boxplot_stats(values).ok().map(|s| s.median)
}

/// Runs every estimator of `scenario` over `mc_runs` independent draws.
///
/// Run `r` draws from ChaCha8 stream `r + 1` of `seed`; stream 0 feeds the
/// trajectory samples of the bound. Results do not depend on the thread count.
pub fn run_mc(scenario: &Scenario) -> Result<McReport> {
    scenario.validate()?;
    let model = scenario.model()?;
    let noise = model.noise();
    let moments = if scenario.n_traj > 0 {
        let mut rng = run_rng(scenario.seed, 0);
        let trajs = sample_trajectories(scenario, scenario.n_traj, &mut rng)?;
        Some(TrajectoryMoments::new(&trajs, &model, &noise.q)?)
    } else {
        None
    };
    let shared = Shared { scenario, model, noise, moments };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(scenario.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let outcomes: Vec<RunOutcome> =
        pool.install(|| (0..scenario.mc_runs).into_par_iter().map(|run| one_run(&shared, run)).collect());

    let mut runs = Vec::new();
    let mut detections = Vec::new();
    let mut failures = Vec::new();
    let mut bounds = Vec::new();
    for o in outcomes {
        runs.extend(o.records);
        detections.extend(o.detections);
        failures.extend(o.failures);
        bounds.extend(o.bound);
    }

    let mut failed: BTreeMap<&str, usize> = BTreeMap::new();
    for f in &failures {
        *failed.entry(f.method.as_str()).or_default() += 1;
    }
    let methods = scenario
        .estimators
        .iter()
        .map(|&method| {
            let mses: Vec<f64> = runs.iter().filter(|r| r.method == method).map(|r| r.mse).collect();
            let times: Vec<f64> = runs.iter().filter(|r| r.method == method).map(|r| r.wall_time_s).collect();
            MethodSummary {
                method,
                completed_runs: mses.len(),
                failed_runs: failed.get(method.name()).copied().unwrap_or(0),
                mse: boxplot_stats(&mses).ok(),
                median_wall_time_s: median(&times),
            }
        })
        .collect();

    let bound = (!bounds.is_empty()).then(|| {
        let count = bounds.len() as f64;
        let horizon = scenario.horizon;
        let mean_step = |pick: fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| -> Vec<f64> {
            (0..horizon).map(|k| bounds.iter().map(|b| pick(b)[k]).sum::<f64>() / count).collect()
        };
        let filter_per_step = mean_step(|b| &b.0);
        let smoother_per_step = mean_step(|b| &b.1);
        let n = 5.0 * horizon as f64;
        let filter_per_run: Vec<f64> = bounds.iter().map(|b| b.0.iter().sum::<f64>() / n).collect();
        let smoother_per_run: Vec<f64> = bounds.iter().map(|b| b.1.iter().sum::<f64>() / n).collect();
        BoundSummary {
            filter_median: median(&filter_per_run).unwrap_or(f64::NAN),
            smoother_median: median(&smoother_per_run).unwrap_or(f64::NAN),
            filter_per_step,
            smoother_per_step,
            filter_per_run,
            smoother_per_run,
        }
    });

    Ok(McReport {
        sensor_count: scenario.sensor_count,
        lambda: scenario.lambda,
        gamma: scenario.gamma,
        horizon: scenario.horizon,
        mc_runs: scenario.mc_runs,
        seed: scenario.seed,
        methods,
        runs,
        detections,
        failures,
        bound,
    })
}
