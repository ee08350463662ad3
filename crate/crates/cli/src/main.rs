//! `robustssm`: run the outlier-robust estimators on the TDOA tracking benchmark.

mod scenario_file;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use robustssm::simlab::{run_mc, BoundSummary, Estimator, McReport, Scenario};

use scenario_file::ScenarioFile;

#[derive(Parser)]
#[command(name = "robustssm", version, about = "Outlier-robust filtering and smoothing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Monte Carlo batch and write report.json and results.csv.
    Run(Common),
    /// Run one batch per value of a scenario parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long = "sweep-axis", value_enum)]
        axis: Axis,
        /// Comma-separated values, e.g. `0,0.1,0.2`.
        #[arg(long = "sweep-values", value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Compute only the perfect-rejector error bounds.
    Bound(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML). Without it the benchmark defaults are used.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sensors: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `results`, or `out_dir` from the scenario).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated estimator names.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Lambda,
    Sensors,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Lambda => "lambda",
            Axis::Sensors => "sensors",
        }
    }
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

type CliResult<T> = Result<T, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

const THREADS_ENV: &str = "ROBUSTSSM_THREADS";

fn load(common: &Common) -> CliResult<(Scenario, PathBuf)> {
    let file = match &common.scenario {
        Some(path) => {
            if !path.is_file() {
                return Err(usage(anyhow!("scenario not found: {}", path.display())));
            }
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))
                .map_err(usage)?;
            ScenarioFile::parse(&text)
                .with_context(|| format!("in {}", path.display()))
                .map_err(usage)?
        }
        None => ScenarioFile::default(),
    };
    let mut s = file.to_scenario().map_err(usage)?;
    if let Some(m) = common.sensors {
        s.set_sensor_count(m);
    }
    if let Some(v) = common.lambda {
        s.lambda = v;
    }
    if let Some(v) = common.gamma {
        s.gamma = v;
    }
    if let Some(v) = common.runs {
        s.mc_runs = v;
    }
    if let Some(v) = common.seed {
        s.seed = v;
    }
    if let Some(list) = &common.estimators {
        s.estimators = list
            .iter()
            .map(|name| name.trim().parse::<Estimator>())
            .collect::<Result<_, _>>()
            .map_err(usage)?;
    }
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let cap: usize = raw
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(anyhow!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
        s.threads = Some(s.threads.map_or(cap, |t| t.min(cap)));
    }
    s.validate().map_err(usage)?;
    let out = common.out.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("results"));
    Ok((s, out))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn summary_table(rep: &McReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<11} {:>5} {:>6} {:>12} {:>12} {:>12} {:>12} {:>11}",
        "method", "ok", "failed", "median_mse", "q1", "q3", "bcrb", "median_s"
    );
    for m in &rep.methods {
        let bound = rep.bound.as_ref().map(|b| if m.method.is_smoother() { b.smoother_median } else { b.filter_median });
        let _ = writeln!(
            out,
            "{:<11} {:>5} {:>6} {:>12} {:>12} {:>12} {:>12} {:>11}",
            m.method.name(),
            m.completed_runs,
            m.failed_runs,
            fmt_opt(m.mse.as_ref().map(|s| s.median)),
            fmt_opt(m.mse.as_ref().map(|s| s.q1)),
            fmt_opt(m.mse.as_ref().map(|s| s.q3)),
            fmt_opt(bound),
            m.median_wall_time_s.map_or_else(|| "-".to_string(), |t| format!("{t:.2e}")),
        );
    }
    if let Some(b) = &rep.bound {
        let _ = writeln!(out, "bound (median per-run): filter {:.4}, smoother {:.4}", b.filter_median, b.smoother_median);
    }
    if !rep.failures.is_empty() {
        let _ = writeln!(out, "{} estimator failures excluded (see report.json)", rep.failures.len());
    }
    out
}

fn execute(s: &Scenario) -> CliResult<McReport> {
    run_mc(s).context("Monte Carlo batch failed").map_err(runtime)
}

fn cmd_run(common: &Common) -> CliResult<()> {
    let (s, out) = load(common)?;
    let rep = execute(&s)?;
    rep.write_files(&out).with_context(|| format!("writing to {}", out.display())).map_err(runtime)?;
    print!("{}", summary_table(&rep));
    println!("wrote {} and {}", out.join("report.json").display(), out.join("results.csv").display());
    Ok(())
}

fn sweep_point(base: &Scenario, axis: Axis, value: f64) -> CliResult<Scenario> {
    let mut s = base.clone();
    match axis {
        Axis::Lambda => s.lambda = value,
        Axis::Sensors => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(usage(anyhow!("sensor counts must be whole numbers, got {value}")));
            }
            s.set_sensor_count(value as usize);
        }
    }
    s.validate().map_err(usage)?;
    Ok(s)
}

fn cmd_sweep(common: &Common, axis: Axis, values: &[f64]) -> CliResult<()> {
    let (base, out) = load(common)?;
    let points: Vec<Scenario> = values.iter().map(|&v| sweep_point(&base, axis, v)).collect::<CliResult<_>>()?;
    std::fs::create_dir_all(&out).map_err(runtime)?;
    let mut combined = csv::Writer::from_path(out.join("sweep.csv")).map_err(runtime)?;
    combined
        .write_record(["axis", "value", "run", "method", "mse", "wall_time_s", "bcrb_trace"])
        .map_err(runtime)?;
    println!("{:<8} {:>8} median mse per method", axis.name(), "");
    for (value, s) in values.iter().zip(&points) {
        let rep = execute(s)?;
        let dir = out.join(format!("{}_{}", axis.name(), value));
        rep.write_files(&dir).with_context(|| format!("writing to {}", dir.display())).map_err(runtime)?;
        for r in &rep.runs {
            combined
                .write_record([
                    axis.name().to_string(),
                    value.to_string(),
                    r.run.to_string(),
                    r.method.to_string(),
                    r.mse.to_string(),
                    r.wall_time_s.to_string(),
                    r.bcrb_trace.map_or_else(String::new, |b| b.to_string()),
                ])
                .map_err(runtime)?;
        }
        let cells: Vec<String> = rep
            .methods
            .iter()
            .map(|m| format!("{}={}", m.method.name(), fmt_opt(m.mse.as_ref().map(|b| b.median))))
            .collect();
        println!("{:<8} {:>8} {}", axis.name(), value, cells.join(" "));
    }
    combined.flush().map_err(runtime)?;
    println!("wrote {}", out.join("sweep.csv").display());
    Ok(())
}

fn write_bound(dir: &Path, bound: &BoundSummary) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("bound.csv"))?;
    w.write_record(["k", "filter_trace", "smoother_trace"])?;
    for (k, (f, s)) in bound.filter_per_step.iter().zip(&bound.smoother_per_step).enumerate() {
        w.write_record([(k + 1).to_string(), f.to_string(), s.to_string()])?;
    }
    w.flush()?;
    std::fs::write(dir.join("bound.json"), serde_json::to_string_pretty(bound)? + "\n")?;
    Ok(())
}

fn cmd_bound(common: &Common) -> CliResult<()> {
    let (mut s, out) = load(common)?;
    s.estimators.clear();
    if s.n_traj == 0 {
        return Err(usage(anyhow!("n_traj must be positive to compute the bound")));
    }
    let rep = execute(&s)?;
    let bound = rep
        .bound
        .as_ref()
        .ok_or_else(|| runtime(anyhow!("bound failed in every run: {:?}", rep.failures.first())))?;
    write_bound(&out, bound).with_context(|| format!("writing to {}", out.display())).map_err(runtime)?;
    println!("{:>5} {:>14} {:>14}", "k", "filter_trace", "smoother_trace");
    for (k, (f, sm)) in bound.filter_per_step.iter().zip(&bound.smoother_per_step).enumerate() {
        println!("{:>5} {:>14.6} {:>14.6}", k + 1, f, sm);
    }
    println!("wrote {}", out.join("bound.csv").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep { common, axis, values } => cmd_sweep(common, *axis, values),
        Command::Bound(c) => cmd_bound(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
