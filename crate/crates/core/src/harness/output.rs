//! CSV schemas. Floats are printed with 17 significant digits so values
//! round-trip exactly; agents are labelled from 1.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{ExperimentConfig, ExperimentReport};
use crate::algorithms::TrajectoryRecord;
use crate::analysis::{error_bound, reference_curve, BoundInputs, Curve, Summary};
use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 5] = ["trial", "k", "agent", "theta", "tau"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "k",
    "agent",
    "mean_theta",
    "mean_abs_error",
    "abs_mean_error",
    "std_theta",
    "bound",
];
pub const BOUND_HEADER: [&str; 2] = ["k", "bound"];

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trajectory_csv(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for r in records {
        for k in 0..r.steps() {
            for i in 0..r.n {
                w.write_record([
                    r.trial.to_string(),
                    k.to_string(),
                    (i + 1).to_string(),
                    fmt(r.theta(k, i)),
                    fmt(r.tau(k, i)),
                ])?;
            }
        }
    }
    finish(w, path)
}

pub fn write_summary_csv(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for k in 0..summary.steps() {
        let bound = summary.bound_at(k).map(fmt).unwrap_or_default();
        for i in 0..summary.n {
            w.write_record([
                k.to_string(),
                (i + 1).to_string(),
                fmt(summary.value(Curve::MeanTheta, k, i)),
                fmt(summary.value(Curve::MeanAbsError, k, i)),
                fmt(summary.value(Curve::AbsMeanError, k, i)),
                fmt(summary.value(Curve::StdTheta, k, i)),
                bound.clone(),
            ])?;
        }
    }
    finish(w, path)
}

/// The `O(1/k)` bound for `k = 1..=horizon`.
pub fn write_bound_csv(path: &Path, b: &BoundInputs, horizon: usize) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(BOUND_HEADER)?;
    for k in 1..=horizon {
        w.write_record([k.to_string(), fmt(error_bound(k, b)?)])?;
    }
    finish(w, path)
}

/// Rate guides anchored at the first algorithm's agent-averaged mean
/// absolute error at `k = 1`: `e1/k` and `e1 k^(-1/d)` with `d` the maximum
/// degree of the schedule.
fn write_reference_csv(path: &Path, summary: &Summary, max_degree: usize) -> Result<()> {
    let e1 = summary
        .agent_mean_curve(Curve::MeanAbsError)
        .get(1)
        .copied()
        .unwrap_or(0.0);
    let d = max_degree.max(1) as f64;
    let inv_k = reference_curve(e1, 1.0, summary.horizon);
    let inv_kd = reference_curve(e1, 1.0 / d, summary.horizon);
    let mut w = csv_writer(path)?;
    w.write_record(["k", "rate_1", "rate_1_over_d"])?;
    for ((k, a), (_, b)) in inv_k.into_iter().zip(inv_kd) {
        w.write_record([k.to_string(), fmt(a), fmt(b)])?;
    }
    finish(w, path)
}

fn write_metadata(path: &Path, report: &ExperimentReport, config: &ExperimentConfig) -> Result<()> {
    let gc = &report.constants;
    let b = &report.bound_inputs;
    let pop = config.population();
    let theta_init: Vec<String> = pop.profiles().iter().map(|p| fmt(p.theta_init)).collect();
    let mut text = String::new();
    text.push_str(&format!("name = \"{}\"\n", config.name));
    text.push_str(&format!("topology = \"{}\"\n", config.topology.label()));
    text.push_str(&format!("population = \"{}\"\n", config.population_spec));
    text.push_str(&format!("theta_init = [{}]\n", theta_init.join(", ")));
    text.push_str(&format!("theta_star = {}\n", fmt(pop.optimal_theta())));
    text.push_str(&format!(
        "algorithms = [{}]\n",
        report
            .runs
            .iter()
            .map(|r| format!("\"{}\"", r.label))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    text.push_str(&format!("horizon = {}\n", config.horizon()));
    text.push_str(&format!("trials = {}\n", config.trials));
    text.push_str(&format!("master_seed = {}\n", config.master_seed));
    text.push_str(&format!("noise_enabled = {}\n", config.noise_enabled()));
    text.push_str(&format!("window = {}\n", gc.window));
    text.push_str(&format!("regular = {}\n", gc.regular));
    text.push_str(&format!("C = {}\n", fmt(gc.c)));
    text.push_str(&format!("lambda = {}\n", fmt(gc.lambda)));
    text.push_str(&format!("one_minus_lambda = {}\n", fmt(gc.gap)));
    text.push_str(&format!("delta = {}\n", fmt(gc.delta)));
    text.push_str(&format!("tau_max = {}\n", fmt(b.tau_max)));
    text.push_str(&format!("tau_min = {}\n", fmt(b.tau_min)));
    text.push_str(&format!("init_l1 = {}\n", fmt(b.init_l1)));
    text.push_str(&format!("mean_l1 = {}\n", fmt(b.mean_l1)));
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, Default)]
pub struct OutputFiles {
    pub files: Vec<PathBuf>,
}

pub fn write_outputs(
    report: &ExperimentReport,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<OutputFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = OutputFiles::default();
    for run in &report.runs {
        let summary = dir.join(format!("summary_{}.csv", run.label));
        write_summary_csv(&summary, &run.summary)?;
        out.files.push(summary);
        let traj = dir.join(format!("trajectory_{}.csv", run.label));
        write_trajectory_csv(&traj, &run.trajectories)?;
        out.files.push(traj);
    }
    let bound = dir.join("bound.csv");
    write_bound_csv(&bound, &report.bound_inputs, config.horizon())?;
    out.files.push(bound);
    if let Some(first) = report.runs.first() {
        let reference = dir.join("reference.csv");
        write_reference_csv(&reference, &first.summary, config.graphs().max_degree())?;
        out.files.push(reference);
    }
    let meta = dir.join("run.toml");
    write_metadata(&meta, report, config)?;
    out.files.push(meta);
    Ok(out)
}
