//! Monte Carlo experiment execution and CSV emission.

mod config;
mod output;
mod presets;

use std::ops::Range;

use rayon::prelude::*;

use crate::algorithms::{AlgorithmSpec, Simulator, TauInit, TrajectoryRecord};
use crate::analysis::{
    bound_inputs_from, reduce_in_order, BoundInputs, Summary, SummaryMeta, TrialAccumulator,
    REDUCTION_CHUNK,
};
use crate::error::Result;
use crate::graphs::GraphConstants;

pub use crate::algorithms::run_trajectory;
pub use crate::analysis::reference_curve as emit_reference_curve;
pub use crate::models::derive_trial_seed;
pub use config::{parse_config, ExperimentConfig, PopulationSpec};
pub use output::{
    write_bound_csv, write_outputs, write_summary_csv, write_trajectory_csv, OutputFiles,
};
pub use presets::{preset, preset_names, PRESETS};

/// Results for one algorithm of an experiment.
#[derive(Debug, Clone)]
pub struct AlgorithmRun {
    pub spec: AlgorithmSpec,
    pub label: String,
    pub summary: Summary,
    /// The first `trajectory_trials` trials, in trial order.
    pub trajectories: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub constants: GraphConstants,
    pub bound_inputs: BoundInputs,
    pub runs: Vec<AlgorithmRun>,
}

impl ExperimentReport {
    pub fn run(&self, label: &str) -> Option<&AlgorithmRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

/// Runs every configured algorithm over all trials and, when the config
/// names an output directory, writes the CSV files there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = simulate(config)?;
    if let Some(dir) = &config.output_dir {
        write_outputs(&report, config, dir)?;
    }
    Ok(report)
}

/// Same as [`run_experiment`] without touching the filesystem.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let constants = config.graphs().constants();
    let bound_inputs = bound_inputs_from(config.population(), &constants);
    let labels = algorithm_labels(&config.algorithms);
    let runs = config
        .algorithms
        .iter()
        .zip(labels)
        .map(|(spec, label)| {
            let (mut summary, trajectories) = run_trials(config, spec)?;
            summary.meta.algorithm = label.clone();
            summary.set_bound(&bound_inputs);
            Ok(AlgorithmRun {
                spec: *spec,
                label,
                summary,
                trajectories,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        name: config.name.clone(),
        constants,
        bound_inputs,
        runs,
    })
}

fn run_trials(
    config: &ExperimentConfig,
    spec: &AlgorithmSpec,
) -> Result<(Summary, Vec<TrajectoryRecord>)> {
    let sim = Simulator::new(&config.scenario, *spec)?;
    let n = config.population().len();
    let horizon = config.horizon();
    let theta_star = config.population().optimal_theta();
    let trials = config.trials as u32;
    let keep = config.trajectory_trials as u32;

    let chunks: Vec<Range<u32>> = (0..trials)
        .step_by(REDUCTION_CHUNK)
        .map(|start| start..(start + REDUCTION_CHUNK as u32).min(trials))
        .collect();
    let parts = chunks
        .into_par_iter()
        .map(|range| {
            let mut acc = TrialAccumulator::new(n, horizon, theta_star);
            let mut kept = Vec::new();
            for trial in range {
                let record = sim.run(config.master_seed, trial)?;
                acc.push(&record)?;
                if trial < keep {
                    kept.push(record);
                }
            }
            Ok((acc, kept))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trajectories = Vec::new();
    let mut accs = Vec::with_capacity(parts.len());
    for (acc, kept) in parts {
        accs.push(acc);
        trajectories.extend(kept);
    }
    let meta = SummaryMeta {
        topology: config.topology.label(),
        algorithm: String::new(),
        master_seed: config.master_seed,
    };
    let summary = reduce_in_order(n, horizon, theta_star, accs)?.finish(meta);
    Ok((summary, trajectories))
}

/// File-name friendly labels, unique within one experiment.
fn algorithm_labels(specs: &[AlgorithmSpec]) -> Vec<String> {
    let base: Vec<String> = specs
        .iter()
        .map(|s| match s.tau_init {
            TauInit::Paper => s.kind.name().to_string(),
            TauInit::Zero => format!("{}-tau0", s.kind.name()),
        })
        .collect();
    base.iter()
        .enumerate()
        .map(|(i, b)| {
            if base.iter().filter(|other| *other == b).count() > 1 {
                format!("{b}-{}", i + 1)
            } else {
                b.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::AlgorithmKind;

    #[test]
    fn labels_are_unique() {
        let p = AlgorithmSpec::new(AlgorithmKind::Proposed);
        let z = p.with_tau_init(TauInit::Zero);
        let b = AlgorithmSpec::new(AlgorithmKind::Biau);
        assert_eq!(
            algorithm_labels(&[p, z, b]),
            vec!["proposed", "proposed-tau0", "biau"]
        );
        assert_eq!(algorithm_labels(&[p, p]), vec!["proposed-1", "proposed-2"]);
    }
}
