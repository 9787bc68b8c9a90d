use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dgest::analysis::Curve;
use dgest::graphs::validate_b_connectivity;
use dgest::harness::{self, ExperimentConfig};
use dgest::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "dgest",
    version,
    about = "Distributed Gaussian estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Source {
    /// Experiment config file (TOML)
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Name of a shipped preset instead of a file
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = match (&self.config, &self.preset) {
            (Some(path), _) => std::fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?,
            (None, Some(name)) => harness::preset(name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown preset '{name}'")))?
                .to_string(),
            (None, None) => unreachable!("clap requires one source"),
        };
        harness::parse_config(&text)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write CSV output
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (overrides output_dir; default out/<name>)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Check the connectivity window and print mixing constants
    CheckGraph {
        #[command(flatten)]
        source: Source,
        /// Steps used for the empirical row-sum floor
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Write the O(1/k) error bound curve as CSV
    Bound {
        #[command(flatten)]
        source: Source,
        /// Output file (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// List shipped scenarios, or print one
    Presets {
        #[arg(long)]
        show: Option<String>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            source,
            out,
            trials,
            seed,
            horizon,
        } => {
            let mut cfg = source.load()?;
            if let Some(t) = trials {
                cfg.set_trials(t)?;
                cfg.trajectory_trials = cfg.trajectory_trials.min(t);
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(h) = horizon {
                cfg.set_horizon(h)?;
            }
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
            cfg.output_dir = Some(dir.clone());
            let report = harness::run_experiment(&cfg)?;
            println!(
                "{}: {} trials, horizon {}, theta* = {:.6}",
                report.name,
                cfg.trials,
                cfg.horizon(),
                cfg.population().optimal_theta()
            );
            let checkpoints: Vec<usize> = [1usize, 10, 100, 1000, 10_000, 100_000]
                .into_iter()
                .filter(|&k| k <= cfg.horizon())
                .collect();
            for run in &report.runs {
                let curve = run.summary.agent_mean_curve(Curve::MeanAbsError);
                let cells: Vec<String> = checkpoints
                    .iter()
                    .map(|&k| format!("k={k}: {:.3e}", curve[k]))
                    .collect();
                println!(
                    "  {:<14} mean |theta - theta*|  {}",
                    run.label,
                    cells.join("  ")
                );
            }
            println!("wrote {}", dir.display());
            Ok(())
        }
        Command::CheckGraph { source, steps } => {
            let cfg = source.load()?;
            let seq = cfg.graphs();
            let gc = seq.constants();
            let ok = validate_b_connectivity(seq, seq.window());
            println!("topology: {}", cfg.topology.label());
            println!(
                "agents: {}, period: {}, window B: {}",
                seq.n(),
                seq.period(),
                seq.window()
            );
            println!("B-strongly connected: {ok}");
            println!("regular: {}", gc.regular);
            println!("C = {}", gc.c);
            println!("lambda = {:.17e} (1 - lambda = {:.6e})", gc.lambda, gc.gap);
            println!("delta (lower bound) = {:.6e}", gc.delta);
            println!(
                "delta (empirical, {steps} steps) = {:.6e}",
                seq.empirical_delta(steps)
            );
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidGraph(format!(
                    "schedule is not {}-strongly connected",
                    seq.window()
                )))
            }
        }
        Command::Bound {
            source,
            out,
            horizon,
        } => {
            let mut cfg = source.load()?;
            if let Some(h) = horizon {
                cfg.set_horizon(h)?;
            }
            let gc = cfg.graphs().constants();
            let b = dgest::analysis::bound_inputs_from(cfg.population(), &gc);
            match out {
                Some(path) => harness::write_bound_csv(&path, &b, cfg.horizon()),
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    let io = |e| Error::io("<stdout>", e);
                    writeln!(lock, "k,bound").map_err(io)?;
                    for k in 1..=cfg.horizon() {
                        let v = dgest::analysis::error_bound(k, &b)?;
                        writeln!(lock, "{k},{v:.16e}").map_err(io)?;
                    }
                    Ok(())
                }
            }
        }
        Command::Presets { show } => {
            match show {
                Some(name) => {
                    let text = harness::preset(&name).ok_or_else(|| {
                        Error::InvalidArgument(format!("unknown preset '{name}'"))
                    })?;
                    print!("{text}");
                }
                None => harness::preset_names().for_each(|n| println!("{n}")),
            }
            Ok(())
        }
    }
}
