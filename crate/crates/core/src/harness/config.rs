//! Experiment config documents (TOML).
//!
//! ```toml
//! name = "fig1-grid25"
//! horizon = 10000
//! trials = 500
//! master_seed = 2017
//! noise_enabled = true          # optional, default true
//! output_dir = "out/fig1"       # optional
//! trajectory_trials = 1         # optional, default 1
//!
//! [topology]
//! kind = "grid"                 # path | cycle | grid | complete | star |
//! n = 25                        # hub-ring | round-robin | custom
//! rows = 5
//! cols = 5
//!
//! [population]
//! preset = "iid(4, 1)"          # or hetero-variance(mean), linear(n)
//! theta_init = 0.0
//!
//! [[algorithm]]
//! kind = "proposed"             # proposed | biau | lwr
//! tau_init_mode = "paper"       # paper | zero
//! ```
//!
//! `cycle` takes `directed` (default true). `custom` takes
//! `schedule = [[[1, 2], [2, 3]], ...]` with 1-based agents, `window` and
//! `validate` (default true). Explicit populations use
//! `[[population.agents]]` tables with `theta`, exactly one of `variance` or
//! `precision` (precision 0 marks a blind agent), and optional `theta_init`.
//! `lwr` takes `lwr_comm_precision` (default 1) and
//! `lwr_noise_scale = "precision" | "variance"`.

use std::path::PathBuf;

use serde::Deserialize;

use crate::algorithms::{
    baseline_weights, AlgorithmKind, AlgorithmSpec, CommNoiseScale, Scenario, TauInit,
};
use crate::error::{Error, Result};
use crate::graphs::{generate_graph_sequence, GraphSequence, TopologySpec};
use crate::models::{AgentProfile, Population};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    topology: RawTopology,
    population: RawPopulation,
    algorithm: OneOrMany<RawAlgorithm>,
    horizon: usize,
    trials: usize,
    master_seed: u64,
    #[serde(default = "default_true")]
    noise_enabled: bool,
    output_dir: Option<PathBuf>,
    #[serde(default = "default_one")]
    trajectory_trials: usize,
}

fn default_true() -> bool {
    true
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(t) => vec![t],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTopology {
    kind: String,
    n: usize,
    rows: Option<usize>,
    cols: Option<usize>,
    directed: Option<bool>,
    schedule: Option<Vec<Vec<(usize, usize)>>>,
    window: Option<usize>,
    validate: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPopulation {
    preset: Option<String>,
    theta_init: Option<f64>,
    agents: Option<Vec<RawAgent>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    theta: Option<f64>,
    variance: Option<f64>,
    precision: Option<f64>,
    theta_init: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgorithm {
    kind: String,
    tau_init_mode: Option<String>,
    lwr_comm_precision: Option<f64>,
    lwr_noise_scale: Option<String>,
}

/// How the population was declared, kept for metadata.
#[derive(Debug, Clone, PartialEq)]
pub enum PopulationSpec {
    Iid { mean: f64, variance: f64 },
    HeteroVariance { mean: f64 },
    Linear { n: usize },
    Explicit,
}

impl std::fmt::Display for PopulationSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PopulationSpec::Iid { mean, variance } => write!(f, "iid({mean}, {variance})"),
            PopulationSpec::HeteroVariance { mean } => write!(f, "hetero-variance({mean})"),
            PopulationSpec::Linear { n } => write!(f, "linear({n})"),
            PopulationSpec::Explicit => f.write_str("explicit"),
        }
    }
}

/// A parsed and cross-validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub topology: TopologySpec,
    pub population_spec: PopulationSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    pub trials: usize,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
    pub trajectory_trials: usize,
    pub scenario: Scenario,
}

impl ExperimentConfig {
    pub fn graphs(&self) -> &GraphSequence {
        &self.scenario.graphs
    }

    pub fn population(&self) -> &Population {
        &self.scenario.population
    }

    pub fn horizon(&self) -> usize {
        self.scenario.horizon
    }

    pub fn noise_enabled(&self) -> bool {
        self.scenario.noise_enabled
    }

    pub fn set_trials(&mut self, trials: usize) -> Result<()> {
        if trials == 0 {
            return Err(Error::ConfigValidation("trials must be >= 1".into()));
        }
        self.trials = trials;
        Ok(())
    }

    pub fn set_horizon(&mut self, horizon: usize) -> Result<()> {
        if horizon == 0 {
            return Err(Error::ConfigValidation("horizon must be >= 1".into()));
        }
        self.scenario.horizon = horizon;
        Ok(())
    }

    pub fn set_noise_enabled(&mut self, on: bool) {
        self.scenario.noise_enabled = on;
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| line_col(text, span.start))
            .unwrap_or((0, 0));
        Error::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    validate(raw)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigValidation(msg.into())
}

fn validate(raw: RawConfig) -> Result<ExperimentConfig> {
    if raw.horizon == 0 {
        return Err(invalid("horizon must be >= 1"));
    }
    if raw.trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    if raw.trials > u32::MAX as usize {
        return Err(invalid("trials must fit in 32 bits"));
    }
    let topology = topology_spec(&raw.topology)?;
    let graphs = generate_graph_sequence(&topology).map_err(|e| invalid(e.to_string()))?;
    let n = graphs.n();
    let theta_init = raw.population.theta_init.unwrap_or(0.0);
    let (population_spec, population) = population(&raw.population, n, theta_init)?;
    if population.len() != n {
        return Err(invalid(format!(
            "population has {} agents but topology has {n}",
            population.len()
        )));
    }
    let algorithms = raw
        .algorithm
        .into_vec()
        .iter()
        .map(algorithm_spec)
        .collect::<Result<Vec<_>>>()?;
    if algorithms.is_empty() {
        return Err(invalid("at least one algorithm is required"));
    }
    let all_observe = population.profiles().iter().all(|p| !p.is_blind());
    for spec in &algorithms {
        match spec.kind {
            AlgorithmKind::Biau => {
                baseline_weights(&graphs).map_err(|e| invalid(format!("biau: {e}")))?;
                if !all_observe {
                    return Err(invalid("biau needs every agent to observe"));
                }
            }
            AlgorithmKind::Lwr if !all_observe => {
                return Err(invalid("lwr needs every agent to observe"));
            }
            _ => {}
        }
    }
    let name = raw.name.unwrap_or_else(|| topology.label());
    Ok(ExperimentConfig {
        name,
        topology,
        population_spec,
        algorithms,
        trials: raw.trials,
        master_seed: raw.master_seed,
        output_dir: raw.output_dir,
        trajectory_trials: raw.trajectory_trials.min(raw.trials),
        scenario: Scenario {
            graphs,
            population,
            horizon: raw.horizon,
            noise_enabled: raw.noise_enabled,
        },
    })
}

fn topology_spec(t: &RawTopology) -> Result<TopologySpec> {
    let n = t.n;
    if n == 0 {
        return Err(invalid("topology.n must be >= 1"));
    }
    let require = |field: Option<usize>, name: &str| {
        field.ok_or_else(|| invalid(format!("topology.{name} is required for kind '{}'", t.kind)))
    };
    Ok(match t.kind.as_str() {
        "path" => TopologySpec::Path { n },
        "cycle" => TopologySpec::Cycle {
            n,
            directed: t.directed.unwrap_or(true),
        },
        "grid" => TopologySpec::Grid {
            n,
            rows: require(t.rows, "rows")?,
            cols: require(t.cols, "cols")?,
        },
        "complete" => TopologySpec::Complete { n },
        "star" => TopologySpec::Star { n },
        "hub-ring" => TopologySpec::HubRing { n },
        "round-robin" => TopologySpec::RoundRobin { n },
        "custom" => TopologySpec::Custom {
            n,
            schedule: t
                .schedule
                .clone()
                .ok_or_else(|| invalid("topology.schedule is required for kind 'custom'"))?,
            window: t.window.unwrap_or(1),
            validate: t.validate.unwrap_or(true),
        },
        other => return Err(invalid(format!("unknown topology kind '{other}'"))),
    })
}

/// Splits `name(a, b)` into the name and its numeric arguments.
fn parse_call(text: &str) -> Result<(String, Vec<f64>)> {
    let text = text.trim();
    let Some(open) = text.find('(') else {
        return Ok((text.to_string(), Vec::new()));
    };
    let inner = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| invalid(format!("malformed population preset '{text}'")))?;
    let args = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| invalid(format!("preset argument '{s}' is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((text[..open].trim().to_string(), args))
}

fn population(
    raw: &RawPopulation,
    n: usize,
    theta_init: f64,
) -> Result<(PopulationSpec, Population)> {
    let model = |e: Error| invalid(e.to_string());
    match (&raw.preset, &raw.agents) {
        (Some(_), Some(_)) => Err(invalid(
            "population takes either preset or agents, not both",
        )),
        (None, None) => Err(invalid("population needs a preset or an agents list")),
        (Some(preset), None) => {
            let (name, args) = parse_call(preset)?;
            match (name.as_str(), args.as_slice()) {
                ("iid", &[mean, variance]) => Ok((
                    PopulationSpec::Iid { mean, variance },
                    Population::iid(n, mean, variance, theta_init).map_err(model)?,
                )),
                ("hetero-variance", &[mean]) => Ok((
                    PopulationSpec::HeteroVariance { mean },
                    Population::hetero_variance(n, mean, theta_init).map_err(model)?,
                )),
                ("linear", &[size]) => {
                    if size != n as f64 {
                        return Err(invalid(format!(
                            "linear({size}) does not match topology n={n}"
                        )));
                    }
                    Ok((PopulationSpec::Linear { n }, Population::linear(n, theta_init).map_err(model)?))
                }
                _ => Err(invalid(format!(
                    "unknown population preset '{preset}' (expected iid(mean, variance), hetero-variance(mean) or linear(n))"
                ))),
            }
        }
        (None, Some(agents)) => {
            let profiles = agents
                .iter()
                .enumerate()
                .map(|(idx, a)| {
                    let init = a.theta_init.unwrap_or(theta_init);
                    let precision = match (a.variance, a.precision) {
                        (Some(v), None) if v > 0.0 => 1.0 / v,
                        (Some(v), None) => {
                            return Err(invalid(format!(
                                "agent {}: variance {v} must be positive",
                                idx + 1
                            )))
                        }
                        (None, Some(p)) => p,
                        _ => {
                            return Err(invalid(format!(
                                "agent {}: give exactly one of variance or precision",
                                idx + 1
                            )))
                        }
                    };
                    let theta = match (a.theta, precision == 0.0) {
                        (Some(t), _) => t,
                        (None, true) => 0.0,
                        (None, false) => {
                            return Err(invalid(format!("agent {}: theta is required", idx + 1)))
                        }
                    };
                    AgentProfile::new(theta, precision, init).map_err(model)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((
                PopulationSpec::Explicit,
                Population::new(profiles).map_err(model)?,
            ))
        }
    }
}

fn algorithm_spec(raw: &RawAlgorithm) -> Result<AlgorithmSpec> {
    let kind = match raw.kind.as_str() {
        "proposed" => AlgorithmKind::Proposed,
        "biau" => AlgorithmKind::Biau,
        "lwr" => AlgorithmKind::Lwr,
        other => return Err(invalid(format!("unknown algorithm kind '{other}'"))),
    };
    let tau_init = match raw.tau_init_mode.as_deref() {
        None | Some("paper") => TauInit::Paper,
        Some("zero") => TauInit::Zero,
        Some(other) => return Err(invalid(format!("unknown tau_init_mode '{other}'"))),
    };
    let lwr_noise_scale = match raw.lwr_noise_scale.as_deref() {
        None | Some("precision") => CommNoiseScale::Precision,
        Some("variance") => CommNoiseScale::Variance,
        Some(other) => return Err(invalid(format!("unknown lwr_noise_scale '{other}'"))),
    };
    let lwr_comm_precision = raw.lwr_comm_precision.unwrap_or(1.0);
    if !lwr_comm_precision.is_finite() || lwr_comm_precision <= 0.0 {
        return Err(invalid("lwr_comm_precision must be positive"));
    }
    Ok(AlgorithmSpec {
        kind,
        tau_init,
        lwr_comm_precision,
        lwr_noise_scale,
    })
}
