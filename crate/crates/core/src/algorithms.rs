//! Estimator update rules.
//!
//! * [`proposed_step`]: precision-weighted push-sum. Each agent mixes the
//!   precision mass `tau_j` and the information mass `tau_j * theta_j` of its
//!   in-neighbours through a column-stochastic matrix, then adds its own
//!   observation weighted by its observation precision.
//! * [`biau_step`]: running-average consensus with a doubly stochastic matrix.
//! * [`lwr_step`]: learning without recall, where neighbour estimates arrive
//!   through a noisy channel and are weighted like observations.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graphs::{DirectedGraph, GraphSequence, WeightMatrix};
use crate::models::{agent_stream, sample_observation, AgentStream, Population};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    Proposed,
    Biau,
    Lwr,
}

impl AlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Proposed => "proposed",
            AlgorithmKind::Biau => "biau",
            AlgorithmKind::Lwr => "lwr",
        }
    }
}

/// Initial precision: `Paper` starts from `tau_0 = tau`, `Zero` from no
/// information at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauInit {
    Paper,
    Zero,
}

/// How the channel-noise parameter of the no-recall baseline is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommNoiseScale {
    /// noise variance is `1 / lwr_comm_precision`
    Precision,
    /// noise variance is `lwr_comm_precision`
    Variance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub tau_init: TauInit,
    pub lwr_comm_precision: f64,
    pub lwr_noise_scale: CommNoiseScale,
}

impl AlgorithmSpec {
    pub fn new(kind: AlgorithmKind) -> Self {
        Self {
            kind,
            tau_init: TauInit::Paper,
            lwr_comm_precision: 1.0,
            lwr_noise_scale: CommNoiseScale::Precision,
        }
    }

    pub fn with_tau_init(mut self, tau_init: TauInit) -> Self {
        self.tau_init = tau_init;
        self
    }

    /// Standard deviation of one channel-noise draw.
    fn comm_noise_std(&self) -> f64 {
        match self.lwr_noise_scale {
            CommNoiseScale::Precision => 1.0 / self.lwr_comm_precision.sqrt(),
            CommNoiseScale::Variance => self.lwr_comm_precision.sqrt(),
        }
    }
}

/// Gaussian belief parameters of every agent after `k` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub theta: Vec<f64>,
    pub tau: Vec<f64>,
    pub k: usize,
}

impl EstimatorState {
    pub fn initial(pop: &Population, spec: &AlgorithmSpec) -> Self {
        let theta = pop.profiles().iter().map(|p| p.theta_init).collect();
        let tau = match (spec.kind, spec.tau_init) {
            (_, TauInit::Zero) | (AlgorithmKind::Biau, _) => vec![0.0; pop.len()],
            (AlgorithmKind::Proposed, TauInit::Paper) => pop.precisions().collect(),
            (AlgorithmKind::Lwr, TauInit::Paper) => vec![spec.lwr_comm_precision; pop.len()],
        };
        Self { theta, tau, k: 0 }
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        for len in [self.theta.len(), self.tau.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        Ok(())
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// One step of the precision-weighted push-sum estimator.
///
/// `obs[i]` must be `Some` exactly for agents with positive precision.
pub fn proposed_step(
    state: &EstimatorState,
    a: &WeightMatrix,
    obs: &[Option<f64>],
    pop: &Population,
) -> Result<EstimatorState> {
    let n = pop.len();
    state.check_len(n)?;
    check_dim(n, a.n())?;
    check_dim(n, obs.len())?;
    for (i, (p, s)) in pop.profiles().iter().zip(obs).enumerate() {
        match (p.is_blind(), s) {
            (true, Some(_)) => {
                return Err(Error::Observation {
                    agent: i,
                    reason: "observation supplied for a blind agent".into(),
                })
            }
            (false, None) => {
                return Err(Error::Observation {
                    agent: i,
                    reason: "missing observation".into(),
                })
            }
            _ => {}
        }
    }
    let mut next = EstimatorState {
        theta: vec![0.0; n],
        tau: vec![0.0; n],
        k: state.k + 1,
    };
    proposed_update(state, a, obs, pop, &mut next);
    Ok(next)
}

fn proposed_update(
    state: &EstimatorState,
    a: &WeightMatrix,
    obs: &[Option<f64>],
    pop: &Population,
    next: &mut EstimatorState,
) {
    for (i, profile) in pop.profiles().iter().enumerate() {
        let (mut mass, mut info) = (0.0, 0.0);
        for &(j, w) in a.row(i) {
            let t = w * state.tau[j];
            mass += t;
            info += t * state.theta[j];
        }
        let tau_obs = profile.precision;
        let tau_next = mass + tau_obs;
        next.tau[i] = tau_next;
        next.theta[i] = if tau_next > 0.0 {
            let s = obs[i].map_or(0.0, |s| s * tau_obs);
            (info + s) / tau_next
        } else {
            // no information has reached this agent yet
            state.theta[i]
        };
    }
    next.k = state.k + 1;
}

/// Running-average consensus step with weight `k/(k+1)` on the mixed
/// neighbourhood estimate and `1/(k+1)` on the new observation.
pub fn biau_step(state: &EstimatorState, a: &WeightMatrix, obs: &[f64]) -> Result<EstimatorState> {
    let n = state.n();
    state.check_len(n)?;
    check_dim(n, a.n())?;
    check_dim(n, obs.len())?;
    if !a.is_doubly_stochastic() {
        return Err(Error::InvalidMatrix(
            "running-average consensus needs a doubly stochastic matrix".into(),
        ));
    }
    let mut next = state.clone();
    biau_update(state, a, obs, &mut next);
    Ok(next)
}

fn biau_update(state: &EstimatorState, a: &WeightMatrix, obs: &[f64], next: &mut EstimatorState) {
    let k = state.k as f64;
    let keep = k / (k + 1.0);
    let fresh = 1.0 / (k + 1.0);
    for (i, &s) in obs.iter().enumerate() {
        let mixed: f64 = a.row(i).iter().map(|&(j, w)| w * state.theta[j]).sum();
        next.theta[i] = keep * mixed + fresh * s;
        next.tau[i] = k + 1.0;
    }
    next.k = state.k + 1;
}

/// One step of the no-recall baseline.
///
/// Agent `i` keeps its own estimate with weight `tau_i`, and gives weight
/// `c = lwr_comm_precision` to each in-neighbour's noisy estimate and to its
/// own observation. Channel noise for receiver `i` is drawn from
/// `streams[i]`, one draw per in-neighbour in ascending order. `None`
/// disables channel noise.
pub fn lwr_step(
    state: &EstimatorState,
    g: &DirectedGraph,
    obs: &[f64],
    spec: &AlgorithmSpec,
    streams: Option<&mut [AgentStream]>,
) -> Result<EstimatorState> {
    let n = state.n();
    state.check_len(n)?;
    check_dim(n, g.n())?;
    check_dim(n, obs.len())?;
    if spec.lwr_comm_precision.is_nan() || spec.lwr_comm_precision <= 0.0 {
        return Err(Error::InvalidArgument(
            "lwr_comm_precision must be positive".into(),
        ));
    }
    if let Some(s) = &streams {
        check_dim(n, s.len())?;
    }
    let mut next = state.clone();
    lwr_update(state, g, obs, spec, streams, &mut next);
    Ok(next)
}

fn lwr_update(
    state: &EstimatorState,
    g: &DirectedGraph,
    obs: &[f64],
    spec: &AlgorithmSpec,
    mut streams: Option<&mut [AgentStream]>,
    next: &mut EstimatorState,
) {
    let c = spec.lwr_comm_precision;
    let noise_std = spec.comm_noise_std();
    for i in 0..state.n() {
        let neighbors = g.in_neighbors(i);
        let mut heard = 0.0;
        for &j in neighbors {
            let eps = match streams.as_deref_mut() {
                Some(s) => noise_std * s[i].sample::<f64, _>(StandardNormal),
                None => 0.0,
            };
            heard += state.theta[j] + eps;
        }
        let tau_next = state.tau[i] + (neighbors.len() as f64 + 1.0) * c;
        next.theta[i] = (state.tau[i] * state.theta[i] + c * heard + c * obs[i]) / tau_next;
        next.tau[i] = tau_next;
    }
    next.k = state.k + 1;
}

/// Doubly stochastic weights for the running-average baseline on a static
/// schedule: the push-sum matrix when it already is doubly stochastic,
/// otherwise lazy Metropolis weights on a symmetric graph.
pub fn baseline_weights(seq: &GraphSequence) -> Result<WeightMatrix> {
    if !seq.is_static() {
        return Err(Error::InvalidGraph(
            "running-average consensus needs a static graph".into(),
        ));
    }
    let a = seq.matrix_at(0);
    if a.is_doubly_stochastic() {
        return Ok(a.clone());
    }
    WeightMatrix::lazy_metropolis(seq.graph_at(0))
}

/// Everything a trajectory needs besides the algorithm and the seed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graphs: GraphSequence,
    pub population: Population,
    pub horizon: usize,
    pub noise_enabled: bool,
}

/// Per-step per-agent estimates of one trial. Row `k` holds the state after
/// `k` steps; row 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub horizon: usize,
    pub trial: u32,
    pub master_seed: u64,
    theta: Vec<f64>,
    tau: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn theta_row(&self, k: usize) -> &[f64] {
        &self.theta[k * self.n..(k + 1) * self.n]
    }

    pub fn tau_row(&self, k: usize) -> &[f64] {
        &self.tau[k * self.n..(k + 1) * self.n]
    }

    pub fn theta(&self, k: usize, agent: usize) -> f64 {
        self.theta[k * self.n + agent]
    }

    pub fn tau(&self, k: usize, agent: usize) -> f64 {
        self.tau[k * self.n + agent]
    }

    pub fn steps(&self) -> usize {
        self.horizon + 1
    }
}

/// A scenario paired with one algorithm, validated once and reusable across
/// trials.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    scenario: &'a Scenario,
    spec: AlgorithmSpec,
    baseline: Option<WeightMatrix>,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a Scenario, spec: AlgorithmSpec) -> Result<Self> {
        check_dim(scenario.graphs.n(), scenario.population.len())?;
        let all_observe = scenario.population.profiles().iter().all(|p| !p.is_blind());
        let baseline = match spec.kind {
            AlgorithmKind::Proposed => None,
            AlgorithmKind::Biau | AlgorithmKind::Lwr if !all_observe => {
                return Err(Error::InvalidModel(format!(
                    "{} needs every agent to observe",
                    spec.kind.name()
                )))
            }
            AlgorithmKind::Biau => Some(baseline_weights(&scenario.graphs)?),
            AlgorithmKind::Lwr => {
                if !spec.lwr_comm_precision.is_finite() || spec.lwr_comm_precision <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "lwr_comm_precision must be positive".into(),
                    ));
                }
                None
            }
        };
        Ok(Self {
            scenario,
            spec,
            baseline,
        })
    }

    pub fn spec(&self) -> &AlgorithmSpec {
        &self.spec
    }

    pub fn run(&self, master_seed: u64, trial: u32) -> Result<TrajectoryRecord> {
        let sc = self.scenario;
        let pop = &sc.population;
        let n = pop.len();
        let horizon = sc.horizon;
        let mut streams: Vec<AgentStream> = (0..n as u32)
            .map(|agent| agent_stream(master_seed, trial, agent))
            .collect();

        let mut theta = Vec::with_capacity((horizon + 1) * n);
        let mut tau = Vec::with_capacity((horizon + 1) * n);
        let mut state = EstimatorState::initial(pop, &self.spec);
        let mut next = state.clone();
        theta.extend_from_slice(&state.theta);
        tau.extend_from_slice(&state.tau);

        let mut obs = vec![None; n];
        let mut plain = vec![0.0; n];
        for k in 0..horizon {
            for (i, profile) in pop.profiles().iter().enumerate() {
                obs[i] = if profile.is_blind() {
                    None
                } else {
                    Some(sample_observation(
                        profile,
                        &mut streams[i],
                        sc.noise_enabled,
                    )?)
                };
                plain[i] = obs[i].unwrap_or(0.0);
            }
            match self.spec.kind {
                AlgorithmKind::Proposed => {
                    proposed_update(&state, sc.graphs.matrix_at(k), &obs, pop, &mut next)
                }
                AlgorithmKind::Biau => {
                    let a = self.baseline.as_ref().expect("validated in new");
                    biau_update(&state, a, &plain, &mut next)
                }
                AlgorithmKind::Lwr => {
                    let channel = sc.noise_enabled.then_some(streams.as_mut_slice());
                    lwr_update(
                        &state,
                        sc.graphs.graph_at(k),
                        &plain,
                        &self.spec,
                        channel,
                        &mut next,
                    )
                }
            }
            std::mem::swap(&mut state, &mut next);
            theta.extend_from_slice(&state.theta);
            tau.extend_from_slice(&state.tau);
        }
        Ok(TrajectoryRecord {
            n,
            horizon,
            trial,
            master_seed,
            theta,
            tau,
        })
    }
}

pub fn run_trajectory(
    scenario: &Scenario,
    spec: &AlgorithmSpec,
    master_seed: u64,
    trial: u32,
) -> Result<TrajectoryRecord> {
    Simulator::new(scenario, *spec)?.run(master_seed, trial)
}
