//! Convergence bound, Monte Carlo aggregation, and rate diagnostics.

use crate::algorithms::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::graphs::GraphConstants;
use crate::models::Population;

/// Inputs of the `O(1/k)` bound on `|E[theta_k^i] - theta*|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub tau_max: f64,
    /// smallest nonzero precision
    pub tau_min: f64,
    pub delta: f64,
    pub c: f64,
    pub lambda: f64,
    /// `1 - lambda`
    pub gap: f64,
    /// `||theta_0 - theta* 1||_1` over all agents
    pub init_l1: f64,
    /// `||theta - theta* 1||_1` over observing agents
    pub mean_l1: f64,
}

/// `tau_max / (tau_min k delta) * (init_l1 + 2 C mean_l1 / (1 - lambda))`
pub fn error_bound(k: usize, b: &BoundInputs) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "the bound is defined for k >= 1".into(),
        ));
    }
    let heterogeneity = if b.mean_l1 == 0.0 {
        0.0
    } else {
        2.0 * b.c * b.mean_l1 / b.gap
    };
    Ok(b.tau_max / (b.tau_min * k as f64 * b.delta) * (b.init_l1 + heterogeneity))
}

pub fn bound_inputs_from(pop: &Population, gc: &GraphConstants) -> BoundInputs {
    let star = pop.optimal_theta();
    let profiles = pop.profiles();
    let init_l1 = profiles.iter().map(|p| (p.theta_init - star).abs()).sum();
    let observing = || profiles.iter().filter(|p| !p.is_blind());
    let mean_l1 = observing().map(|p| (p.theta_true - star).abs()).sum();
    let tau_max = observing().map(|p| p.precision).fold(0.0, f64::max);
    let tau_min = observing()
        .map(|p| p.precision)
        .fold(f64::INFINITY, f64::min);
    BoundInputs {
        tau_max,
        tau_min,
        delta: gc.delta,
        c: gc.c,
        lambda: gc.lambda,
        gap: gc.gap,
        init_l1,
        mean_l1,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SummaryMeta {
    pub topology: String,
    pub algorithm: String,
    pub master_seed: u64,
}

/// Which per-(k, agent) curve of a [`Summary`] to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    /// mean over trials of `|theta - theta*|`
    MeanAbsError,
    /// `|mean over trials of theta - theta*|`
    AbsMeanError,
    /// sample standard deviation of `theta` over trials
    StdTheta,
    /// `StdTheta / sqrt(trials)`
    StdErr,
    MeanTheta,
}

/// Monte Carlo aggregate over trials, indexed by step `k` and agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub horizon: usize,
    pub trials: usize,
    pub theta_star: f64,
    pub meta: SummaryMeta,
    mean_theta: Vec<f64>,
    mean_abs_error: Vec<f64>,
    std_theta: Vec<f64>,
    bound: Vec<Option<f64>>,
}

impl Summary {
    pub fn steps(&self) -> usize {
        self.horizon + 1
    }

    pub fn value(&self, curve: Curve, k: usize, agent: usize) -> f64 {
        let idx = k * self.n + agent;
        match curve {
            Curve::MeanAbsError => self.mean_abs_error[idx],
            Curve::AbsMeanError => (self.mean_theta[idx] - self.theta_star).abs(),
            Curve::StdTheta => self.std_theta[idx],
            Curve::StdErr => self.std_theta[idx] / (self.trials as f64).sqrt(),
            Curve::MeanTheta => self.mean_theta[idx],
        }
    }

    pub fn agent_curve(&self, curve: Curve, agent: usize) -> Vec<f64> {
        (0..self.steps())
            .map(|k| self.value(curve, k, agent))
            .collect()
    }

    /// Average over agents at each step.
    pub fn agent_mean_curve(&self, curve: Curve) -> Vec<f64> {
        (0..self.steps())
            .map(|k| (0..self.n).map(|i| self.value(curve, k, i)).sum::<f64>() / self.n as f64)
            .collect()
    }

    pub fn max_agent_curve(&self, curve: Curve) -> Vec<f64> {
        (0..self.steps())
            .map(|k| {
                (0..self.n)
                    .map(|i| self.value(curve, k, i))
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn bound_at(&self, k: usize) -> Option<f64> {
        self.bound.get(k).copied().flatten()
    }

    /// Fills the per-step bound column.
    pub fn set_bound(&mut self, b: &BoundInputs) {
        self.bound = (0..self.steps()).map(|k| error_bound(k, b).ok()).collect();
    }
}

/// Number of consecutive trials folded sequentially before partial results
/// are merged. Fixing it makes the reduction independent of scheduling.
pub const REDUCTION_CHUNK: usize = 8;

/// Streaming per-(k, agent) moments over trials (Welford, with Chan merges).
#[derive(Debug, Clone)]
pub struct TrialAccumulator {
    n: usize,
    horizon: usize,
    theta_star: f64,
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    mean_abs: Vec<f64>,
}

impl TrialAccumulator {
    pub fn new(n: usize, horizon: usize, theta_star: f64) -> Self {
        let cells = n * (horizon + 1);
        Self {
            n,
            horizon,
            theta_star,
            count: 0,
            mean: vec![0.0; cells],
            m2: vec![0.0; cells],
            mean_abs: vec![0.0; cells],
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, record: &TrajectoryRecord) -> Result<()> {
        if record.n != self.n || record.horizon != self.horizon {
            return Err(Error::InvalidArgument(format!(
                "record shape ({}, {}) does not match ({}, {})",
                record.n, record.horizon, self.n, self.horizon
            )));
        }
        self.count += 1;
        let c = self.count as f64;
        for k in 0..=self.horizon {
            for (i, &x) in record.theta_row(k).iter().enumerate() {
                let idx = k * self.n + i;
                let d = x - self.mean[idx];
                self.mean[idx] += d / c;
                self.m2[idx] += d * (x - self.mean[idx]);
                let a = (x - self.theta_star).abs();
                self.mean_abs[idx] += (a - self.mean_abs[idx]) / c;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &TrialAccumulator) -> Result<()> {
        if other.n != self.n || other.horizon != self.horizon {
            return Err(Error::InvalidArgument("accumulator shapes differ".into()));
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            *self = other.clone();
            return Ok(());
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let total = na + nb;
        for idx in 0..self.mean.len() {
            let d = other.mean[idx] - self.mean[idx];
            self.mean[idx] += d * nb / total;
            self.m2[idx] += other.m2[idx] + d * d * na * nb / total;
            self.mean_abs[idx] += (other.mean_abs[idx] - self.mean_abs[idx]) * nb / total;
        }
        self.count += other.count;
        Ok(())
    }

    pub fn finish(self, meta: SummaryMeta) -> Summary {
        let denom = self.count.saturating_sub(1).max(1) as f64;
        let std_theta = self
            .m2
            .iter()
            .map(|m| (m.max(0.0) / denom).sqrt())
            .collect();
        Summary {
            n: self.n,
            horizon: self.horizon,
            trials: self.count,
            theta_star: self.theta_star,
            meta,
            mean_theta: self.mean,
            mean_abs_error: self.mean_abs,
            std_theta,
            bound: vec![None; self.horizon + 1],
        }
    }
}

/// Folds chunk accumulators left to right.
pub fn reduce_in_order(
    n: usize,
    horizon: usize,
    theta_star: f64,
    parts: impl IntoIterator<Item = TrialAccumulator>,
) -> Result<TrialAccumulator> {
    let mut acc = TrialAccumulator::new(n, horizon, theta_star);
    for part in parts {
        acc.merge(&part)?;
    }
    Ok(acc)
}

/// Aggregates trajectories into both error curves. Records must share
/// `(n, horizon)`.
pub fn mc_mean_error(records: &[TrajectoryRecord], theta_star: f64) -> Result<Summary> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidArgument("no records to aggregate".into()))?;
    let (n, horizon) = (first.n, first.horizon);
    let parts = records
        .chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut acc = TrialAccumulator::new(n, horizon, theta_star);
            for r in chunk {
                acc.push(r)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = SummaryMeta {
        master_seed: first.master_seed,
        ..SummaryMeta::default()
    };
    Ok(reduce_in_order(n, horizon, theta_star, parts)?.finish(meta))
}

/// Least-squares slope of `ln curve[k]` against `ln k` over `k_lo..=k_hi`.
pub fn loglog_slope(curve: &[f64], k_lo: usize, k_hi: usize) -> Result<f64> {
    if k_lo == 0 || k_hi < 2 * k_lo || k_hi >= curve.len() {
        return Err(Error::InvalidArgument(format!(
            "slope window [{k_lo}, {k_hi}] invalid for a curve of {} points",
            curve.len()
        )));
    }
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (k, &v) in curve.iter().enumerate().take(k_hi + 1).skip(k_lo) {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "curve value {v} at k={k} is not positive"
            )));
        }
        let (x, y) = ((k as f64).ln(), v.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let m = (k_hi - k_lo + 1) as f64;
    Ok((m * sxy - sx * sy) / (m * sxx - sx * sx))
}

/// True iff `|mean theta_k^i - theta*| <= bound(k) + slack * stderr(k, i)`
/// for every `k >= 1` and agent.
pub fn check_bound(summary: &Summary, b: &BoundInputs, confidence_slack: f64) -> bool {
    (1..summary.steps()).all(|k| {
        let bound = error_bound(k, b).expect("k >= 1");
        (0..summary.n).all(|i| {
            let allowance = confidence_slack * summary.value(Curve::StdErr, k, i);
            summary.value(Curve::AbsMeanError, k, i) <= bound + allowance
        })
    })
}

/// `(k, c k^-p)` for `k = 1..=horizon`.
pub fn reference_curve(c: f64, p: f64, horizon: usize) -> Vec<(usize, f64)> {
    (1..=horizon)
        .map(|k| (k, c * (k as f64).powf(-p)))
        .collect()
}

/// Last step before `curve` first falls below `z * stderr`, scanning from
/// `k = 1`; the whole curve when it never does.
pub fn signal_horizon(curve: &[f64], stderr: &[f64], z: f64) -> usize {
    (1..curve.len())
        .find(|&k| curve[k] < z * stderr[k])
        .map_or(curve.len() - 1, |k| k - 1)
}

/// First `k` in `[1, k_max/2]` whose local slope over `[k, 2k]` is at or
/// below `threshold`.
pub fn transition_step(curve: &[f64], k_max: usize, threshold: f64) -> Option<usize> {
    (1..=k_max / 2).find(|&k| matches!(loglog_slope(curve, k, 2 * k), Ok(s) if s <= threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::lemma_constants;
    use crate::models::AgentProfile;
    use approx::assert_abs_diff_eq;

    fn regular_two() -> BoundInputs {
        let gc = lemma_constants(2, 1, true).unwrap();
        BoundInputs {
            tau_max: 1.0,
            tau_min: 1.0,
            delta: gc.delta,
            c: gc.c,
            lambda: gc.lambda,
            gap: gc.gap,
            init_l1: 2.0,
            mean_l1: 2.0,
        }
    }

    #[test]
    fn bound_hand_value() {
        let b = regular_two();
        let expected = 2.0 + 4.0 * 2f64.sqrt() * 32.0;
        assert_abs_diff_eq!(error_bound(1, &b).unwrap(), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(expected, 183.019, epsilon = 1e-3);
    }

    #[test]
    fn bound_halves_when_k_doubles() {
        let b = regular_two();
        for k in [1, 3, 17, 1000] {
            assert_eq!(
                error_bound(2 * k, &b).unwrap(),
                error_bound(k, &b).unwrap() / 2.0
            );
        }
        assert!(error_bound(0, &b).is_err());
    }

    #[test]
    fn bound_zero_when_already_optimal() {
        let b = BoundInputs {
            init_l1: 0.0,
            mean_l1: 0.0,
            ..regular_two()
        };
        assert_eq!(error_bound(5, &b).unwrap(), 0.0);
    }

    #[test]
    fn bound_inputs_examples() {
        let gc = lemma_constants(2, 1, true).unwrap();
        let pop = Population::new(vec![
            AgentProfile::new(0.0, 1.0, 0.0).unwrap(),
            AgentProfile::new(2.0, 1.0, 0.0).unwrap(),
        ])
        .unwrap();
        let b = bound_inputs_from(&pop, &gc);
        assert_eq!(
            (b.init_l1, b.mean_l1, b.tau_max, b.tau_min),
            (2.0, 2.0, 1.0, 1.0)
        );

        let iid = Population::iid(3, 4.0, 2.0, 1.0).unwrap();
        assert_eq!(bound_inputs_from(&iid, &gc).mean_l1, 0.0);

        let hetero = Population::new(vec![
            AgentProfile::new(0.0, 1.0, 0.0).unwrap(),
            AgentProfile::new(0.0, 4.0, 0.0).unwrap(),
        ])
        .unwrap();
        let b = bound_inputs_from(&hetero, &gc);
        assert_eq!((b.tau_max, b.tau_min), (4.0, 1.0));
    }

    #[test]
    fn blind_agents_in_bound_inputs() {
        let gc = lemma_constants(3, 1, false).unwrap();
        let pop = Population::new(vec![
            AgentProfile::new(1.0, 2.0, 0.0).unwrap(),
            AgentProfile::new(3.0, 2.0, 0.0).unwrap(),
            AgentProfile {
                theta_true: 100.0,
                precision: 0.0,
                theta_init: 10.0,
            },
        ])
        .unwrap();
        let b = bound_inputs_from(&pop, &gc);
        assert_eq!(b.tau_min, 2.0);
        assert_eq!(b.mean_l1, 2.0);
        assert_eq!(b.init_l1, 2.0 + 2.0 + 8.0);
    }

    #[test]
    fn slope_of_power_laws() {
        let inv: Vec<f64> = (0..2000).map(|k| 3.0 / k as f64).collect();
        assert_abs_diff_eq!(loglog_slope(&inv, 10, 1000).unwrap(), -1.0, epsilon = 1e-9);
        let sqrt: Vec<f64> = (0..2000).map(|k| 0.2 / (k as f64).sqrt()).collect();
        assert_abs_diff_eq!(
            loglog_slope(&sqrt, 100, 1999).unwrap(),
            -0.5,
            epsilon = 1e-9
        );
    }

    #[test]
    fn slope_rejects_bad_windows() {
        let mut c: Vec<f64> = (0..100).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        assert!(loglog_slope(&c, 0, 10).is_err());
        assert!(loglog_slope(&c, 10, 15).is_err());
        assert!(loglog_slope(&c, 10, 100).is_err());
        c[12] = 0.0;
        assert!(loglog_slope(&c, 10, 20).is_err());
    }

    #[test]
    fn reference_curve_values() {
        let r = reference_curve(1.0, 1.0, 10);
        assert_eq!(r[9], (10, 0.1));
        let r = reference_curve(2.0, 0.5, 4);
        assert_eq!(r[3], (4, 1.0));
    }

    #[test]
    fn reference_curve_matches_bound() {
        let b = regular_two();
        let c = error_bound(1, &b).unwrap();
        for (k, v) in reference_curve(c, 1.0, 64) {
            assert_abs_diff_eq!(v, error_bound(k, &b).unwrap(), epsilon = 1e-12 * c);
        }
    }

    #[test]
    fn transition_and_horizon_helpers() {
        // flat until 10, then 1/k
        let curve: Vec<f64> = (0..1000).map(|k| 1.0 / (k.max(10) as f64)).collect();
        assert_eq!(transition_step(&curve, 999, -0.999), Some(10));
        assert!(transition_step(&curve, 999, -0.9).unwrap() < 10);
        let se = vec![1e-3; 1000];
        assert_eq!(signal_horizon(&curve, &se, 3.0), 333);
        assert_eq!(signal_horizon(&curve, &vec![0.0; 1000], 3.0), 999);
    }
}
