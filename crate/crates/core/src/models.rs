//! Gaussian observation model and the closed-form estimation quantities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Per-agent random stream. One per (trial, agent), never shared.
pub type AgentStream = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    mean: f64,
    variance: f64,
}

impl Gaussian {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !variance.is_finite() || variance <= 0.0 || !mean.is_finite() {
            return Err(Error::InvalidModel(format!(
                "gaussian needs finite mean and positive variance, got ({mean}, {variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// `KL(p || q) = ln(s_q/s_p) + (s_p^2 + (m_p - m_q)^2) / (2 s_q^2) - 1/2`
pub fn kl_gaussian(p: &Gaussian, q: &Gaussian) -> f64 {
    let log_ratio = 0.5 * (q.variance / p.variance).ln();
    let diff = p.mean - q.mean;
    log_ratio + (p.variance + diff * diff) / (2.0 * q.variance) - 0.5
}

/// Ground truth and prior for one agent. `precision == 0` marks a blind
/// agent that only relays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentProfile {
    pub theta_true: f64,
    pub precision: f64,
    pub theta_init: f64,
}

impl AgentProfile {
    pub fn new(theta_true: f64, precision: f64, theta_init: f64) -> Result<Self> {
        if !precision.is_finite() || precision < 0.0 {
            return Err(Error::InvalidModel(format!(
                "precision must be finite and nonnegative, got {precision}"
            )));
        }
        if !theta_true.is_finite() || !theta_init.is_finite() {
            return Err(Error::InvalidModel("agent means must be finite".into()));
        }
        Ok(Self {
            theta_true,
            precision,
            theta_init,
        })
    }

    pub fn from_variance(theta_true: f64, variance: f64, theta_init: f64) -> Result<Self> {
        if variance.is_nan() || variance <= 0.0 {
            return Err(Error::InvalidModel(format!(
                "variance must be positive, got {variance}"
            )));
        }
        Self::new(theta_true, 1.0 / variance, theta_init)
    }

    pub fn blind(theta_init: f64) -> Self {
        Self {
            theta_true: 0.0,
            precision: 0.0,
            theta_init,
        }
    }

    pub fn is_blind(&self) -> bool {
        self.precision == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    profiles: Vec<AgentProfile>,
}

impl Population {
    pub fn new(profiles: Vec<AgentProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidModel("population is empty".into()));
        }
        if profiles.iter().all(AgentProfile::is_blind) {
            return Err(Error::InvalidModel(
                "at least one agent needs a positive precision".into(),
            ));
        }
        Ok(Self { profiles })
    }

    /// Every agent observes `N(mean, variance)`.
    pub fn iid(n: usize, mean: f64, variance: f64, theta_init: f64) -> Result<Self> {
        let p = AgentProfile::from_variance(mean, variance, theta_init)?;
        Self::new(vec![p; n])
    }

    /// Agent `i` (1-based) observes `N(mean, i)`.
    pub fn hetero_variance(n: usize, mean: f64, theta_init: f64) -> Result<Self> {
        (1..=n)
            .map(|i| AgentProfile::from_variance(mean, i as f64, theta_init))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    /// Agent `i` (1-based) observes `N(i, n - i + 1)`.
    pub fn linear(n: usize, theta_init: f64) -> Result<Self> {
        (1..=n)
            .map(|i| AgentProfile::from_variance(i as f64, (n - i + 1) as f64, theta_init))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[AgentProfile] {
        &self.profiles
    }

    pub fn precisions(&self) -> impl Iterator<Item = f64> + '_ {
        self.profiles.iter().map(|p| p.precision)
    }

    pub fn total_precision(&self) -> f64 {
        self.precisions().sum()
    }

    /// `sum_i tau_i (theta - theta_i)^2 / 2`
    pub fn objective(&self, theta: f64) -> f64 {
        self.profiles
            .iter()
            .map(|p| 0.5 * p.precision * (theta - p.theta_true).powi(2))
            .sum()
    }

    /// Precision-weighted mean of the agents' local means; the unique
    /// minimiser of [`Population::objective`].
    pub fn optimal_theta(&self) -> f64 {
        let weighted: f64 = self
            .profiles
            .iter()
            .map(|p| p.precision * p.theta_true)
            .sum();
        weighted / self.total_precision()
    }

    /// Same agents with every precision multiplied by `c`.
    pub fn scale_precisions(&self, c: f64) -> Result<Self> {
        self.profiles
            .iter()
            .map(|p| AgentProfile::new(p.theta_true, p.precision * c, p.theta_init))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    /// Same agents with every mean and initial guess shifted by `c`.
    pub fn shift(&self, c: f64) -> Result<Self> {
        self.profiles
            .iter()
            .map(|p| AgentProfile::new(p.theta_true + c, p.precision, p.theta_init + c))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }
}

pub fn optimal_theta(pop: &Population) -> f64 {
    pop.optimal_theta()
}

pub fn objective(theta: f64, pop: &Population) -> f64 {
    pop.objective(theta)
}

/// One draw `theta_i + z / sqrt(tau_i)`. With noise disabled the draw is
/// exactly `theta_i` and the stream is left untouched.
pub fn sample_observation<R: Rng + ?Sized>(
    profile: &AgentProfile,
    rng: &mut R,
    noise_enabled: bool,
) -> Result<f64> {
    if profile.is_blind() {
        return Err(Error::InvalidModel("blind agents do not observe".into()));
    }
    if !noise_enabled {
        return Ok(profile.theta_true);
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok(profile.theta_true + z / profile.precision.sqrt())
}

const fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for one (trial, agent) pair:
/// `splitmix64(master ^ splitmix64((trial << 32) | agent))`.
///
/// Every step is a bijection on `u64`, so for a fixed master the map is
/// injective over trial and agent indices below 2^32, and for a fixed pair it
/// is injective over masters.
pub fn derive_trial_seed(master: u64, trial: u32, agent: u32) -> u64 {
    let slot = ((trial as u64) << 32) | agent as u64;
    splitmix64(master ^ splitmix64(slot))
}

pub fn agent_stream(master: u64, trial: u32, agent: u32) -> AgentStream {
    AgentStream::seed_from_u64(derive_trial_seed(master, trial, agent))
}
