//! Sampling-based MAP solvers with certificates.
//!
//! * [`naive_map`]: fixed number of draws, return the best.
//! * [`pac_map`]: adaptive stopping with a deterministic (`p̂ >= p̌(1-ε)`) and a
//!   probabilistic (`m >= (1-ε) ln(1/δ) / p̂`) stopping condition.
//! * [`budget_pac_map`]: fixed budget, returns the Pareto frontier of `(ε, δ)`.
//! * [`smooth_pac_map`]: [`pac_map`] plus periodic Hamming-ball exploitation
//!   around the leading candidate.
//!
//! All solvers consume draws through a [`DrawStream`](crate::inference::DrawStream):
//! draw `j` of a run with seed `s` is identical whatever the batch size, so two
//! solvers given the same seed see the same random sequence.

mod budget;
mod hamming;
mod pac;
mod sample_set;
mod stopping;

use std::fmt;
use std::time::Duration;

use crate::assignment::Assignment;
use crate::error::{Error, Result};

pub use budget::{budget_pac_map, naive_map};
pub use hamming::{hamming_ball, hamming_ball_size};
pub use pac::{pac_map, pac_map_traced, smooth_pac_map, smooth_pac_map_traced};
pub use sample_set::SampleSet;
pub use stopping::{pareto_delta, stop_time, ParetoFront, STOP_NEVER};

/// Default number of ε values sampled on a frontier.
pub const DEFAULT_FRONTIER_GRID: usize = 100;
/// Default number of draws sampled (and scored) per batch.
pub const DEFAULT_BATCH_SIZE: usize = 5000;

/// Target tolerance `ε` and failure probability `δ`, both in (0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PacParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PacParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        for (name, x) in [("epsilon", epsilon), ("delta", delta)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::param(format!("{name} must lie in (0, 1), got {x}")));
            }
        }
        Ok(Self { epsilon, delta })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// `p̂ >= p̌`: no unseen atom can beat the returned one.
    Exact,
    /// `p̂ >= p̌ (1 - ε)`: ε-optimal with certainty.
    DeterministicEps { epsilon: f64 },
    /// Probabilistic stop time reached: ε-optimal with probability at least `1 - δ`.
    Pac { epsilon: f64, delta: f64 },
    /// Sample budget exhausted before either stopping condition held.
    Budget(ParetoFront),
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::Exact => "exact",
            Certificate::DeterministicEps { .. } => "det_eps",
            Certificate::Pac { .. } => "pac",
            Certificate::Budget(_) => "budget",
        }
    }

    /// The `(ε, δ)` pair this certificate guarantees at tolerance `target_eps`.
    /// Budget certificates report their frontier at `target_eps` (if feasible).
    pub fn guarantee(&self, target_eps: f64) -> Option<(f64, f64)> {
        match self {
            Certificate::Exact => Some((0.0, 0.0)),
            Certificate::DeterministicEps { epsilon } => Some((*epsilon, 0.0)),
            Certificate::Pac { epsilon, delta } => Some((*epsilon, *delta)),
            Certificate::Budget(front) => front.delta_at(target_eps).map(|d| (target_eps, d)),
        }
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Exact => f.write_str("exact"),
            Certificate::DeterministicEps { epsilon } => write!(f, "det_eps(eps={epsilon})"),
            Certificate::Pac { epsilon, delta } => write!(f, "pac(eps={epsilon}, delta={delta})"),
            Certificate::Budget(front) => write!(
                f,
                "budget(M={}, {} frontier points)",
                front.budget,
                front.points.len()
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub q_hat: Assignment,
    pub log_p_hat: f64,
    pub certificate: Certificate,
    /// Random draws consumed.
    pub draws_used: u64,
    /// Oracle evaluations (draws, warm starts and newly exploited atoms).
    pub oracle_calls: u64,
    /// Distinct atoms in the final candidate set.
    pub distinct_atoms: usize,
    /// Residual mass `p̌` at termination.
    pub p_check: f64,
    pub wall_time: Duration,
}

impl Solution {
    pub fn p_hat(&self) -> f64 {
        self.log_p_hat.exp()
    }

    pub fn timed_out(&self) -> bool {
        matches!(self.certificate, Certificate::Budget(_))
    }
}

/// One record per random draw of a PAC run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub m: u64,
    pub p_hat: f64,
    pub p_check: f64,
    /// `(1 - p̂/(1-ε))^m`: chance that `m` draws all missed an atom of mass `p̂/(1-ε)`.
    pub miss_bound: f64,
    /// Current probabilistic stop time ([`STOP_NEVER`] if none).
    pub stop_time: u64,
}

/// When smooth-PAC-MAP scans the Hamming ball around its leader.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExploitSchedule {
    /// After every `period` random draws.
    Periodic(u64),
    /// Before each iteration, exploit with probability `eta`.
    Bernoulli(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothOptions {
    pub radius: usize,
    pub schedule: ExploitSchedule,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self {
            radius: 1,
            schedule: ExploitSchedule::Periodic(100),
        }
    }
}

/// Settings shared by every solver run.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub seed: u64,
    /// Maximum number of random draws for [`pac_map`] / [`smooth_pac_map`].
    pub cap: Option<u64>,
    pub batch_size: usize,
    /// Atoms admitted before the first draw without counting as draws.
    pub warm_start: Vec<Assignment>,
    /// Number of ε values on budget frontiers.
    pub frontier_grid: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            cap: None,
            batch_size: DEFAULT_BATCH_SIZE,
            warm_start: Vec::new(),
            frontier_grid: DEFAULT_FRONTIER_GRID,
        }
    }
}

impl RunOptions {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn with_warm_start(mut self, warm: Vec<Assignment>) -> Self {
        self.warm_start = warm;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size;
        self
    }

    fn check(&self, query_len: usize) -> Result<()> {
        if self.cap == Some(0) {
            return Err(Error::param("sample cap must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch size must be at least 1"));
        }
        if self.frontier_grid == 0 {
            return Err(Error::param("frontier grid must have at least 1 point"));
        }
        if let Some(w) = self.warm_start.iter().find(|w| w.len() != query_len) {
            return Err(Error::ArityMismatch {
                expected: query_len,
                got: w.len(),
            });
        }
        Ok(())
    }
}

/// `(1 - p̂/(1-ε))^m`, zero once the base is non-positive.
pub(crate) fn miss_bound(p_hat: f64, epsilon: f64, m: u64) -> f64 {
    let x = p_hat / (1.0 - epsilon);
    if x >= 1.0 {
        0.0
    } else {
        (m as f64 * (-x).ln_1p()).exp()
    }
}
