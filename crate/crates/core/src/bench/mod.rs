//! Experiment harness: method dispatch, random query instances, the ranking
//! benchmark and CSV output.

mod config;
mod output;
mod run;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::assignment::{Assignment, PartialAssignment, VarId};
use crate::baselines::BaselineMethod;
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::inference::{ConditionalOracle, QuerySpec};
use crate::solvers::{
    budget_pac_map, naive_map, pac_map_traced, smooth_pac_map_traced, Certificate, ExploitSchedule, PacParams,
    ParetoFront, RunOptions, SmoothOptions, TrajectoryPoint, DEFAULT_FRONTIER_GRID,
};

pub use config::{BenchConfig, CircuitSource, EvidenceMode};
pub use output::{format_sig3, write_pareto_csv, write_records_csv, write_trajectory_csv, RECORD_COLUMNS};
pub use run::{rank_methods, run_benchmark, summarize, trial_instance, BenchOutput, BenchRecord, Summary, SummaryCell};

/// Every method the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Pac,
    Smooth,
    /// Smooth PAC-MAP warm-started from the argmax-product solution.
    SmoothAmp,
    Budget,
    Naive,
    MaxProduct,
    ArgMaxProduct,
    Independent,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Pac,
        Method::Smooth,
        Method::SmoothAmp,
        Method::Budget,
        Method::Naive,
        Method::MaxProduct,
        Method::ArgMaxProduct,
        Method::Independent,
    ];

    /// Benchmark methods when the config does not list any.
    pub const DEFAULT: [Method; 7] = [
        Method::Pac,
        Method::Smooth,
        Method::Budget,
        Method::Naive,
        Method::MaxProduct,
        Method::ArgMaxProduct,
        Method::Independent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pac => "pac",
            Method::Smooth => "smooth",
            Method::SmoothAmp => "smooth-amp",
            Method::Budget => "budget",
            Method::Naive => "naive",
            Method::MaxProduct => "mp",
            Method::ArgMaxProduct => "amp",
            Method::Independent => "ind",
        }
    }

    pub fn baseline(self) -> Option<BaselineMethod> {
        match self {
            Method::MaxProduct => Some(BaselineMethod::MaxProduct),
            Method::ArgMaxProduct => Some(BaselineMethod::ArgMaxProduct),
            Method::Independent => Some(BaselineMethod::Independent),
            _ => None,
        }
    }

    /// Adaptive solvers that can hit the sample cap.
    pub fn is_adaptive(self) -> bool {
        matches!(self, Method::Pac | Method::Smooth | Method::SmoothAmp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param(format!("unknown method '{s}'")))
    }
}

/// Parameters shared by all methods of one run.
#[derive(Clone, Debug)]
pub struct SolverSettings {
    pub params: PacParams,
    /// Draw cap for adaptive solvers.
    pub cap: Option<u64>,
    /// Draw count for `budget` and `naive`.
    pub budget: u64,
    pub batch_size: usize,
    pub smooth: SmoothOptions,
    pub seed: u64,
    pub frontier_grid: usize,
    /// Baseline whose answer seeds the sampling solvers.
    pub warm_from: Option<BaselineMethod>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            params: PacParams {
                epsilon: 0.01,
                delta: 0.01,
            },
            cap: Some(1_000_000),
            budget: 1_000_000,
            batch_size: 5000,
            smooth: SmoothOptions::default(),
            seed: 0,
            frontier_grid: DEFAULT_FRONTIER_GRID,
            warm_from: None,
        }
    }
}

impl SolverSettings {
    pub fn from_config(cfg: &BenchConfig, seed: u64) -> Self {
        Self {
            params: PacParams {
                epsilon: cfg.epsilon,
                delta: cfg.delta,
            },
            cap: Some(cfg.sample_cap),
            budget: cfg.sample_cap,
            batch_size: cfg.batch_size,
            smooth: SmoothOptions {
                radius: cfg.radius,
                schedule: ExploitSchedule::Periodic(cfg.exploit_period),
            },
            seed,
            frontier_grid: DEFAULT_FRONTIER_GRID,
            warm_from: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MethodOutcome {
    pub method: Method,
    pub q_hat: Assignment,
    pub log_p_hat: f64,
    /// `None` for the heuristic baselines.
    pub certificate: Option<Certificate>,
    /// Frontier of `budget` / `naive` runs.
    pub front: Option<ParetoFront>,
    pub draws: u64,
    pub oracle_calls: u64,
    pub wall_time: Duration,
}

/// Runs `method` on `oracle`. Only adaptive methods feed `sink`.
pub fn run_method(
    method: Method,
    oracle: &ConditionalOracle<'_>,
    settings: &SolverSettings,
    sink: Option<&mut dyn FnMut(&TrajectoryPoint)>,
) -> Result<MethodOutcome> {
    let start = Instant::now();
    if let Some(b) = method.baseline() {
        let r = b.run(oracle);
        return Ok(MethodOutcome {
            method,
            q_hat: r.q_hat,
            log_p_hat: r.log_p_hat,
            certificate: None,
            front: None,
            draws: 0,
            oracle_calls: 1,
            wall_time: start.elapsed(),
        });
    }
    let warm_from = match method {
        Method::SmoothAmp => Some(BaselineMethod::ArgMaxProduct),
        _ => settings.warm_from,
    };
    let warm: Vec<Assignment> = warm_from.map(|b| b.run(oracle).q_hat).into_iter().collect();
    let opts = RunOptions {
        seed: settings.seed,
        cap: settings.cap,
        batch_size: settings.batch_size,
        warm_start: warm,
        frontier_grid: settings.frontier_grid,
    };
    let mut noop = |_: &TrajectoryPoint| {};
    let sink: &mut dyn FnMut(&TrajectoryPoint) = match sink {
        Some(s) => s,
        None => &mut noop,
    };
    let (sol, front) = match method {
        Method::Pac => (pac_map_traced(oracle, settings.params, &opts, sink)?, None),
        Method::Smooth | Method::SmoothAmp => (
            smooth_pac_map_traced(oracle, settings.params, settings.smooth, &opts, sink)?,
            None,
        ),
        Method::Budget => {
            let (sol, front) = budget_pac_map(oracle, settings.budget, &opts)?;
            (sol, Some(front))
        }
        Method::Naive => {
            let sol = naive_map(oracle, settings.budget, &opts)?;
            let front = match &sol.certificate {
                Certificate::Budget(f) => Some(f.clone()),
                _ => None,
            };
            (sol, front)
        }
        _ => unreachable!("baselines handled above"),
    };
    Ok(MethodOutcome {
        method,
        q_hat: sol.q_hat,
        log_p_hat: sol.log_p_hat,
        certificate: Some(sol.certificate),
        front,
        draws: sol.draws_used,
        oracle_calls: sol.oracle_calls,
        wall_time: start.elapsed(),
    })
}

/// Query and evidence variables of one benchmark instance (no nuisance variables).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub query: Vec<VarId>,
    pub evidence: Vec<VarId>,
}

/// Splits `0..n` into `round(proportion * n)` query variables and evidence.
pub fn random_query_partition<R: Rng + ?Sized>(n: usize, proportion: f64, rng: &mut R) -> Result<Partition> {
    if !(proportion > 0.0 && proportion < 1.0) {
        return Err(Error::param(format!("query proportion {proportion} outside (0, 1)")));
    }
    let k = (proportion * n as f64).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::param(format!(
            "query proportion {proportion} of {n} variables leaves {k} query variables"
        )));
    }
    let mut chosen = vec![false; n];
    for i in sample(rng, n, k) {
        chosen[i] = true;
    }
    let (query, evidence): (Vec<VarId>, Vec<VarId>) = (0..n).map(VarId).partition(|v| chosen[v.index()]);
    Ok(Partition { query, evidence })
}

/// Mode probability of [`illustration_table`].
pub const ILLUSTRATION_MODE: f64 = 0.104;

/// A 64-atom table (6 variables) whose mode has probability 0.104.
///
/// The other 63 atoms split the remaining 0.896 in proportion to exponential
/// draws, redrawn until all of them stay below the mode.
pub fn illustration_table(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rest = 1.0 - ILLUSTRATION_MODE;
    loop {
        let raw: Vec<f64> = (0..63).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = raw.iter().sum();
        let scaled: Vec<f64> = raw.iter().map(|x| x * rest / total).collect();
        if scaled.iter().all(|&p| p < ILLUSTRATION_MODE) {
            let pos = rng.random_range(0..64);
            let mut probs = scaled;
            probs.insert(pos, ILLUSTRATION_MODE);
            return probs;
        }
    }
}

const UNIFORM_EVIDENCE_RETRIES: usize = 100;

/// Values for `e_vars` with positive probability under `c`.
pub fn draw_evidence(
    c: &Circuit,
    e_vars: &[VarId],
    mode: EvidenceMode,
    rng: &mut ChaCha8Rng,
) -> Result<PartialAssignment> {
    match mode {
        EvidenceMode::Model => {
            let all = (0..c.num_vars()).map(VarId).collect();
            let spec = QuerySpec::with_defaults(c.num_vars(), all, PartialAssignment::new())?;
            let joint = ConditionalOracle::new(c, spec)?.sample_joint(rng);
            Ok(e_vars.iter().map(|&v| (v, joint[v.index()])).collect())
        }
        EvidenceMode::Uniform => {
            let mut obs = vec![None; c.num_vars()];
            for _ in 0..UNIFORM_EVIDENCE_RETRIES {
                for &v in e_vars {
                    obs[v.index()] = Some(rng.random_bool(0.5));
                }
                if c.evaluate_partial(&obs) > f64::NEG_INFINITY {
                    return Ok(e_vars.iter().map(|&v| (v, obs[v.index()].unwrap())).collect());
                }
            }
            Err(Error::ZeroProbabilityEvidence)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_random_circuit, LeafKind, Node};

    #[test]
    fn partition_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = random_query_partition(10, 0.5, &mut rng).unwrap();
        assert_eq!((p.query.len(), p.evidence.len()), (5, 5));
        let p = random_query_partition(16, 0.10, &mut rng).unwrap();
        assert_eq!(p.query.len(), 2);
        assert!(random_query_partition(4, 0.1, &mut rng).is_err());
        assert!(random_query_partition(4, 0.9, &mut rng).is_err());
        let a = random_query_partition(32, 0.25, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = random_query_partition(32, 0.25, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_evidence_on_point_mass() {
        let nodes = vec![
            Node::Leaf { var: VarId(0), kind: LeafKind::Indicator(true) },
            Node::Leaf { var: VarId(1), kind: LeafKind::Indicator(false) },
            Node::Leaf { var: VarId(2), kind: LeafKind::Indicator(true) },
            Node::Product { children: vec![0, 1, 2] },
        ];
        let c = Circuit::new(nodes, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let e = draw_evidence(&c, &[VarId(1), VarId(2)], EvidenceMode::Model, &mut rng).unwrap();
        assert_eq!(e.get(VarId(1)), Some(false));
        assert_eq!(e.get(VarId(2)), Some(true));
        assert!(draw_evidence(&c, &[VarId(0), VarId(1)], EvidenceMode::Uniform, &mut rng).is_ok());
    }

    #[test]
    fn uniform_evidence_with_full_support() {
        let c = generate_random_circuit(12, 2, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vars: Vec<VarId> = (0..6).map(VarId).collect();
        let e = draw_evidence(&c, &vars, EvidenceMode::Uniform, &mut rng).unwrap();
        assert!(c.evaluate_marginal(&e, &(6..12).map(VarId).collect::<Vec<_>>()).unwrap() > f64::NEG_INFINITY);
    }

    #[test]
    fn illustration_table_shape() {
        let t = illustration_table(0);
        assert_eq!(t.len(), 64);
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(t.iter().filter(|&&p| p == ILLUSTRATION_MODE).count(), 1);
        assert!(t.iter().all(|&p| p <= ILLUSTRATION_MODE));
        assert_eq!(t, illustration_table(0));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }
}
