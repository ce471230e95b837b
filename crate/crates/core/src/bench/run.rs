use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{draw_evidence, random_query_partition, run_method, BenchConfig, Method, SolverSettings};
use crate::assignment::Assignment;
use crate::circuit::Circuit;
use crate::error::Result;
use crate::inference::{derive_seed, ConditionalOracle, QuerySpec};
use crate::solvers::Certificate;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub dataset: String,
    pub trial: usize,
    pub query_prop: f64,
    pub method: Method,
    /// `None` when the instance or method failed.
    pub log_p_hat: Option<f64>,
    pub rank: Option<usize>,
    pub runtime_ms: f64,
    /// Certificate kind, `none` for baselines, `error` for failures.
    pub cert: String,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub draws: u64,
    pub timed_out: bool,
    /// Returned assignment (not written to CSV).
    pub q_hat: Option<Assignment>,
    pub error: Option<String>,
}

impl BenchRecord {
    fn failure(dataset: &str, trial: usize, query_prop: f64, method: Method, err: String) -> Self {
        Self {
            dataset: dataset.to_string(),
            trial,
            query_prop,
            method,
            log_p_hat: None,
            rank: None,
            runtime_ms: 0.0,
            cert: "error".into(),
            epsilon: None,
            delta: None,
            draws: 0,
            timed_out: false,
            q_hat: None,
            error: Some(err),
        }
    }
}

/// Competition ranking, descending: rank = 1 + number of strictly larger values.
pub fn rank_methods(log_p: &[f64]) -> Vec<usize> {
    log_p
        .iter()
        .map(|&x| 1 + log_p.iter().filter(|&&y| y > x).count())
        .collect()
}

fn seed_for(cfg: &BenchConfig, circuit: usize, prop: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(derive_seed(cfg.seed, circuit as u64), prop as u64), trial as u64)
}

/// Rebuilds the query spec and solver seed of one benchmark trial.
pub fn trial_instance(
    cfg: &BenchConfig,
    circuit: &Circuit,
    circuit_index: usize,
    prop_index: usize,
    trial: usize,
) -> Result<(QuerySpec, u64)> {
    let base = seed_for(cfg, circuit_index, prop_index, trial);
    let mut part_rng = ChaCha8Rng::seed_from_u64(derive_seed(base, 1));
    let mut ev_rng = ChaCha8Rng::seed_from_u64(derive_seed(base, 2));
    let proportion = cfg.query_proportions[prop_index];
    let part = random_query_partition(circuit.num_vars(), proportion, &mut part_rng)?;
    let evidence = draw_evidence(circuit, &part.evidence, cfg.evidence_mode, &mut ev_rng)?;
    let spec = QuerySpec::new(circuit.num_vars(), part.query, evidence, Vec::new())?;
    Ok((spec, derive_seed(base, 3)))
}

fn run_trial(cfg: &BenchConfig, dataset: &str, circuit: &Circuit, ci: usize, pi: usize, trial: usize) -> Vec<BenchRecord> {
    let prop = cfg.query_proportions[pi];
    let fail_all = |e: String| {
        log::warn!("{dataset} prop {prop} trial {trial}: {e}");
        cfg.methods
            .iter()
            .map(|&m| BenchRecord::failure(dataset, trial, prop, m, e.clone()))
            .collect()
    };
    let (spec, solver_seed) = match trial_instance(cfg, circuit, ci, pi, trial) {
        Ok(x) => x,
        Err(e) => return fail_all(e.to_string()),
    };
    let setup_start = Instant::now();
    let oracle = match ConditionalOracle::new(circuit, spec) {
        Ok(o) => o,
        Err(e) => return fail_all(e.to_string()),
    };
    let setup = setup_start.elapsed();
    // every sampling method shares one draw stream so their runs are coupled
    let settings = SolverSettings::from_config(cfg, solver_seed);

    let mut records: Vec<BenchRecord> = cfg
        .methods
        .iter()
        .map(|&m| match run_method(m, &oracle, &settings, None) {
            Ok(out) => {
                let guarantee = out.certificate.as_ref().and_then(|c| c.guarantee(cfg.epsilon));
                BenchRecord {
                    dataset: dataset.to_string(),
                    trial,
                    query_prop: prop,
                    method: m,
                    log_p_hat: Some(out.log_p_hat),
                    rank: None,
                    runtime_ms: (setup + out.wall_time).as_secs_f64() * 1e3,
                    cert: out.certificate.as_ref().map_or("none", Certificate::kind).to_string(),
                    epsilon: guarantee.map(|g| g.0),
                    delta: guarantee.map(|g| g.1),
                    draws: out.draws,
                    timed_out: m.is_adaptive() && matches!(out.certificate, Some(Certificate::Budget(_))),
                    q_hat: Some(out.q_hat),
                    error: None,
                }
            }
            Err(e) => {
                log::warn!("{dataset} prop {prop} trial {trial} {m}: {e}");
                BenchRecord::failure(dataset, trial, prop, m, e.to_string())
            }
        })
        .collect();

    let scored: Vec<(usize, f64)> = records
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.log_p_hat.map(|l| (i, l)))
        .collect();
    let ranks = rank_methods(&scored.iter().map(|s| s.1).collect::<Vec<_>>());
    for ((i, _), rank) in scored.into_iter().zip(ranks) {
        records[i].rank = Some(rank);
    }
    records
}

#[derive(Clone, Debug)]
pub struct BenchOutput {
    pub records: Vec<BenchRecord>,
    pub summary: Summary,
}

/// Runs every circuit × proportion × trial. Record order is deterministic:
/// circuits, then proportions, then trials, then methods in config order.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchOutput> {
    cfg.check()?;
    let circuits: Vec<(String, std::result::Result<Circuit, String>)> = cfg
        .circuits
        .iter()
        .map(|src| (src.id(), src.load().map_err(|e| e.to_string())))
        .collect();
    let tasks: Vec<(usize, usize, usize)> = (0..circuits.len())
        .flat_map(|ci| (0..cfg.query_proportions.len()).flat_map(move |pi| (0..cfg.trials).map(move |t| (ci, pi, t))))
        .collect();
    let records: Vec<BenchRecord> = tasks
        .par_iter()
        .map(|&(ci, pi, t)| {
            let (dataset, circuit) = &circuits[ci];
            match circuit {
                Ok(c) => run_trial(cfg, dataset, c, ci, pi, t),
                Err(e) => cfg
                    .methods
                    .iter()
                    .map(|&m| BenchRecord::failure(dataset, t, cfg.query_proportions[pi], m, e.clone()))
                    .collect(),
            }
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let summary = summarize(&records, &cfg.methods);
    Ok(BenchOutput { records, summary })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryCell {
    pub dataset: String,
    pub query_prop: f64,
    /// Mean rank per method (config order); `None` if every trial failed.
    pub mean_rank: Vec<Option<f64>>,
    /// Whether the method hit the sample cap in at least one trial.
    pub any_timeout: Vec<bool>,
}

/// Mean ranks per (dataset, proportion) cell and "ranked highest" counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub methods: Vec<Method>,
    pub cells: Vec<SummaryCell>,
    /// Cells where each method attains the minimal mean rank (ties count for all).
    pub highest_counts: Vec<usize>,
}

/// Per-method (rank sum, ranked count, any timeout) for one cell.
type CellAcc = Vec<(f64, usize, bool)>;

pub fn summarize(records: &[BenchRecord], methods: &[Method]) -> Summary {
    let mut order: Vec<(String, u64)> = Vec::new();
    let mut acc: BTreeMap<(String, u64), CellAcc> = BTreeMap::new();
    for r in records {
        let key = (r.dataset.clone(), r.query_prop.to_bits());
        let slot = acc.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            vec![(0.0, 0, false); methods.len()]
        });
        if let Some(j) = methods.iter().position(|&m| m == r.method) {
            if let Some(rank) = r.rank {
                slot[j].0 += rank as f64;
                slot[j].1 += 1;
            }
            slot[j].2 |= r.timed_out;
        }
    }
    let mut highest_counts = vec![0; methods.len()];
    let cells = order
        .into_iter()
        .map(|key| {
            let slot = &acc[&key];
            let mean_rank: Vec<Option<f64>> = slot
                .iter()
                .map(|&(sum, n, _)| (n > 0).then(|| sum / n as f64))
                .collect();
            let best = mean_rank.iter().flatten().copied().fold(f64::INFINITY, f64::min);
            for (j, m) in mean_rank.iter().enumerate() {
                if *m == Some(best) {
                    highest_counts[j] += 1;
                }
            }
            SummaryCell {
                dataset: key.0,
                query_prop: f64::from_bits(key.1),
                mean_rank,
                any_timeout: slot.iter().map(|s| s.2).collect(),
            }
        })
        .collect();
    Summary {
        methods: methods.to_vec(),
        cells,
        highest_counts,
    }
}

impl fmt::Display for Summary {
    /// Mean-rank table; `*` marks at least one timeout.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .cells
            .iter()
            .map(|c| c.dataset.len())
            .chain(["No. Times Ranked Highest".len() - 6])
            .max()
            .unwrap_or(0);
        write!(f, "{:<width$} {:>6}", "dataset", "|Q|/n")?;
        for m in &self.methods {
            write!(f, " {:>10}", m.name())?;
        }
        writeln!(f)?;
        for cell in &self.cells {
            write!(f, "{:<width$} {:>6.2}", cell.dataset, cell.query_prop)?;
            for (rank, to) in cell.mean_rank.iter().zip(&cell.any_timeout) {
                let text = match rank {
                    Some(r) => format!("{r:.2}{}", if *to { "*" } else { "" }),
                    None => "-".into(),
                };
                write!(f, " {text:>10}")?;
            }
            writeln!(f)?;
        }
        write!(f, "{:<w$}", "No. Times Ranked Highest", w = width + 7)?;
        for c in &self.highest_counts {
            write!(f, " {c:>10}")?;
        }
        writeln!(f)
    }
}
