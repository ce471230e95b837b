use std::time::Instant;

use super::{Certificate, ParetoFront, RunOptions, SampleSet, Solution};
use crate::error::{Error, Result};
use crate::inference::{DrawStream, QueryOracle};

/// Draws exactly `budget` samples and reports every `(ε, δ)` pair they certify.
///
/// The certificate is [`Certificate::Exact`] (frontier `{(0, 0)}`) when the
/// sampled mass already rules out any better atom, and
/// [`Certificate::Budget`] carrying the same frontier otherwise.
pub fn budget_pac_map<O: QueryOracle>(
    oracle: &O,
    budget: u64,
    opts: &RunOptions,
) -> Result<(Solution, ParetoFront)> {
    let start = Instant::now();
    let (set, calls) = sample_fixed(oracle, budget, opts)?;
    let p_hat = set.p_hat();
    let front = if set.log_p_hat() >= set.log_p_check() {
        ParetoFront::exact(p_hat, budget)
    } else {
        ParetoFront::compute(p_hat, budget, opts.frontier_grid)?
    };
    let certificate = if front.is_exact() {
        Certificate::Exact
    } else {
        Certificate::Budget(front.clone())
    };
    Ok((finish(set, calls, certificate, start), front))
}

/// Draws `m` samples and returns the most probable one, always under a
/// [`Certificate::Budget`] for the realized `(p̂, m)` frontier.
pub fn naive_map<O: QueryOracle>(oracle: &O, m: u64, opts: &RunOptions) -> Result<Solution> {
    let (mut sol, front) = budget_pac_map(oracle, m, opts)?;
    sol.certificate = Certificate::Budget(front);
    Ok(sol)
}

fn sample_fixed<O: QueryOracle>(oracle: &O, budget: u64, opts: &RunOptions) -> Result<(SampleSet, u64)> {
    if budget == 0 {
        return Err(Error::param("sample budget must be at least 1"));
    }
    opts.check(oracle.query_len())?;
    let mut set = SampleSet::new();
    let warm_scores = oracle.log_prob_batch(&opts.warm_start);
    for (q, lp) in opts.warm_start.iter().zip(warm_scores) {
        set.insert_uncounted(q.clone(), lp);
    }
    let stream = DrawStream::new(opts.seed);
    let mut next = 0u64;
    while next < budget {
        let count = (budget - next).min(opts.batch_size as u64) as usize;
        let qs = oracle.sample_range(&stream, next, count);
        let lps = oracle.log_prob_batch(&qs);
        for (q, lp) in qs.into_iter().zip(lps) {
            set.insert_draw(q, lp);
        }
        next += count as u64;
    }
    let calls = budget + opts.warm_start.len() as u64;
    Ok((set, calls))
}

fn finish(set: SampleSet, oracle_calls: u64, certificate: Certificate, start: Instant) -> Solution {
    let (q_hat, log_p_hat) = set.best().map(|(q, l)| (q.clone(), l)).expect("at least one draw");
    Solution {
        q_hat,
        log_p_hat,
        certificate,
        draws_used: set.draws(),
        oracle_calls,
        distinct_atoms: set.len(),
        p_check: set.p_check(),
        wall_time: start.elapsed(),
    }
}
