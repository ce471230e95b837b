use std::collections::VecDeque;
use std::time::Instant;

use rand::Rng;

use super::stopping::stop_time_log;
use super::{
    hamming_ball, miss_bound, Certificate, ExploitSchedule, PacParams, ParetoFront, RunOptions,
    SampleSet, SmoothOptions, Solution, TrajectoryPoint, STOP_NEVER,
};
use crate::assignment::Assignment;
use crate::error::{Error, Result};
use crate::inference::{DrawStream, QueryOracle};

const FIRST_BATCH: usize = 64;
/// Stream tag for the exploitation coin of the Bernoulli schedule.
const COIN_TAG: u64 = 0x636f_696e;

/// Adaptive PAC-MAP: sample until either stopping condition holds or the cap is hit.
pub fn pac_map<O: QueryOracle>(oracle: &O, params: PacParams, opts: &RunOptions) -> Result<Solution> {
    Engine::new(oracle, params, opts, None)?.run(&mut |_| {})
}

/// [`pac_map`], reporting the state after every random draw.
pub fn pac_map_traced<O: QueryOracle>(
    oracle: &O,
    params: PacParams,
    opts: &RunOptions,
    sink: &mut dyn FnMut(&TrajectoryPoint),
) -> Result<Solution> {
    Engine::new(oracle, params, opts, None)?.run(sink)
}

/// PAC-MAP with Hamming-ball exploitation around the current leader.
///
/// Exploited atoms are scored and admitted but are not counted as draws, so
/// the probabilistic stop time still refers to random draws only.
pub fn smooth_pac_map<O: QueryOracle>(
    oracle: &O,
    params: PacParams,
    smooth: SmoothOptions,
    opts: &RunOptions,
) -> Result<Solution> {
    Engine::new(oracle, params, opts, Some(smooth))?.run(&mut |_| {})
}

pub fn smooth_pac_map_traced<O: QueryOracle>(
    oracle: &O,
    params: PacParams,
    smooth: SmoothOptions,
    opts: &RunOptions,
    sink: &mut dyn FnMut(&TrajectoryPoint),
) -> Result<Solution> {
    Engine::new(oracle, params, opts, Some(smooth))?.run(sink)
}

struct Engine<'a, O> {
    oracle: &'a O,
    params: PacParams,
    opts: &'a RunOptions,
    smooth: Option<SmoothOptions>,
    stream: DrawStream,
    coins: DrawStream,
    set: SampleSet,
    buffer: VecDeque<(Assignment, f64)>,
    next_index: u64,
    batch_len: usize,
    stop_m: u64,
    oracle_calls: u64,
    log_one_minus_eps: f64,
    start: Instant,
}

impl<'a, O: QueryOracle> Engine<'a, O> {
    fn new(
        oracle: &'a O,
        params: PacParams,
        opts: &'a RunOptions,
        smooth: Option<SmoothOptions>,
    ) -> Result<Self> {
        let params = PacParams::new(params.epsilon, params.delta)?;
        opts.check(oracle.query_len())?;
        if let Some(s) = smooth {
            if s.radius > oracle.query_len() {
                return Err(Error::param(format!(
                    "radius {} exceeds the {} query variables",
                    s.radius,
                    oracle.query_len()
                )));
            }
            match s.schedule {
                ExploitSchedule::Periodic(0) => return Err(Error::param("exploitation period must be at least 1")),
                ExploitSchedule::Bernoulli(eta) if !(0.0..=1.0).contains(&eta) => {
                    return Err(Error::param(format!("eta must lie in [0, 1], got {eta}")))
                }
                _ => {}
            }
        }
        let stream = DrawStream::new(opts.seed);
        let coins = stream.derive(COIN_TAG);
        Ok(Self {
            oracle,
            params,
            opts,
            smooth,
            stream,
            coins,
            set: SampleSet::new(),
            buffer: VecDeque::new(),
            next_index: 0,
            batch_len: FIRST_BATCH.min(opts.batch_size),
            stop_m: STOP_NEVER,
            oracle_calls: 0,
            log_one_minus_eps: (-params.epsilon).ln_1p(),
            start: Instant::now(),
        })
    }

    fn run(mut self, sink: &mut dyn FnMut(&TrajectoryPoint)) -> Result<Solution> {
        let warm = &self.opts.warm_start;
        let scores = self.oracle.log_prob_batch(warm);
        for (q, lp) in warm.iter().zip(scores) {
            self.oracle_calls += 1;
            self.set.insert_uncounted(q.clone(), lp);
        }
        if let Some(cert) = self.check() {
            return Ok(self.finish(cert));
        }
        loop {
            let cert = self.step()?;
            sink(&self.point());
            if let Some(cert) = cert {
                return Ok(self.finish(cert));
            }
            if self.opts.cap.is_some_and(|cap| self.set.draws() >= cap) {
                let m = self.set.draws();
                let front = ParetoFront::compute(self.set.p_hat(), m, self.opts.frontier_grid)?;
                return Ok(self.finish(Certificate::Budget(front)));
            }
        }
    }

    /// One iteration: optional Bernoulli exploitation, one draw, optional periodic exploitation.
    fn step(&mut self) -> Result<Option<Certificate>> {
        if let Some(SmoothOptions {
            radius,
            schedule: ExploitSchedule::Bernoulli(eta),
        }) = self.smooth
        {
            let j = self.set.draws();
            if self.coins.rng(j).random_bool(eta) {
                self.exploit(radius)?;
                if let Some(cert) = self.check() {
                    return Ok(Some(cert));
                }
            }
        }
        let (q, lp) = self.next_draw();
        self.set.insert_draw(q, lp);
        if let Some(cert) = self.check() {
            return Ok(Some(cert));
        }
        if let Some(SmoothOptions {
            radius,
            schedule: ExploitSchedule::Periodic(period),
        }) = self.smooth
        {
            if self.set.draws().is_multiple_of(period) {
                self.exploit(radius)?;
                return Ok(self.check());
            }
        }
        Ok(None)
    }

    fn next_draw(&mut self) -> (Assignment, f64) {
        if self.buffer.is_empty() {
            let m = self.set.draws();
            let mut count = self.batch_len as u64;
            if let Some(cap) = self.opts.cap {
                count = count.min(cap - m);
            }
            if self.stop_m != STOP_NEVER {
                count = count.min(self.stop_m - m);
            }
            let count = count.max(1) as usize;
            let qs = self.oracle.sample_range(&self.stream, self.next_index, count);
            let lps = self.oracle.log_prob_batch(&qs);
            self.next_index += count as u64;
            self.buffer.extend(qs.into_iter().zip(lps));
            self.batch_len = (self.batch_len * 2).min(self.opts.batch_size);
        }
        self.oracle_calls += 1;
        self.buffer.pop_front().expect("refilled above")
    }

    /// Scores the unseen atoms of the radius-`r` ball around the leader.
    fn exploit(&mut self, radius: usize) -> Result<()> {
        let Some((center, _)) = self.set.best() else {
            return Ok(());
        };
        let fresh: Vec<Assignment> = hamming_ball(center, radius)?
            .into_iter()
            .filter(|q| !self.set.contains(q))
            .collect();
        let scores = self.oracle.log_prob_batch(&fresh);
        self.oracle_calls += fresh.len() as u64;
        for (q, lp) in fresh.into_iter().zip(scores) {
            self.set.insert_uncounted(q, lp);
        }
        Ok(())
    }

    /// Evaluates both stopping conditions and refreshes the stop time.
    fn check(&mut self) -> Option<Certificate> {
        let lp_hat = self.set.log_p_hat();
        if lp_hat == f64::NEG_INFINITY {
            return None;
        }
        let lp_check = self.set.log_p_check();
        if lp_hat >= lp_check {
            return Some(Certificate::Exact);
        }
        if lp_hat >= lp_check + self.log_one_minus_eps {
            return Some(Certificate::DeterministicEps {
                epsilon: self.params.epsilon,
            });
        }
        self.stop_m = stop_time_log(lp_hat, self.params.epsilon, self.params.delta);
        if self.set.draws() >= self.stop_m {
            return Some(Certificate::Pac {
                epsilon: self.params.epsilon,
                delta: self.params.delta,
            });
        }
        None
    }

    fn point(&self) -> TrajectoryPoint {
        let m = self.set.draws();
        let p_hat = self.set.p_hat();
        TrajectoryPoint {
            m,
            p_hat,
            p_check: self.set.p_check(),
            miss_bound: miss_bound(p_hat, self.params.epsilon, m),
            stop_time: self.stop_m,
        }
    }

    fn finish(self, certificate: Certificate) -> Solution {
        let (q_hat, log_p_hat) = self.set.best().map(|(q, l)| (q.clone(), l)).expect("nonempty sample set");
        Solution {
            q_hat,
            log_p_hat,
            certificate,
            draws_used: self.set.draws(),
            oracle_calls: self.oracle_calls,
            distinct_atoms: self.set.len(),
            p_check: self.set.p_check(),
            wall_time: self.start.elapsed(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::TabularDistribution;

    fn params(eps: f64, delta: f64) -> PacParams {
        PacParams::new(eps, delta).unwrap()
    }

    #[test]
    fn point_mass_is_exact_after_one_draw() {
        let mut probs = vec![0.0; 8];
        probs[5] = 1.0;
        let t = TabularDistribution::from_probs(&probs).unwrap();
        let sol = pac_map(&t, params(0.01, 0.01), &RunOptions::seeded(1)).unwrap();
        assert_eq!(sol.q_hat.to_index(), 5);
        assert_eq!(sol.certificate, Certificate::Exact);
        assert_eq!(sol.draws_used, 1);
        assert_eq!(sol.oracle_calls, 1);
    }

    #[test]
    fn two_even_atoms_stop_at_first_draw() {
        let t = TabularDistribution::from_probs(&[0.5, 0.5]).unwrap();
        let sol = pac_map(&t, params(0.1, 0.1), &RunOptions::seeded(3)).unwrap();
        assert_eq!(sol.draws_used, 1);
        // p̂ = p̌ = 0.5: the unseen atom cannot beat the returned one
        assert_eq!(sol.certificate, Certificate::Exact);
    }

    #[test]
    fn deterministic_epsilon_stop() {
        // one 0.48 atom leaves p̌ = 0.52 and 0.48 >= 0.9 * 0.52
        let t = TabularDistribution::from_probs(&[0.48, 0.04, 0.48, 0.0]).unwrap();
        let sol = pac_map(&t, params(0.1, 0.01), &RunOptions::seeded(0)).unwrap();
        assert!(matches!(
            sol.certificate,
            Certificate::Exact | Certificate::DeterministicEps { .. }
        ));
        assert!((sol.p_hat() - 0.48).abs() < 1e-12);
    }

    #[test]
    fn uniform_stops_probabilistically() {
        let n = 10;
        let t = TabularDistribution::from_probs(&vec![1.0; 1 << n]).unwrap();
        let sol = pac_map(&t, params(0.01, 0.01), &RunOptions::seeded(11)).unwrap();
        let expected = (1024.0 * 0.99 * 100f64.ln()).ceil() as u64;
        assert_eq!(sol.certificate.kind(), "pac");
        assert_eq!(sol.draws_used, expected);
    }

    #[test]
    fn cap_yields_budget_frontier() {
        let n = 10;
        let t = TabularDistribution::from_probs(&vec![1.0; 1 << n]).unwrap();
        let sol = pac_map(&t, params(0.01, 0.01), &RunOptions::seeded(11).with_cap(100)).unwrap();
        assert_eq!(sol.draws_used, 100);
        let Certificate::Budget(front) = &sol.certificate else {
            panic!("expected a budget certificate, got {}", sol.certificate);
        };
        assert_eq!(front.budget, 100);
        assert!(sol.timed_out());
    }

    #[test]
    fn batch_size_does_not_change_the_run() {
        let n = 9;
        let probs: Vec<f64> = (0..1 << n).map(|i| 1.0 + (i % 7) as f64).collect();
        let t = TabularDistribution::from_probs(&probs).unwrap();
        let a = pac_map(&t, params(0.05, 0.05), &RunOptions::seeded(4).with_batch_size(1)).unwrap();
        let b = pac_map(&t, params(0.05, 0.05), &RunOptions::seeded(4).with_batch_size(977)).unwrap();
        assert_eq!(a.q_hat, b.q_hat);
        assert_eq!(a.draws_used, b.draws_used);
        assert_eq!(a.certificate, b.certificate);
    }

    #[test]
    fn trajectory_has_one_point_per_draw() {
        let n = 6;
        let t = TabularDistribution::from_probs(&vec![1.0; 1 << n]).unwrap();
        let mut pts = Vec::new();
        let sol = pac_map_traced(&t, params(0.2, 0.2), &RunOptions::seeded(2), &mut |p| pts.push(*p)).unwrap();
        assert_eq!(pts.len() as u64, sol.draws_used);
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(p.m, i as u64 + 1);
        }
        for w in pts.windows(2) {
            assert!(w[0].p_hat <= w[1].p_hat && w[0].p_check >= w[1].p_check);
        }
    }

    #[test]
    fn full_radius_exploitation_enumerates_the_cube() {
        let n = 5;
        let probs: Vec<f64> = (0..1 << n).map(|i| 1.0 + i as f64).collect();
        let t = TabularDistribution::from_probs(&probs).unwrap();
        let smooth = SmoothOptions {
            radius: n,
            schedule: ExploitSchedule::Periodic(1),
        };
        let sol = smooth_pac_map(&t, params(0.01, 0.01), smooth, &RunOptions::seeded(9)).unwrap();
        assert_eq!(sol.certificate, Certificate::Exact);
        assert_eq!(sol.draws_used, 1);
        assert_eq!(sol.q_hat.to_index(), 31);
        assert_eq!(sol.oracle_calls, 32);
    }

    #[test]
    fn warm_start_covering_everything_needs_no_draws() {
        let t = TabularDistribution::from_probs(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let warm = (0..4).map(|i| Assignment::from_index(i, 2)).collect();
        let sol = pac_map(&t, params(0.01, 0.01), &RunOptions::seeded(0).with_warm_start(warm)).unwrap();
        assert_eq!(sol.draws_used, 0);
        assert_eq!(sol.oracle_calls, 4);
        assert_eq!(sol.q_hat.to_index(), 3);
        assert_eq!(sol.certificate, Certificate::Exact);
    }

    #[test]
    fn bernoulli_schedule_runs() {
        let n = 8;
        let probs: Vec<f64> = (0..1 << n).map(|i| 1.0 + (i as f64).sqrt()).collect();
        let t = TabularDistribution::from_probs(&probs).unwrap();
        let smooth = SmoothOptions {
            radius: 1,
            schedule: ExploitSchedule::Bernoulli(0.05),
        };
        let a = smooth_pac_map(&t, params(0.05, 0.05), smooth, &RunOptions::seeded(5)).unwrap();
        let b = smooth_pac_map(&t, params(0.05, 0.05), smooth, &RunOptions::seeded(5)).unwrap();
        assert_eq!(a.q_hat, b.q_hat);
        assert_eq!(a.oracle_calls, b.oracle_calls);
        assert!(a.oracle_calls > a.draws_used);
    }

    #[test]
    fn rejects_bad_options() {
        let t = TabularDistribution::from_probs(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let p = params(0.1, 0.1);
        assert!(pac_map(&t, p, &RunOptions::seeded(0).with_cap(0)).is_err());
        let bad_warm = RunOptions::seeded(0).with_warm_start(vec![Assignment::zeros(3)]);
        assert!(matches!(pac_map(&t, p, &bad_warm), Err(Error::ArityMismatch { .. })));
        let wide = SmoothOptions {
            radius: 3,
            ..SmoothOptions::default()
        };
        assert!(smooth_pac_map(&t, p, wide, &RunOptions::seeded(0)).is_err());
        assert!(PacParams::new(0.0, 0.5).is_err());
    }
}
