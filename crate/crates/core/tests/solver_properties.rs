mod common;

use common::*;
use pacmap_core::solvers::{
    budget_pac_map, naive_map, pac_map, pac_map_traced, smooth_pac_map_traced, stop_time, Certificate,
    ExploitSchedule, PacParams, RunOptions, SmoothOptions, TrajectoryPoint,
};
use pacmap_core::{Assignment, TabularDistribution};
use proptest::prelude::*;

fn table(probs: &[f64]) -> TabularDistribution {
    TabularDistribution::from_probs(probs).unwrap()
}

#[test]
fn pac_soundness_on_small_tables() {
    let (eps, delta, runs) = (0.05, 0.05, 400);
    let slack = delta + three_sigma(delta, runs);
    let params = PacParams::new(eps, delta).unwrap();
    for inst in 0..6u64 {
        let probs = random_table(6, 1.0, inst);
        let (_, p_star) = argmax(&probs);
        let t = table(&probs);
        let failures = (0..runs as u64)
            .filter(|&s| pac_map(&t, params, &RunOptions::seeded(s)).unwrap().p_hat() < p_star * (1.0 - eps))
            .count();
        assert!(failures as f64 / runs as f64 <= slack, "instance {inst}: {failures} failures");
    }
}

fn first_condition(p: &TrajectoryPoint, eps: f64, delta: f64) -> bool {
    let deterministic = p.p_hat >= p.p_check * (1.0 - eps);
    let probabilistic = p.m >= stop_time(p.p_hat, eps, delta).unwrap();
    deterministic || probabilistic
}

#[test]
fn stop_index_is_the_first_index_satisfying_a_condition() {
    let (eps, delta) = (0.02, 0.05);
    let params = PacParams::new(eps, delta).unwrap();
    for inst in 0..10u64 {
        let t = table(&random_table(7, 1.5, 40 + inst));
        let mut pts = Vec::new();
        let sol = pac_map_traced(&t, params, &RunOptions::seeded(inst), &mut |p| pts.push(*p)).unwrap();
        let (last, before) = pts.split_last().unwrap();
        assert_eq!(last.m, sol.draws_used);
        assert!(first_condition(last, eps, delta));
        for p in before {
            // a relative margin absorbs the log- vs linear-space rounding
            assert!(p.p_hat < p.p_check * (1.0 - eps) * (1.0 + 1e-12), "inst {inst} m {}", p.m);
            assert!(p.m < stop_time(p.p_hat, eps, delta).unwrap());
        }
    }
}

#[test]
fn budget_frontier_is_sound_on_an_adversarial_table() {
    // one mode of 0.08; fifteen atoms of 0.0599, just below 0.08 * (1 - 0.25)
    let mut probs = vec![0.0; 32];
    probs[0] = 0.08;
    for p in probs.iter_mut().skip(1).take(15) {
        *p = 0.0599;
    }
    let rest = (1.0 - 0.08 - 15.0 * 0.0599) / 16.0;
    for p in probs.iter_mut().skip(16) {
        *p = rest;
    }
    let t = table(&probs);
    let (budget, runs) = (20u64, 5000usize);
    for eps in [0.1, 0.25, 0.5] {
        let mut failures = 0usize;
        let mut worst_claim: f64 = 0.0;
        for s in 0..runs as u64 {
            let (sol, front) = budget_pac_map(&t, budget, &RunOptions::seeded(s)).unwrap();
            let claim = front.delta_at(eps).unwrap_or(1.0);
            worst_claim = worst_claim.max(claim);
            if sol.p_hat() < 0.08 * (1.0 - eps) {
                failures += 1;
            }
        }
        let rate = failures as f64 / runs as f64;
        assert!(rate <= worst_claim + three_sigma(worst_claim, runs), "eps {eps}: {rate} vs {worst_claim}");
    }
}

#[test]
fn budget_counts_oracle_calls() {
    let t = table(&random_table(8, 1.0, 3));
    let warm: Vec<Assignment> = (0..5).map(|k| Assignment::from_index(k, 8)).collect();
    for m in [1u64, 17, 1000] {
        let opts = RunOptions::seeded(m).with_warm_start(warm.clone());
        let (sol, front) = budget_pac_map(&t, m, &opts).unwrap();
        assert_eq!(sol.oracle_calls, m + 5);
        assert_eq!(sol.draws_used, m);
        for w in front.points.windows(2) {
            assert!(w[0].0 < w[1].0 && w[0].1 > w[1].1);
        }
    }
}

#[test]
fn naive_discovers_the_mode_at_the_discovery_budget() {
    let (eps, delta, runs) = (0.1f64, 0.05f64, 1000);
    for inst in 0..4u64 {
        let probs = random_table(8, 1.2, 90 + inst);
        let (_, p_star) = argmax(&probs);
        let mu = superlevel(&probs, eps);
        let m = ((1.0 / delta).ln() / mu).ceil() as u64;
        let t = table(&probs);
        let hits = (0..runs as u64)
            .filter(|&s| naive_map(&t, m, &RunOptions::seeded(s)).unwrap().p_hat() >= p_star * (1.0 - eps))
            .count();
        let floor = (1.0 - delta) - three_sigma(delta, runs);
        assert!(hits as f64 / runs as f64 >= floor, "instance {inst}: {hits}");
    }
}

#[test]
fn exploitation_never_lowers_the_running_estimate() {
    let params = PacParams::new(0.01, 0.01).unwrap();
    let smooth = SmoothOptions {
        radius: 1,
        schedule: ExploitSchedule::Periodic(10),
    };
    for inst in 0..8u64 {
        let t = table(&random_table(8, 2.0, 300 + inst));
        let opts = RunOptions::seeded(inst);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        pac_map_traced(&t, params, &opts, &mut |p| a.push(*p)).unwrap();
        smooth_pac_map_traced(&t, params, smooth, &opts, &mut |p| b.push(*p)).unwrap();
        // smooth stops no later than pac; on the shared prefix it dominates
        assert!(b.len() <= a.len());
        for (x, y) in a.iter().zip(&b) {
            assert!(y.p_hat >= x.p_hat && y.p_check <= x.p_check, "inst {inst} m {}", x.m);
        }
    }
}

#[test]
fn exploitation_finds_a_hidden_neighbour_sooner() {
    // a frequent atom at 000000 whose Hamming-1 neighbour 100000 is the rare mode
    let mut probs = vec![0.0; 64];
    probs[0] = 0.3;
    probs[1] = 0.32;
    let rest = 0.38 / 62.0;
    for p in probs.iter_mut().skip(2) {
        *p = rest;
    }
    let t = table(&probs);
    let params = PacParams::new(0.01, 0.01).unwrap();
    let smooth = SmoothOptions {
        radius: 1,
        schedule: ExploitSchedule::Periodic(1),
    };
    let (mut pac_m, mut smooth_m) = (0u64, 0u64);
    for s in 0..500u64 {
        let opts = RunOptions::seeded(s);
        pac_m += pac_map(&t, params, &opts).unwrap().draws_used;
        smooth_m += pacmap_core::solvers::smooth_pac_map(&t, params, smooth, &opts).unwrap().draws_used;
    }
    assert!(smooth_m < pac_m, "smooth {smooth_m} pac {pac_m}");
}

#[test]
fn certification_complexity_quantile() {
    let (eps, delta, runs) = (0.01f64, 0.05f64, 500);
    let params = PacParams::new(eps, delta).unwrap();
    for inst in 0..4u64 {
        let probs = random_table(7, 1.5, 500 + inst);
        let (_, p_star) = argmax(&probs);
        let bound = ((1.0 / delta).ln() / p_star).ceil() as u64 + 1;
        let t = table(&probs);
        let within = (0..runs as u64)
            .filter(|&s| pac_map(&t, params, &RunOptions::seeded(s)).unwrap().draws_used <= bound)
            .count();
        assert!(within as f64 / runs as f64 >= 1.0 - delta, "instance {inst}: {within}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn trajectories_are_monotone_and_consistent(seed in any::<u64>(), n in 2usize..8, eps in 0.01f64..0.3, delta in 0.01f64..0.3) {
        let t = table(&random_table(n, 1.0, seed));
        let params = PacParams::new(eps, delta).unwrap();
        let mut pts = Vec::new();
        let sol = pac_map_traced(&t, params, &RunOptions::seeded(seed), &mut |p| pts.push(*p)).unwrap();
        prop_assert_eq!(pts.len() as u64, sol.draws_used);
        for w in pts.windows(2) {
            prop_assert!(w[0].p_hat <= w[1].p_hat);
            prop_assert!(w[0].p_check >= w[1].p_check);
            prop_assert!(w[0].stop_time >= w[1].stop_time);
        }
        for p in &pts {
            prop_assert!(p.p_hat <= 1.0 - p.p_check + 1e-9);
        }
        match sol.certificate {
            Certificate::Exact => prop_assert!(sol.p_hat() >= sol.p_check * (1.0 - 1e-12)),
            Certificate::DeterministicEps { .. } => prop_assert!(sol.p_hat() >= sol.p_check * (1.0 - eps) * (1.0 - 1e-12)),
            Certificate::Pac { .. } => prop_assert!(sol.draws_used >= stop_time(sol.p_hat(), eps, delta).unwrap()),
            Certificate::Budget(_) => prop_assert!(false, "no cap was set"),
        }
    }

    #[test]
    fn warm_starts_are_never_lost(seed in any::<u64>(), picks in prop::collection::vec(0u64..64, 1..6)) {
        let t = table(&random_table(6, 1.5, seed));
        let warm: Vec<Assignment> = picks.iter().map(|&k| Assignment::from_index(k, 6)).collect();
        let opts = RunOptions::seeded(seed).with_warm_start(warm.clone());
        let params = PacParams::new(0.05, 0.05).unwrap();
        let sol = pac_map(&t, params, &opts).unwrap();
        let (bsol, _) = budget_pac_map(&t, 10, &opts).unwrap();
        for w in &warm {
            let lp = t.log_probs()[w.to_index() as usize];
            prop_assert!(sol.log_p_hat >= lp);
            prop_assert!(bsol.log_p_hat >= lp);
        }
    }

    #[test]
    fn capped_runs_report_budget_frontiers(seed in any::<u64>(), cap in 1u64..50) {
        let t = table(&vec![1.0; 1 << 10]);
        let params = PacParams::new(0.01, 0.01).unwrap();
        let sol = pac_map(&t, params, &RunOptions::seeded(seed).with_cap(cap)).unwrap();
        prop_assert_eq!(sol.draws_used, cap);
        match &sol.certificate {
            Certificate::Budget(front) => {
                prop_assert!(!front.points.is_empty());
                prop_assert_eq!(front.budget, cap);
            }
            other => prop_assert!(false, "unexpected {}", other),
        }
    }
}
