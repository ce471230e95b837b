//! Stopping rules and the Pareto frontier of PAC parameters under a fixed budget.

use crate::error::{Error, Result};

/// Stop-time sentinel meaning "no finite stop time yet".
pub const STOP_NEVER: u64 = u64::MAX;

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::param(format!("{name} must lie in (0, 1), got {x}")));
    }
    Ok(())
}

/// Smallest integer `m` with `m >= (1 - ε) ln(1/δ) / p̂`.
///
/// Natural logarithm. Returns [`STOP_NEVER`] for `p̂ = 0`.
pub fn stop_time(p_hat: f64, epsilon: f64, delta: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::param(format!("p_hat must lie in [0, 1], got {p_hat}")));
    }
    check_unit("epsilon", epsilon)?;
    check_unit("delta", delta)?;
    Ok(stop_time_log(p_hat.ln(), epsilon, delta))
}

/// [`stop_time`] with `p̂` given as a natural log; no argument checks.
pub(crate) fn stop_time_log(log_p_hat: f64, epsilon: f64, delta: f64) -> u64 {
    if log_p_hat == f64::NEG_INFINITY {
        return STOP_NEVER;
    }
    let p_hat = log_p_hat.exp();
    let m = if p_hat > 0.0 {
        ((1.0 - epsilon) * -delta.ln() / p_hat).ceil()
    } else {
        ((1.0 - epsilon).ln() + (-delta.ln()).ln() - log_p_hat).exp().ceil()
    };
    if m.is_finite() && m < STOP_NEVER as f64 {
        (m as u64).max(1)
    } else {
        STOP_NEVER
    }
}

/// `(1 - p̂/(1-ε))^M`, computed as `exp(M · log1p(-p̂/(1-ε)))`.
pub fn pareto_delta(p_hat: f64, epsilon: f64, budget: u64) -> Result<f64> {
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(Error::param(format!("p_hat must lie in (0, 1), got {p_hat}")));
    }
    if !(epsilon >= 0.0 && epsilon < 1.0 - p_hat) {
        return Err(Error::param(format!(
            "epsilon {epsilon} outside the feasible range [0, {})",
            1.0 - p_hat
        )));
    }
    if budget == 0 {
        return Err(Error::param("budget must be at least 1"));
    }
    Ok(pareto_delta_unchecked(p_hat, epsilon, budget))
}

#[inline]
fn pareto_delta_unchecked(p_hat: f64, epsilon: f64, budget: u64) -> f64 {
    (budget as f64 * (-p_hat / (1.0 - epsilon)).ln_1p()).exp()
}

/// Admissible `(ε, δ)` pairs for an estimate `p̂` after `budget` random draws.
#[derive(Clone, Debug, PartialEq)]
pub struct ParetoFront {
    pub p_hat: f64,
    pub budget: u64,
    /// ε ascending, δ strictly descending.
    pub points: Vec<(f64, f64)>,
}

impl ParetoFront {
    /// The degenerate frontier `{(0, 0)}` of an exact solution.
    pub fn exact(p_hat: f64, budget: u64) -> Self {
        Self {
            p_hat,
            budget,
            points: vec![(0.0, 0.0)],
        }
    }

    /// Samples the frontier on `grid` evenly spaced ε values over `[0, 1 - p̂)`,
    /// left endpoint included. Points whose δ does not strictly improve on the
    /// previous one (floating-point ties, underflow) are dominated and dropped.
    pub fn compute(p_hat: f64, budget: u64, grid: usize) -> Result<Self> {
        if !(p_hat > 0.0 && p_hat < 1.0) && p_hat != 0.0 {
            return Err(Error::param(format!("p_hat must lie in [0, 1), got {p_hat}")));
        }
        if budget == 0 || grid == 0 {
            return Err(Error::param("budget and grid must be at least 1"));
        }
        let width = 1.0 - p_hat;
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(grid);
        for i in 0..grid {
            let eps = width * i as f64 / grid as f64;
            let delta = pareto_delta_unchecked(p_hat, eps, budget);
            if points.last().is_none_or(|&(_, prev)| delta < prev) {
                points.push((eps, delta));
            }
        }
        Ok(Self {
            p_hat,
            budget,
            points,
        })
    }

    /// Best δ certified at tolerance `ε`, or `None` outside the feasible range.
    pub fn delta_at(&self, epsilon: f64) -> Option<f64> {
        if self.points == [(0.0, 0.0)] {
            return Some(0.0);
        }
        if !(epsilon >= 0.0 && epsilon < 1.0 - self.p_hat) {
            return None;
        }
        Some(pareto_delta_unchecked(self.p_hat, epsilon, self.budget))
    }

    pub fn is_exact(&self) -> bool {
        self.points == [(0.0, 0.0)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stop_time_anchor() {
        assert_eq!(stop_time(0.104, 0.01, 0.01).unwrap(), 44);
        assert_eq!(stop_time(1.0, 0.5, 0.5).unwrap(), 1);
        assert_eq!(stop_time(0.0, 0.5, 0.5).unwrap(), STOP_NEVER);
        let uniform = stop_time(2f64.powi(-10), 0.01, 0.01).unwrap();
        assert_eq!(uniform, (1024.0 * 0.99 * 100f64.ln()).ceil() as u64);
        assert!(stop_time(0.5, 0.0, 0.5).is_err());
        assert!(stop_time(0.5, 0.5, 1.0).is_err());
        assert!(stop_time(1.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn pareto_delta_closed_form() {
        let d = pareto_delta(0.5, 0.0, 10).unwrap();
        assert!((d - 9.765625e-4).abs() < 1e-15);
        // consistent with the stop time: 44 draws at p̂ ≈ 0.104 reach δ = 0.01
        assert!(pareto_delta(0.104, 0.01, 44).unwrap() <= 0.01);
        assert!(pareto_delta(0.5, 0.5, 10).is_err());
        assert!(pareto_delta(0.5, -0.1, 10).is_err());
    }

    #[test]
    fn delta_vanishes_at_right_endpoint() {
        let p = 0.3;
        let mut prev = f64::INFINITY;
        for k in 1..=8 {
            let eps = (1.0 - p) * (1.0 - 10f64.powi(-k));
            let d = pareto_delta(p, eps, 5).unwrap();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-30);
    }

    #[test]
    fn frontier_is_strictly_monotone() {
        let f = ParetoFront::compute(0.02, 100, 100).unwrap();
        assert_eq!(f.points.len(), 100);
        assert_eq!(f.points[0].0, 0.0);
        for w in f.points.windows(2) {
            assert!(w[0].0 < w[1].0 && w[0].1 > w[1].1);
        }
        assert!(f.points.last().unwrap().0 < 0.98);
        // underflowing deltas are collapsed rather than tied
        let g = ParetoFront::compute(0.5, 10_000, 100).unwrap();
        for w in g.points.windows(2) {
            assert!(w[0].1 > w[1].1);
        }
    }
}
