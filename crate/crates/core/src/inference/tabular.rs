use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ConditionalOracle, QueryOracle};
use crate::assignment::Assignment;
use crate::error::{Error, Result};

/// Largest query dimension that may be tabulated (2^24 binary64 log-probs).
pub const TABULAR_CAP: usize = 24;

/// Explicit pmf over `{0,1}^n`, indexed by assignment bit pattern.
///
/// Doubles as a [`QueryOracle`]: lookups are O(1) and draws use inverse-CDF
/// sampling, which makes it the reference substrate for solver statistics.
#[derive(Clone, Debug)]
pub struct TabularDistribution {
    n: usize,
    log_probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabularDistribution {
    /// Builds a table from non-negative masses (normalized here).
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let n = probs.len().trailing_zeros() as usize;
        if probs.is_empty() || probs.len() != 1 << n {
            return Err(Error::param("table length must be a power of two"));
        }
        if n > TABULAR_CAP {
            return Err(Error::TooLarge(n));
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::param("table entries must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::param("table has no mass"));
        }
        let log_probs = probs.iter().map(|p| (p / total).ln()).collect();
        Ok(Self::from_normalized_log(n, log_probs))
    }

    /// Builds a table from log-masses (normalized here).
    pub fn from_log_probs(log_probs: Vec<f64>) -> Result<Self> {
        let n = log_probs.len().trailing_zeros() as usize;
        if log_probs.is_empty() || log_probs.len() != 1 << n {
            return Err(Error::param("table length must be a power of two"));
        }
        if n > TABULAR_CAP {
            return Err(Error::TooLarge(n));
        }
        let z = crate::logspace::log_sum_exp(&log_probs);
        if !z.is_finite() {
            return Err(Error::param("table has no mass"));
        }
        let normalized = log_probs.into_iter().map(|l| l - z).collect();
        Ok(Self::from_normalized_log(n, normalized))
    }

    fn from_normalized_log(n: usize, log_probs: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cdf = log_probs
            .iter()
            .map(|l| {
                acc += l.exp();
                acc
            })
            .collect();
        Self { n, log_probs, cdf }
    }

    /// Exhaustively tabulates `p(q | e)` for every query assignment.
    pub fn tabulate(oracle: &ConditionalOracle<'_>) -> Result<Self> {
        let n = oracle.query_len();
        if n > TABULAR_CAP {
            return Err(Error::TooLarge(n));
        }
        let log_probs: Vec<f64> = (0..1u64 << n)
            .into_par_iter()
            .map(|k| oracle.log_prob(&Assignment::from_index(k, n)))
            .collect();
        // keep the oracle's values verbatim; they are already conditional
        Ok(Self::from_normalized_log(n, log_probs))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.log_probs[index].exp()
    }

    pub fn total_mass(&self) -> f64 {
        self.cdf.last().copied().unwrap_or(0.0)
    }
}

impl QueryOracle for TabularDistribution {
    fn query_len(&self) -> usize {
        self.n
    }

    fn log_prob(&self, q: &Assignment) -> f64 {
        self.log_probs[q.to_index() as usize]
    }

    fn sample_with(&self, rng: &mut ChaCha8Rng) -> Assignment {
        let u = rng.random::<f64>() * self.total_mass();
        let mut k = self.cdf.partition_point(|&c| c <= u);
        if k == self.cdf.len() {
            k = self
                .log_probs
                .iter()
                .rposition(|l| *l > f64::NEG_INFINITY)
                .expect("table has mass");
        }
        Assignment::from_index(k as u64, self.n)
    }
}

/// Exact MAP by full scan; ties go to the smallest bit pattern.
pub fn brute_force_map(t: &TabularDistribution) -> (Assignment, f64) {
    let mut best = 0;
    for (k, &l) in t.log_probs.iter().enumerate() {
        if l > t.log_probs[best] {
            best = k;
        }
    }
    (Assignment::from_index(best as u64, t.n), t.log_probs[best])
}

/// Mass of the ε-superlevel set `{q : p(q) >= p* (1 - ε)}`.
pub fn superlevel_mass(t: &TabularDistribution, epsilon: f64) -> f64 {
    let (_, log_p_star) = brute_force_map(t);
    let threshold = log_p_star.exp() * (1.0 - epsilon);
    t.log_probs
        .iter()
        .map(|l| l.exp())
        .filter(|&p| p >= threshold)
        .sum()
}

/// Min-entropy `-log2 p*` in bits.
pub fn min_entropy(p_star: f64) -> Result<f64> {
    if !(p_star > 0.0) || p_star > 1.0 {
        return Err(Error::param(format!("p* must lie in (0, 1], got {p_star}")));
    }
    Ok(-p_star.log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_small_tables() {
        let t = TabularDistribution::from_probs(&[0.3, 0.7]).unwrap();
        let (q, lp) = brute_force_map(&t);
        assert_eq!(q.to_index(), 1);
        assert!((lp - 0.7f64.ln()).abs() < 1e-15);
        let u = TabularDistribution::from_probs(&[1.0; 8]).unwrap();
        assert_eq!(brute_force_map(&u).0, Assignment::zeros(3));
    }

    #[test]
    fn superlevel_examples() {
        let t = TabularDistribution::from_probs(&[0.5, 0.3, 0.15, 0.05]).unwrap();
        assert!((superlevel_mass(&t, 0.5) - 0.8).abs() < 1e-12);
        let point = TabularDistribution::from_probs(&[0.0, 1.0, 0.0, 0.0]).unwrap();
        for eps in [0.01, 0.5, 0.99] {
            assert!((superlevel_mass(&point, eps) - 1.0).abs() < 1e-12);
        }
        let u = TabularDistribution::from_probs(&[1.0; 64]).unwrap();
        assert!((superlevel_mass(&u, 0.01) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn min_entropy_values() {
        assert_eq!(min_entropy(0.5).unwrap(), 1.0);
        assert!((min_entropy(2f64.powi(-10)).unwrap() - 10.0).abs() < 1e-12);
        assert!((min_entropy(0.104).unwrap() - 3.265).abs() < 1e-3);
        assert!(min_entropy(0.0).is_err());
        assert!(min_entropy(-0.1).is_err());
    }

    #[test]
    fn cap_enforced() {
        use crate::assignment::{PartialAssignment, VarId};
        use crate::circuit::generate_random_circuit;
        use crate::inference::QuerySpec;
        let c = generate_random_circuit(25, 1, 2, 0).unwrap();
        let spec = QuerySpec::new(25, (0..25).map(VarId).collect(), PartialAssignment::new(), vec![]).unwrap();
        let o = ConditionalOracle::new(&c, spec).unwrap();
        assert!(matches!(TabularDistribution::tabulate(&o), Err(Error::TooLarge(25))));
    }
}
