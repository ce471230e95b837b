use std::collections::HashMap;

use crate::assignment::Assignment;
use crate::logspace::{log1m_exp, log_add};

/// Deduplicated candidate set with running residual mass.
///
/// `draws` counts random draws only. Warm starts and exploitation atoms enter
/// through [`SampleSet::insert_uncounted`] and never advance it.
#[derive(Clone, Debug)]
pub struct SampleSet {
    atoms: HashMap<Assignment, f64>,
    draws: u64,
    log_total_mass: f64,
    best: Option<(Assignment, f64)>,
}

impl Default for SampleSet {
    fn default() -> Self {
        Self::new()
    }
}

impl SampleSet {
    pub fn new() -> Self {
        Self {
            atoms: HashMap::new(),
            draws: 0,
            log_total_mass: f64::NEG_INFINITY,
            best: None,
        }
    }

    /// Records one random draw. Returns `true` if the atom was new.
    pub fn insert_draw(&mut self, q: Assignment, log_p: f64) -> bool {
        self.draws += 1;
        self.admit(q, log_p)
    }

    /// Admits an atom without counting a draw. Returns `true` if it was new.
    pub fn insert_uncounted(&mut self, q: Assignment, log_p: f64) -> bool {
        self.admit(q, log_p)
    }

    fn admit(&mut self, q: Assignment, log_p: f64) -> bool {
        if self.atoms.contains_key(&q) {
            return false;
        }
        self.log_total_mass = log_add(self.log_total_mass, log_p);
        // strict comparison: the first atom attaining the maximum stays leader
        if self.best.as_ref().is_none_or(|(_, b)| log_p > *b) {
            self.best = Some((q.clone(), log_p));
        }
        self.atoms.insert(q, log_p);
        true
    }

    pub fn contains(&self, q: &Assignment) -> bool {
        self.atoms.contains_key(q)
    }

    pub fn get(&self, q: &Assignment) -> Option<f64> {
        self.atoms.get(q).copied()
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn best(&self) -> Option<(&Assignment, f64)> {
        self.best.as_ref().map(|(q, l)| (q, *l))
    }

    pub fn log_p_hat(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |(_, l)| *l)
    }

    pub fn p_hat(&self) -> f64 {
        self.log_p_hat().exp()
    }

    pub fn log_total_mass(&self) -> f64 {
        self.log_total_mass
    }

    /// ln of the residual mass `1 - Σ_S p(q)`, floored at `-inf`.
    pub fn log_p_check(&self) -> f64 {
        log1m_exp(self.log_total_mass.min(0.0))
    }

    /// Residual mass `max(0, 1 - Σ_S p(q))`.
    pub fn p_check(&self) -> f64 {
        (1.0 - self.log_total_mass.exp()).max(0.0)
    }
}
