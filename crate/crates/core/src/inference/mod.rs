//! Conditional queries over circuits: the exact oracle `p(q | e)`, the exact
//! conditional sampler, and an exhaustive tabular distribution for ground truth.

mod oracle;
mod rng;
mod tabular;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assignment::{Assignment, PartialAssignment, VarId};
use crate::error::{Error, Result};

pub use oracle::ConditionalOracle;
pub use rng::{derive_seed, mix64, DrawStream};
pub use tabular::{brute_force_map, min_entropy, superlevel_mass, TabularDistribution, TABULAR_CAP};

/// Draw batches at least this large are sampled in parallel.
const PARALLEL_THRESHOLD: usize = 256;

/// A sampler for `P(Q | e)` paired with an exact pmf oracle over the same query space.
///
/// This is the interface the MAP solvers consume. Implemented by the
/// circuit-backed [`ConditionalOracle`] and by [`TabularDistribution`].
pub trait QueryOracle: Sync {
    /// Number of query variables.
    fn query_len(&self) -> usize;

    /// ln p(q | e). `q` must have [`QueryOracle::query_len`] positions.
    fn log_prob(&self, q: &Assignment) -> f64;

    /// One draw from `P(Q | e)`.
    fn sample_with(&self, rng: &mut ChaCha8Rng) -> Assignment;

    /// Draws `start .. start + count`, each from its own substream of `stream`.
    fn sample_range(&self, stream: &DrawStream, start: u64, count: usize) -> Vec<Assignment> {
        let end = start + count as u64;
        if count >= PARALLEL_THRESHOLD {
            (start..end)
                .into_par_iter()
                .map(|j| self.sample_with(&mut stream.rng(j)))
                .collect()
        } else {
            (start..end).map(|j| self.sample_with(&mut stream.rng(j))).collect()
        }
    }

    /// Scores a batch, in parallel when large.
    fn log_prob_batch(&self, qs: &[Assignment]) -> Vec<f64> {
        if qs.len() >= PARALLEL_THRESHOLD {
            qs.par_iter().map(|q| self.log_prob(q)).collect()
        } else {
            qs.iter().map(|q| self.log_prob(q)).collect()
        }
    }
}

impl<T: QueryOracle + ?Sized> QueryOracle for &T {
    fn query_len(&self) -> usize {
        (**self).query_len()
    }
    fn log_prob(&self, q: &Assignment) -> f64 {
        (**self).log_prob(q)
    }
    fn sample_with(&self, rng: &mut ChaCha8Rng) -> Assignment {
        (**self).sample_with(rng)
    }
}

/// How a circuit variable participates in a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Query variable at the given position of the query list.
    Query(usize),
    Evidence(bool),
    Nuisance,
}

/// Partition of the circuit variables into query `Q`, evidence `E = e` and nuisance `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuerySpec {
    query: Vec<VarId>,
    evidence: PartialAssignment,
    nuisance: Vec<VarId>,
    roles: Vec<Role>,
}

impl QuerySpec {
    /// Builds and validates a partition of `num_vars` variables.
    pub fn new(
        num_vars: usize,
        query: Vec<VarId>,
        evidence: PartialAssignment,
        nuisance: Vec<VarId>,
    ) -> Result<Self> {
        if query.is_empty() {
            return Err(Error::InvalidQuery("query set is empty".into()));
        }
        let mut roles: Vec<Option<Role>> = vec![None; num_vars];
        let mut assign = |var: VarId, role: Role| -> Result<()> {
            let slot = roles
                .get_mut(var.index())
                .ok_or_else(|| Error::InvalidQuery(format!("variable {var} out of range")))?;
            if slot.is_some() {
                return Err(Error::InvalidQuery(format!("variable {var} listed twice")));
            }
            *slot = Some(role);
            Ok(())
        };
        for (pos, &v) in query.iter().enumerate() {
            assign(v, Role::Query(pos))?;
        }
        for (v, x) in evidence.iter() {
            assign(v, Role::Evidence(x))?;
        }
        for &v in &nuisance {
            assign(v, Role::Nuisance)?;
        }
        let roles = roles
            .into_iter()
            .enumerate()
            .map(|(v, r)| r.ok_or_else(|| Error::InvalidQuery(format!("variable {v} is not covered"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            query,
            evidence,
            nuisance,
            roles,
        })
    }

    /// Query over `query`; all remaining variables are nuisance.
    pub fn with_defaults(num_vars: usize, query: Vec<VarId>, evidence: PartialAssignment) -> Result<Self> {
        let mut used = vec![false; num_vars];
        for v in query.iter().copied().chain(evidence.vars()) {
            if let Some(u) = used.get_mut(v.index()) {
                *u = true;
            }
        }
        let nuisance = (0..num_vars).filter(|&v| !used[v]).map(VarId).collect();
        Self::new(num_vars, query, evidence, nuisance)
    }

    /// Parses the query file format: lines `Q <var>`, `E <var> <0|1>` and
    /// `V <var>`; `#` starts a comment. Unmentioned variables become nuisance.
    pub fn parse(text: &str, num_vars: usize) -> Result<Self> {
        let mut query = Vec::new();
        let mut evidence = PartialAssignment::new();
        let mut nuisance = Vec::new();
        let mut seen = vec![false; num_vars];
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let syntax = |m: &str| Error::Syntax {
                line,
                message: m.to_string(),
            };
            let var: usize = toks
                .get(1)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| syntax("expected a variable index"))?;
            if var >= num_vars {
                return Err(Error::VariableOutOfRange { line, var, num_vars });
            }
            if std::mem::replace(&mut seen[var], true) {
                return Err(syntax(&format!("variable {var} mentioned twice")));
            }
            let expected_len = match toks[0] {
                "Q" => {
                    query.push(VarId(var));
                    2
                }
                "V" => {
                    nuisance.push(VarId(var));
                    2
                }
                "E" => {
                    let value = match toks.get(2) {
                        Some(&"0") => false,
                        Some(&"1") => true,
                        _ => return Err(syntax("evidence value must be 0 or 1")),
                    };
                    evidence.insert(VarId(var), value);
                    3
                }
                other => return Err(syntax(&format!("unknown record `{other}`"))),
            };
            if toks.len() != expected_len {
                return Err(syntax("unexpected trailing tokens"));
            }
        }
        nuisance.extend((0..num_vars).filter(|&v| !seen[v]).map(VarId));
        Self::new(num_vars, query, evidence, nuisance)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.query {
            out.push_str(&format!("Q {v}\n"));
        }
        for (v, x) in self.evidence.iter() {
            out.push_str(&format!("E {v} {}\n", u8::from(x)));
        }
        for v in &self.nuisance {
            out.push_str(&format!("V {v}\n"));
        }
        out
    }

    pub fn query_vars(&self) -> &[VarId] {
        &self.query
    }

    pub fn evidence(&self) -> &PartialAssignment {
        &self.evidence
    }

    pub fn nuisance_vars(&self) -> &[VarId] {
        &self.nuisance
    }

    pub fn num_vars(&self) -> usize {
        self.roles.len()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, var: VarId) -> Role {
        self.roles[var.index()]
    }

    /// Per-variable observation vector for `q` joined with the evidence;
    /// nuisance variables are `None`.
    pub fn observation(&self, q: &Assignment) -> Vec<Option<bool>> {
        self.roles
            .iter()
            .map(|r| match *r {
                Role::Query(pos) => Some(q.get(pos)),
                Role::Evidence(x) => Some(x),
                Role::Nuisance => None,
            })
            .collect()
    }

    /// Observation vector with only the evidence fixed.
    pub fn evidence_observation(&self) -> Vec<Option<bool>> {
        self.roles
            .iter()
            .map(|r| match *r {
                Role::Evidence(x) => Some(x),
                _ => None,
            })
            .collect()
    }
}
