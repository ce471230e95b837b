use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DrawStream, QueryOracle, QuerySpec, Role};
use crate::assignment::Assignment;
use crate::circuit::{Circuit, LeafKind, Node};
use crate::error::{Error, Result};

/// Exact conditional oracle and sampler for `P(Q | e)` backed by a smooth,
/// decomposable circuit.
///
/// Construction runs one upward pass with `e` fixed and `Q ∪ V` marginalized.
/// That pass yields `ln p(e)` and, at every sum node, the posterior branch
/// probabilities used by the top-down sampler.
#[derive(Clone, Debug)]
pub struct ConditionalOracle<'c> {
    circuit: &'c Circuit,
    spec: QuerySpec,
    log_p_evidence: f64,
    /// Cumulative branch probabilities per sum node (empty for other nodes).
    branch_cdf: Vec<Vec<f64>>,
}

impl<'c> ConditionalOracle<'c> {
    pub fn new(circuit: &'c Circuit, spec: QuerySpec) -> Result<Self> {
        circuit.ensure_valid()?;
        if spec.num_vars() != circuit.num_vars() {
            return Err(Error::InvalidQuery(format!(
                "query spec covers {} variables, circuit has {}",
                spec.num_vars(),
                circuit.num_vars()
            )));
        }
        let mut values = Vec::new();
        circuit.forward(&spec.evidence_observation(), &mut values);
        let log_p_evidence = values[circuit.root()];
        if log_p_evidence == f64::NEG_INFINITY || log_p_evidence.is_nan() {
            return Err(Error::ZeroProbabilityEvidence);
        }
        let branch_cdf = circuit
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, node)| match node {
                Node::Sum { children, .. } => {
                    let own = values[id];
                    if own == f64::NEG_INFINITY {
                        return Vec::new();
                    }
                    let mut acc = 0.0;
                    children
                        .iter()
                        .zip(circuit.log_weights(id))
                        .map(|(&c, &lw)| {
                            acc += (lw + values[c] - own).exp();
                            acc
                        })
                        .collect()
                }
                _ => Vec::new(),
            })
            .collect();
        Ok(Self {
            circuit,
            spec,
            log_p_evidence,
            branch_cdf,
        })
    }

    pub fn circuit(&self) -> &'c Circuit {
        self.circuit
    }

    pub fn spec(&self) -> &QuerySpec {
        &self.spec
    }

    /// Cached ln p(e).
    pub fn log_p_evidence(&self) -> f64 {
        self.log_p_evidence
    }

    /// ln p(q | e), with nuisance variables summed out.
    pub fn conditional_log_prob(&self, q: &Assignment) -> Result<f64> {
        if q.len() != self.spec.query_vars().len() {
            return Err(Error::ArityMismatch {
                expected: self.spec.query_vars().len(),
                got: q.len(),
            });
        }
        Ok(self.log_prob(q))
    }

    /// ln p(obs) - ln p(e) for an arbitrary observation vector that extends the evidence.
    pub fn conditional_log_prob_partial(&self, obs: &[Option<bool>]) -> f64 {
        (self.circuit.evaluate_partial(obs) - self.log_p_evidence).min(0.0)
    }

    /// `count` i.i.d. draws from `P(Q | e)`; draw `j` uses substream `j` of `seed`.
    pub fn sample_conditional(&self, count: usize, seed: u64) -> Vec<Assignment> {
        self.sample_range(&DrawStream::new(seed), 0, count)
    }

    /// Top-down descent that also reports values of the nuisance variables.
    /// Returns the full per-variable vector (evidence included).
    pub fn sample_joint(&self, rng: &mut ChaCha8Rng) -> Vec<bool> {
        let mut full: Vec<bool> = self
            .spec
            .roles()
            .iter()
            .map(|r| matches!(r, Role::Evidence(true)))
            .collect();
        self.descend(rng, |var, x| full[var] = x);
        full
    }

    fn descend(&self, rng: &mut ChaCha8Rng, mut emit: impl FnMut(usize, bool)) {
        let nodes = self.circuit.nodes();
        let mut stack = vec![self.circuit.root()];
        while let Some(id) = stack.pop() {
            match &nodes[id] {
                Node::Leaf { var, kind } => {
                    if let Role::Evidence(_) = self.spec.role(*var) {
                        continue;
                    }
                    let x = match *kind {
                        LeafKind::Bernoulli(theta) => rng.random::<f64>() < theta,
                        LeafKind::Indicator(v) => v,
                    };
                    emit(var.index(), x);
                }
                Node::Product { children } => stack.extend_from_slice(children),
                Node::Sum { children, .. } => {
                    let cdf = &self.branch_cdf[id];
                    let total = *cdf.last().expect("reachable sum has a cdf");
                    let u = rng.random::<f64>() * total;
                    let mut pick = cdf.partition_point(|&c| c <= u);
                    if pick == cdf.len() {
                        // rounding at the top end: take the last branch with positive mass
                        pick = (0..cdf.len())
                            .rev()
                            .find(|&i| cdf[i] > if i == 0 { 0.0 } else { cdf[i - 1] })
                            .expect("positive total implies a positive branch");
                    }
                    stack.push(children[pick]);
                }
            }
        }
    }
}

impl QueryOracle for ConditionalOracle<'_> {
    fn query_len(&self) -> usize {
        self.spec.query_vars().len()
    }

    fn log_prob(&self, q: &Assignment) -> f64 {
        debug_assert_eq!(q.len(), self.query_len());
        self.conditional_log_prob_partial(&self.spec.observation(q))
    }

    fn sample_with(&self, rng: &mut ChaCha8Rng) -> Assignment {
        let mut q = Assignment::zeros(self.query_len());
        let roles = self.spec.roles();
        self.descend(rng, |var, x| {
            if let Role::Query(pos) = roles[var] {
                q.set(pos, x);
            }
        });
        q
    }
}
