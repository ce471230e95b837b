//! Smooth, decomposable probabilistic circuits over binary variables.
//!
//! A [`Circuit`] is an immutable DAG stored as a topologically ordered node
//! array: every child index is strictly smaller than its parent's index, so a
//! single forward sweep evaluates the whole circuit. Per-node scopes are
//! computed once at construction.

mod eval;
mod generate;
mod parse;
mod structure;

use crate::assignment::VarId;
use crate::error::{Error, Result};

pub use generate::{generate_deterministic_circuit, generate_random_circuit, GeneratorParams};
pub use parse::{parse_circuit, serialize_circuit, ParseWarning, ParsedCircuit};
pub use structure::{compute_scopes, StructureReport, Violation, ViolationKind};

/// Distribution of a leaf over its single binary variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LeafKind {
    /// `P(x = 1) = theta`.
    Bernoulli(f64),
    /// Point mass at `value`.
    Indicator(bool),
}

impl LeafKind {
    /// ln of the leaf density at `x`.
    #[inline]
    pub fn log_prob(self, x: bool) -> f64 {
        match self {
            LeafKind::Bernoulli(theta) => {
                if x {
                    theta.ln()
                } else {
                    (-theta).ln_1p()
                }
            }
            LeafKind::Indicator(v) => {
                if v == x {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Most likely value; ties go to 0.
    #[inline]
    pub fn argmax(self) -> bool {
        match self {
            LeafKind::Bernoulli(theta) => theta > 0.5,
            LeafKind::Indicator(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf { var: VarId, kind: LeafKind },
    Sum { children: Vec<usize>, weights: Vec<f64> },
    Product { children: Vec<usize> },
}

impl Node {
    pub fn children(&self) -> &[usize] {
        match self {
            Node::Leaf { .. } => &[],
            Node::Sum { children, .. } | Node::Product { children } => children,
        }
    }
}

/// Immutable probabilistic circuit. Safe to share across threads.
#[derive(Clone, Debug)]
pub struct Circuit {
    nodes: Vec<Node>,
    /// ln of sum weights, parallel to `nodes` (empty for non-sum nodes).
    log_weights: Vec<Vec<f64>>,
    scopes: Vec<Vec<VarId>>,
    root: usize,
    num_vars: usize,
}

impl Circuit {
    /// Assembles a circuit from a topologically ordered node array.
    ///
    /// Checks ordering, arity, weights and variable ranges. Sum weights are
    /// normalized; smoothness and decomposability are *not* enforced here
    /// (see [`Circuit::validate_structure`]).
    pub fn new(nodes: Vec<Node>, root: usize, num_vars: usize) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::InvalidCircuit(format!("root {root} out of range")));
        }
        let mut nodes = nodes;
        for (id, node) in nodes.iter_mut().enumerate() {
            match node {
                Node::Leaf { var, kind } => {
                    if var.index() >= num_vars {
                        return Err(Error::InvalidCircuit(format!(
                            "leaf {id} uses variable {var} but only {num_vars} are declared"
                        )));
                    }
                    if let LeafKind::Bernoulli(theta) = kind {
                        if !(0.0..=1.0).contains(theta) {
                            return Err(Error::InvalidCircuit(format!(
                                "leaf {id} has theta {theta} outside [0, 1]"
                            )));
                        }
                    }
                }
                Node::Sum { children, weights } => {
                    if children.is_empty() || children.len() != weights.len() {
                        return Err(Error::InvalidCircuit(format!("sum {id} has malformed children")));
                    }
                    if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                        return Err(Error::InvalidCircuit(format!("sum {id} has a non-positive weight")));
                    }
                    let total: f64 = weights.iter().sum();
                    weights.iter_mut().for_each(|w| *w /= total);
                }
                Node::Product { children } => {
                    if children.is_empty() {
                        return Err(Error::InvalidCircuit(format!("product {id} has no children")));
                    }
                }
            }
            if let Some(&c) = node.children().iter().find(|&&c| c >= id) {
                return Err(Error::InvalidCircuit(format!(
                    "node {id} has child {c} that is not earlier in topological order"
                )));
            }
        }
        let log_weights = nodes
            .iter()
            .map(|n| match n {
                Node::Sum { weights, .. } => weights.iter().map(|w| w.ln()).collect(),
                _ => Vec::new(),
            })
            .collect();
        let scopes = compute_scopes(&nodes);
        Ok(Self {
            nodes,
            log_weights,
            scopes,
            root,
            num_vars,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn scope(&self, id: usize) -> &[VarId] {
        &self.scopes[id]
    }

    pub fn scopes(&self) -> &[Vec<VarId>] {
        &self.scopes
    }

    pub(crate) fn log_weights(&self, id: usize) -> &[f64] {
        &self.log_weights[id]
    }

    pub fn validate_structure(&self) -> StructureReport {
        structure::validate(self)
    }

    /// Errors unless the circuit is smooth, decomposable and its root covers every variable.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate_structure();
        if let Some(v) = report.violations.first() {
            return Err(Error::InvalidCircuit(format!(
                "node {}: {} ({})",
                v.node, v.kind, v.description
            )));
        }
        if self.scopes[self.root].len() != self.num_vars {
            return Err(Error::InvalidCircuit(format!(
                "root scope covers {} of {} variables",
                self.scopes[self.root].len(),
                self.num_vars
            )));
        }
        Ok(())
    }

    /// Builds a deterministic circuit realizing an explicit table over `n`
    /// variables: a root sum over one indicator product per positive atom.
    /// `probs[k]` is the mass of the assignment with bit pattern `k`.
    pub fn from_table(probs: &[f64]) -> Result<Self> {
        let n = probs.len().trailing_zeros() as usize;
        if probs.len() < 2 || probs.len() != 1 << n {
            return Err(Error::param("table length must be a power of two >= 2"));
        }
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::param("table entries must be finite and non-negative"));
        }
        let mut nodes = Vec::with_capacity(2 * n + probs.len() + 1);
        for v in 0..n {
            for value in [false, true] {
                nodes.push(Node::Leaf {
                    var: VarId(v),
                    kind: LeafKind::Indicator(value),
                });
            }
        }
        let mut children = Vec::new();
        let mut weights = Vec::new();
        for (k, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            let leaves = (0..n).map(|v| 2 * v + ((k >> v) & 1)).collect();
            children.push(nodes.len());
            weights.push(p);
            nodes.push(Node::Product { children: leaves });
        }
        if children.is_empty() {
            return Err(Error::param("table has no positive entry"));
        }
        let root = nodes.len();
        nodes.push(Node::Sum { children, weights });
        Self::new(nodes, root, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_order_children() {
        let nodes = vec![
            Node::Product { children: vec![1] },
            Node::Leaf {
                var: VarId(0),
                kind: LeafKind::Bernoulli(0.5),
            },
        ];
        assert!(Circuit::new(nodes, 0, 1).is_err());
    }

    #[test]
    fn single_child_sum_is_legal() {
        let nodes = vec![
            Node::Leaf {
                var: VarId(0),
                kind: LeafKind::Bernoulli(0.3),
            },
            Node::Sum {
                children: vec![0],
                weights: vec![2.0],
            },
        ];
        let c = Circuit::new(nodes, 1, 1).unwrap();
        assert!(c.ensure_valid().is_ok());
        match c.node(1) {
            Node::Sum { weights, .. } => assert_eq!(weights, &vec![1.0]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn table_circuit_is_valid() {
        let c = Circuit::from_table(&[0.4, 0.25, 0.0, 0.35]).unwrap();
        assert!(c.ensure_valid().is_ok());
        assert_eq!(c.num_vars(), 2);
        assert!(Circuit::from_table(&[0.0, 0.0]).is_err());
        assert!(Circuit::from_table(&[1.0, 0.0, 0.0]).is_err());
    }
}
