//! Heuristic MAP baselines: max-product, argmax-product and independent marginals.
//!
//! Every result is re-scored through the conditional oracle, so the reported
//! `log_p_hat` is comparable with the sampling solvers.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::assignment::{Assignment, VarId};
use crate::circuit::{Circuit, Node};
use crate::error::{Error, Result};
use crate::inference::{ConditionalOracle, QueryOracle, Role};
use crate::logspace::weighted_log_sum_exp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BaselineMethod {
    MaxProduct,
    ArgMaxProduct,
    Independent,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 3] = [
        BaselineMethod::MaxProduct,
        BaselineMethod::ArgMaxProduct,
        BaselineMethod::Independent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::MaxProduct => "mp",
            BaselineMethod::ArgMaxProduct => "amp",
            BaselineMethod::Independent => "ind",
        }
    }

    pub fn run(self, oracle: &ConditionalOracle<'_>) -> BaselineResult {
        match self {
            BaselineMethod::MaxProduct => max_product(oracle),
            BaselineMethod::ArgMaxProduct => arg_max_product(oracle),
            BaselineMethod::Independent => independent_map(oracle),
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::param(format!("unknown baseline '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub q_hat: Assignment,
    /// ln p(q̂ | e) from the oracle, never from the heuristic's own pass.
    pub log_p_hat: f64,
    pub method: BaselineMethod,
    pub wall_time: Duration,
}

fn finish(oracle: &ConditionalOracle<'_>, q_hat: Assignment, method: BaselineMethod, start: Instant) -> BaselineResult {
    let log_p_hat = oracle.log_prob(&q_hat);
    BaselineResult {
        q_hat,
        log_p_hat,
        method,
        wall_time: start.elapsed(),
    }
}

/// Writes the value of `var` into `q` if it is a query variable.
fn project(spec_role: Role, value: bool, q: &mut Assignment) {
    if let Role::Query(pos) = spec_role {
        q.set(pos, value);
    }
}

/// Upward pass with sums replaced by weighted maxima (all free leaves maximized).
fn max_values(c: &Circuit, evidence: &[Option<bool>]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(c.len());
    for (id, node) in c.nodes().iter().enumerate() {
        let v = match node {
            Node::Leaf { var, kind } => match evidence[var.index()] {
                Some(x) => kind.log_prob(x),
                None => kind.log_prob(kind.argmax()),
            },
            Node::Product { children } => children.iter().map(|&ch| out[ch]).sum(),
            Node::Sum { children, .. } => children
                .iter()
                .zip(c.log_weights(id))
                .map(|(&ch, &w)| w + out[ch])
                .fold(f64::NEG_INFINITY, f64::max),
        };
        out.push(v);
    }
    out
}

/// Index of the first child maximizing `w_i + value_i`.
fn best_child(c: &Circuit, id: usize, children: &[usize], values: &[f64]) -> usize {
    let mut best = (children[0], f64::NEG_INFINITY);
    for (&ch, &w) in children.iter().zip(c.log_weights(id)) {
        let v = w + values[ch];
        if v > best.1 {
            best = (ch, v);
        }
    }
    best.0
}

/// Max-product: weighted-max upward pass, then argmax trace from the root.
pub fn max_product(oracle: &ConditionalOracle<'_>) -> BaselineResult {
    let start = Instant::now();
    let c = oracle.circuit();
    let spec = oracle.spec();
    let evidence = spec.evidence_observation();
    let values = max_values(c, &evidence);
    let mut q = Assignment::zeros(spec.query_vars().len());
    let mut stack = vec![c.root()];
    while let Some(id) = stack.pop() {
        match c.node(id) {
            Node::Leaf { var, kind } => project(spec.role(*var), kind.argmax(), &mut q),
            Node::Product { children } => stack.extend_from_slice(children),
            Node::Sum { children, .. } => stack.push(best_child(c, id, children, &values)),
        }
    }
    finish(oracle, q, BaselineMethod::MaxProduct, start)
}

/// A complete assignment to a node's scope, aligned with `Circuit::scope(id)`.
type Candidate = Vec<bool>;

/// Argmax-product: candidate propagation with exact re-evaluation at sum nodes.
///
/// Each sum node keeps the best of its children's candidates under its own
/// subcircuit. The pool at a sum node holds, per child, both the child's
/// propagated candidate and its max-product candidate, so the result never
/// scores below max-product on the same circuit.
pub fn arg_max_product(oracle: &ConditionalOracle<'_>) -> BaselineResult {
    let start = Instant::now();
    let c = oracle.circuit();
    let spec = oracle.spec();
    let evidence = spec.evidence_observation();
    let mp_values = max_values(c, &evidence);

    let n = c.num_vars();
    let mut amp: Vec<Candidate> = Vec::with_capacity(c.len());
    let mut mp: Vec<Candidate> = Vec::with_capacity(c.len());
    let mut assign = vec![false; n];
    let mut eval = SubcircuitEval::new(c);

    for (id, node) in c.nodes().iter().enumerate() {
        match node {
            Node::Leaf { var, kind } => {
                let x = evidence[var.index()].unwrap_or_else(|| kind.argmax());
                amp.push(vec![x]);
                mp.push(vec![x]);
            }
            Node::Product { children } => {
                amp.push(concat(c, id, children, &amp, &mut assign));
                mp.push(concat(c, id, children, &mp, &mut assign));
            }
            Node::Sum { children, .. } => {
                let mp_child = best_child(c, id, children, &mp_values);
                let mp_cand = mp[mp_child].clone();
                eval.prepare(id);
                let scope = c.scope(id);
                let mut best: Option<(f64, &Candidate)> = None;
                for &ch in children {
                    for cand in [&amp[ch], &mp[ch]] {
                        if best.is_some_and(|(_, b)| b == cand) {
                            continue;
                        }
                        let v = eval.score(scope, cand, &mut assign);
                        if best.is_none_or(|(bv, _)| v > bv) {
                            best = Some((v, cand));
                        }
                    }
                }
                let chosen = best.map(|(_, cand)| cand.clone()).expect("sum nodes have children");
                amp.push(chosen);
                mp.push(mp_cand);
            }
        }
    }

    let root = c.root();
    let mut q = Assignment::zeros(spec.query_vars().len());
    for (&var, &x) in c.scope(root).iter().zip(&amp[root]) {
        project(spec.role(var), x, &mut q);
    }
    finish(oracle, q, BaselineMethod::ArgMaxProduct, start)
}

/// Joins disjoint child candidates into one aligned with the product's scope.
fn concat(c: &Circuit, id: usize, children: &[usize], cands: &[Candidate], assign: &mut [bool]) -> Candidate {
    for &ch in children {
        for (&var, &x) in c.scope(ch).iter().zip(&cands[ch]) {
            assign[var.index()] = x;
        }
    }
    c.scope(id).iter().map(|v| assign[v.index()]).collect()
}

/// Evaluates complete assignments on the sub-DAG below one node.
struct SubcircuitEval<'c> {
    circuit: &'c Circuit,
    stamp: Vec<usize>,
    generation: usize,
    order: Vec<usize>,
    values: Vec<f64>,
}

impl<'c> SubcircuitEval<'c> {
    fn new(circuit: &'c Circuit) -> Self {
        Self {
            circuit,
            stamp: vec![0; circuit.len()],
            generation: 0,
            order: Vec::new(),
            values: vec![0.0; circuit.len()],
        }
    }

    /// Collects the descendants of `root` in topological (ascending id) order.
    fn prepare(&mut self, root: usize) {
        self.generation += 1;
        self.order.clear();
        let mut stack = vec![root];
        self.stamp[root] = self.generation;
        while let Some(id) = stack.pop() {
            self.order.push(id);
            for &ch in self.circuit.node(id).children() {
                if self.stamp[ch] != self.generation {
                    self.stamp[ch] = self.generation;
                    stack.push(ch);
                }
            }
        }
        self.order.sort_unstable();
    }

    fn score(&mut self, scope: &[VarId], cand: &[bool], assign: &mut [bool]) -> f64 {
        for (&var, &x) in scope.iter().zip(cand) {
            assign[var.index()] = x;
        }
        let c = self.circuit;
        for &id in &self.order {
            let v = match c.node(id) {
                Node::Leaf { var, kind } => kind.log_prob(assign[var.index()]),
                Node::Product { children } => children.iter().map(|&ch| self.values[ch]).sum(),
                Node::Sum { children, .. } => weighted_log_sum_exp(
                    c.log_weights(id)
                        .iter()
                        .zip(children)
                        .map(|(&w, &ch)| (w, self.values[ch])),
                ),
            };
            self.values[id] = v;
        }
        self.values[*self.order.last().expect("prepared")]
    }
}

/// Sets each query variable to its more likely value under `p(Q_j | e)`, ties to 0.
pub fn independent_map(oracle: &ConditionalOracle<'_>) -> BaselineResult {
    let start = Instant::now();
    let c = oracle.circuit();
    let spec = oracle.spec();
    let mut obs = spec.evidence_observation();
    let mut q = Assignment::zeros(spec.query_vars().len());
    for (pos, &var) in spec.query_vars().iter().enumerate() {
        obs[var.index()] = Some(false);
        let l0 = c.evaluate_partial(&obs);
        obs[var.index()] = Some(true);
        let l1 = c.evaluate_partial(&obs);
        obs[var.index()] = None;
        // p(Q_j = 1 | e) > 1/2  <=>  p(Q_j = 1, e) > p(Q_j = 0, e)
        q.set(pos, l1 > l0);
    }
    finish(oracle, q, BaselineMethod::Independent, start)
}

/// `p(Q_j = 1 | e)` for every query variable, in query order.
pub fn query_marginals(oracle: &ConditionalOracle<'_>) -> Vec<f64> {
    let c = oracle.circuit();
    let spec = oracle.spec();
    let mut obs = spec.evidence_observation();
    spec.query_vars()
        .iter()
        .map(|&var| {
            obs[var.index()] = Some(true);
            let l1 = c.evaluate_partial(&obs);
            obs[var.index()] = None;
            (l1 - oracle.log_p_evidence()).exp().min(1.0)
        })
        .collect()
}
