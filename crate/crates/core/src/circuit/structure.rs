use std::fmt;

use super::{Circuit, Node};
use crate::assignment::VarId;

/// Per-node variable scopes, each sorted ascending.
///
/// Leaf scope is its variable, product scope the union of its children, sum
/// scope the union as well (which equals each child scope once smoothness holds).
pub fn compute_scopes(nodes: &[Node]) -> Vec<Vec<VarId>> {
    let mut scopes: Vec<Vec<VarId>> = Vec::with_capacity(nodes.len());
    for node in nodes {
        let scope = match node {
            Node::Leaf { var, .. } => vec![*var],
            Node::Sum { children, .. } | Node::Product { children } => {
                if let [only] = children.as_slice() {
                    scopes[*only].clone()
                } else {
                    let mut s: Vec<VarId> = children
                        .iter()
                        .flat_map(|&c| scopes[c].iter().copied())
                        .collect();
                    s.sort_unstable();
                    s.dedup();
                    s
                }
            }
        };
        scopes.push(scope);
    }
    scopes
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Smoothness,
    Decomposability,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::Smoothness => f.write_str("smoothness"),
            ViolationKind::Decomposability => f.write_str("decomposability"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub node: usize,
    pub kind: ViolationKind,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    pub is_smooth: bool,
    pub is_decomposable: bool,
    pub violations: Vec<Violation>,
}

impl StructureReport {
    pub fn is_valid(&self) -> bool {
        self.is_smooth && self.is_decomposable
    }
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "smooth: {}", self.is_smooth)?;
        writeln!(f, "decomposable: {}", self.is_decomposable)?;
        for v in &self.violations {
            writeln!(f, "violation node={} property={} {}", v.node, v.kind, v.description)?;
        }
        Ok(())
    }
}

fn fmt_scope(scope: &[VarId]) -> String {
    let items: Vec<String> = scope.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

pub(super) fn validate(c: &Circuit) -> StructureReport {
    let mut violations = Vec::new();
    // scratch marks for the pairwise-disjointness check
    let mut owner: Vec<usize> = vec![usize::MAX; c.num_vars()];
    for (id, node) in c.nodes().iter().enumerate() {
        match node {
            Node::Leaf { .. } => {}
            Node::Sum { children, .. } => {
                let first = c.scope(children[0]);
                if let Some(&bad) = children[1..].iter().find(|&&ch| c.scope(ch) != first) {
                    violations.push(Violation {
                        node: id,
                        kind: ViolationKind::Smoothness,
                        description: format!(
                            "child {} has scope {} but child {} has scope {}",
                            children[0],
                            fmt_scope(first),
                            bad,
                            fmt_scope(c.scope(bad))
                        ),
                    });
                }
            }
            Node::Product { children } => {
                let mut clash = None;
                'outer: for (pos, &ch) in children.iter().enumerate() {
                    for &v in c.scope(ch) {
                        let slot = &mut owner[v.index()];
                        if *slot != usize::MAX && *slot != pos {
                            clash = Some((children[*slot], ch, v));
                            break 'outer;
                        }
                        *slot = pos;
                    }
                }
                for &ch in children {
                    for &v in c.scope(ch) {
                        owner[v.index()] = usize::MAX;
                    }
                }
                if let Some((a, b, v)) = clash {
                    violations.push(Violation {
                        node: id,
                        kind: ViolationKind::Decomposability,
                        description: format!("children {a} and {b} share variable {v}"),
                    });
                }
            }
        }
    }
    StructureReport {
        is_smooth: !violations.iter().any(|v| v.kind == ViolationKind::Smoothness),
        is_decomposable: !violations.iter().any(|v| v.kind == ViolationKind::Decomposability),
        violations,
    }
}
