//! Line-oriented text format for circuits.
//!
//! ```text
//! spn v1
//! vars <n>
//! leaf <id> bernoulli <var> <theta>
//! leaf <id> indicator <var> <value>
//! sum <id> <child>:<weight> [<child>:<weight> ...]
//! prod <id> <child> [<child> ...]
//! root <id>
//! ```
//!
//! `#` starts a comment. Children must be declared on an earlier line and the
//! `root` line comes last. File ids are arbitrary non-negative integers; they
//! are mapped to array positions in declaration order.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Circuit, LeafKind, Node};
use crate::assignment::VarId;
use crate::error::{Error, Result};

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ParseWarning {
    pub line: usize,
    pub node: usize,
    pub message: String,
}

#[derive(Clone, Debug)]
pub struct ParsedCircuit {
    pub circuit: Circuit,
    pub warnings: Vec<ParseWarning>,
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| syntax(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| syntax(line, format!("invalid {what} `{tok}`")))
}

struct Parser {
    num_vars: Option<usize>,
    ids: HashMap<usize, usize>,
    nodes: Vec<Node>,
    root: Option<usize>,
    warnings: Vec<ParseWarning>,
}

impl Parser {
    fn resolve(&self, line: usize, id: usize) -> Result<usize> {
        self.ids
            .get(&id)
            .copied()
            .ok_or(Error::ForwardReference { line, child: id })
    }

    fn declare(&mut self, line: usize, id: usize, node: Node) -> Result<()> {
        if self.ids.contains_key(&id) {
            return Err(syntax(line, format!("node {id} declared twice")));
        }
        self.ids.insert(id, self.nodes.len());
        self.nodes.push(node);
        Ok(())
    }

    fn var(&self, line: usize, tok: Option<&str>) -> Result<VarId> {
        let var: usize = parse_num(tok, line, "variable index")?;
        let n = self.num_vars.expect("checked by caller");
        if var >= n {
            return Err(Error::VariableOutOfRange {
                line,
                var,
                num_vars: n,
            });
        }
        Ok(VarId(var))
    }

    fn line(&mut self, lineno: usize, toks: &[&str]) -> Result<()> {
        if self.root.is_some() {
            return Err(syntax(lineno, "content after the root declaration"));
        }
        let keyword = toks[0];
        if self.num_vars.is_none() && keyword != "vars" {
            return Err(syntax(lineno, "expected `vars <n>` before node declarations"));
        }
        let mut it = toks[1..].iter().copied();
        match keyword {
            "vars" => {
                if self.num_vars.is_some() {
                    return Err(syntax(lineno, "duplicate `vars` line"));
                }
                let n: usize = parse_num(it.next(), lineno, "variable count")?;
                if n == 0 {
                    return Err(syntax(lineno, "variable count must be positive"));
                }
                self.num_vars = Some(n);
            }
            "leaf" => {
                let id: usize = parse_num(it.next(), lineno, "node id")?;
                let kind_tok = it.next().ok_or_else(|| syntax(lineno, "missing leaf kind"))?;
                let var = self.var(lineno, it.next())?;
                let kind = match kind_tok {
                    "bernoulli" => {
                        let theta: f64 = parse_num(it.next(), lineno, "theta")?;
                        if !(0.0..=1.0).contains(&theta) {
                            return Err(syntax(lineno, format!("theta {theta} outside [0, 1]")));
                        }
                        LeafKind::Bernoulli(theta)
                    }
                    "indicator" => match it.next() {
                        Some("0") => LeafKind::Indicator(false),
                        Some("1") => LeafKind::Indicator(true),
                        other => {
                            return Err(syntax(
                                lineno,
                                format!("indicator value must be 0 or 1, got {other:?}"),
                            ))
                        }
                    },
                    other => return Err(syntax(lineno, format!("unknown leaf kind `{other}`"))),
                };
                self.declare(lineno, id, Node::Leaf { var, kind })?;
            }
            "sum" => {
                let id: usize = parse_num(it.next(), lineno, "node id")?;
                let mut children = Vec::new();
                let mut weights = Vec::new();
                for tok in it.by_ref() {
                    let (c, w) = tok
                        .split_once(':')
                        .ok_or_else(|| syntax(lineno, format!("expected <child>:<weight>, got `{tok}`")))?;
                    let c: usize = parse_num(Some(c), lineno, "child id")?;
                    let w: f64 = parse_num(Some(w), lineno, "weight")?;
                    if !(w > 0.0) || !w.is_finite() {
                        return Err(Error::NonPositiveWeight {
                            line: lineno,
                            id,
                            weight: w,
                        });
                    }
                    children.push(self.resolve(lineno, c)?);
                    weights.push(w);
                }
                if children.is_empty() {
                    return Err(Error::EmptyChildren { line: lineno, id });
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    let message = format!("weights sum to {total}; normalized");
                    log::warn!("line {lineno}: sum node {id}: {message}");
                    self.warnings.push(ParseWarning {
                        line: lineno,
                        node: id,
                        message,
                    });
                }
                self.declare(lineno, id, Node::Sum { children, weights })?;
            }
            "prod" => {
                let id: usize = parse_num(it.next(), lineno, "node id")?;
                let children = it
                    .by_ref()
                    .map(|tok| {
                        let c: usize = parse_num(Some(tok), lineno, "child id")?;
                        self.resolve(lineno, c)
                    })
                    .collect::<Result<Vec<_>>>()?;
                if children.is_empty() {
                    return Err(Error::EmptyChildren { line: lineno, id });
                }
                self.declare(lineno, id, Node::Product { children })?;
            }
            "root" => {
                let id: usize = parse_num(it.next(), lineno, "node id")?;
                let pos = *self
                    .ids
                    .get(&id)
                    .ok_or(Error::UnknownNode { line: lineno, id })?;
                self.root = Some(pos);
            }
            other => return Err(syntax(lineno, format!("unknown keyword `{other}`"))),
        }
        if let Some(extra) = it.next() {
            return Err(syntax(lineno, format!("unexpected token `{extra}`")));
        }
        Ok(())
    }
}

/// Parses the text format. Sum weights that do not sum to 1 are normalized
/// and reported in [`ParsedCircuit::warnings`].
pub fn parse_circuit(text: &str) -> Result<ParsedCircuit> {
    let mut header_seen = false;
    let mut p = Parser {
        num_vars: None,
        ids: HashMap::new(),
        nodes: Vec::new(),
        root: None,
        warnings: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if !header_seen {
            if toks != ["spn", "v1"] {
                return Err(syntax(lineno, "expected header `spn v1`"));
            }
            header_seen = true;
            continue;
        }
        p.line(lineno, &toks)?;
    }
    if !header_seen {
        return Err(syntax(1, "empty circuit file"));
    }
    let root = p.root.ok_or(Error::MissingRoot)?;
    let num_vars = p.num_vars.ok_or(Error::MissingRoot)?;
    let circuit = Circuit::new(p.nodes, root, num_vars)?;
    Ok(ParsedCircuit {
        circuit,
        warnings: p.warnings,
    })
}

/// Writes `c` in the text format with dense ids `0..len`.
pub fn serialize_circuit(c: &Circuit) -> String {
    let mut out = String::with_capacity(32 * c.len());
    out.push_str("spn v1\n");
    let _ = writeln!(out, "vars {}", c.num_vars());
    for (id, node) in c.nodes().iter().enumerate() {
        match node {
            Node::Leaf {
                var,
                kind: LeafKind::Bernoulli(theta),
            } => {
                let _ = writeln!(out, "leaf {id} bernoulli {var} {theta}");
            }
            Node::Leaf {
                var,
                kind: LeafKind::Indicator(v),
            } => {
                let _ = writeln!(out, "leaf {id} indicator {var} {}", u8::from(*v));
            }
            Node::Sum { children, weights } => {
                let _ = write!(out, "sum {id}");
                for (c, w) in children.iter().zip(weights) {
                    let _ = write!(out, " {c}:{w}");
                }
                out.push('\n');
            }
            Node::Product { children } => {
                let _ = write!(out, "prod {id}");
                for c in children {
                    let _ = write!(out, " {c}");
                }
                out.push('\n');
            }
        }
    }
    let _ = writeln!(out, "root {}", c.root());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let p = parse_circuit("spn v1\nvars 1\nleaf 0 bernoulli 0 0.7\nroot 0\n").unwrap();
        assert_eq!(p.circuit.len(), 1);
        assert_eq!(p.circuit.scope(p.circuit.root()), &[VarId(0)]);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn normalization_emits_warning() {
        let text = "spn v1\nvars 1\nleaf 0 bernoulli 0 0.9\nleaf 1 bernoulli 0 0.1\nsum 2 0:3 1:1\nroot 2\n";
        let p = parse_circuit(text).unwrap();
        match p.circuit.node(2) {
            Node::Sum { weights, .. } => {
                assert!((weights[0] - 0.75).abs() < 1e-15);
                assert!((weights[1] - 0.25).abs() < 1e-15);
            }
            _ => panic!("expected sum"),
        }
        assert_eq!(p.warnings.len(), 1);
        assert_eq!(p.warnings[0].line, 5);
    }

    #[test]
    fn forward_reference_rejected() {
        let text = "spn v1\nvars 1\nsum 1 2:0.5 3:0.5\nleaf 2 bernoulli 0 0.5\nleaf 3 bernoulli 0 0.5\nroot 1\n";
        assert!(matches!(
            parse_circuit(text),
            Err(Error::ForwardReference { line: 3, child: 2 })
        ));
    }

    #[test]
    fn error_cases() {
        let cases = [
            ("spn v1\nvars 1\nleaf 0 bernoulli 0 0.5\n", "missing root"),
            ("spn v1\nvars 1\nleaf 0 bernoulli 0 0.5\nroot 4\n", "unknown"),
            ("spn v1\nvars 1\nleaf 0 bernoulli 3 0.5\nroot 0\n", "var range"),
            ("spn v1\nvars 1\nleaf 0 bernoulli 0 0.5\nsum 1 0:0\nroot 1\n", "zero weight"),
            ("spn v1\nvars 1\nleaf 0 bernoulli 0 0.5\nprod 1\nroot 1\n", "empty"),
            ("spn v1\nvars 1\nleaf 0 bernoulli 0 x\nroot 0\n", "syntax"),
            ("spn v2\nvars 1\n", "header"),
            ("spn v1\nvars 1\nleaf 0 bernoulli 0 0.5\nroot 0\nleaf 1 bernoulli 0 0.5\n", "after root"),
        ];
        for (text, label) in cases {
            assert!(parse_circuit(text).is_err(), "{label} should fail");
        }
        assert!(matches!(
            parse_circuit(cases[0].0),
            Err(Error::MissingRoot)
        ));
        assert!(matches!(
            parse_circuit(cases[1].0),
            Err(Error::UnknownNode { id: 4, .. })
        ));
        assert!(matches!(
            parse_circuit(cases[2].0),
            Err(Error::VariableOutOfRange { var: 3, .. })
        ));
        assert!(matches!(
            parse_circuit(cases[3].0),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            parse_circuit(cases[4].0),
            Err(Error::EmptyChildren { .. })
        ));
        assert!(matches!(parse_circuit(cases[5].0), Err(Error::Syntax { line: 3, .. })));
    }

    #[test]
    fn comments_and_sparse_ids() {
        let text = "# header comment\nspn v1\nvars 2 # two vars\n\nleaf 10 indicator 0 1\nleaf 7 bernoulli 1 0.25\nprod 99 10 7\nroot 99\n";
        let p = parse_circuit(text).unwrap();
        assert_eq!(p.circuit.root(), 2);
        assert!(p.circuit.ensure_valid().is_ok());
    }

    #[test]
    fn one_leaf_round_trip() {
        let text = "spn v1\nvars 1\nleaf 0 bernoulli 0 0.7\nroot 0\n";
        let c = parse_circuit(text).unwrap().circuit;
        assert_eq!(serialize_circuit(&c), text);
    }
}
