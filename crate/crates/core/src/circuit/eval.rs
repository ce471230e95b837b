use super::{Circuit, Node};
use crate::assignment::{Assignment, PartialAssignment, VarId};
use crate::error::{Error, Result};

impl Circuit {
    /// Bottom-up log-space pass. `values[v]` is the observed value of variable
    /// `v`, or `None` to marginalize it. Writes every node's log-value into `out`.
    pub fn forward(&self, values: &[Option<bool>], out: &mut Vec<f64>) {
        debug_assert_eq!(values.len(), self.num_vars());
        out.clear();
        out.reserve(self.len());
        for (id, node) in self.nodes().iter().enumerate() {
            let v = match node {
                Node::Leaf { var, kind } => match values[var.index()] {
                    Some(x) => kind.log_prob(x),
                    None => 0.0,
                },
                Node::Product { children } => children.iter().map(|&c| out[c]).sum(),
                Node::Sum { children, .. } => {
                    let lw = self.log_weights(id);
                    let mut max = f64::NEG_INFINITY;
                    for (&c, &w) in children.iter().zip(lw) {
                        max = max.max(out[c] + w);
                    }
                    if max == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        let s: f64 = children
                            .iter()
                            .zip(lw)
                            .map(|(&c, &w)| (out[c] + w - max).exp())
                            .sum();
                        max + s.ln()
                    }
                }
            };
            out.push(v);
        }
    }

    /// Root log-value for a per-variable observation vector (`None` = marginalized).
    pub fn evaluate_partial(&self, values: &[Option<bool>]) -> f64 {
        let mut scratch = Vec::new();
        self.forward(values, &mut scratch);
        scratch[self.root()]
    }

    /// ln p(x) for a complete assignment over all circuit variables.
    pub fn evaluate_complete(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.num_vars() {
            return Err(Error::ArityMismatch {
                expected: self.num_vars(),
                got: x.len(),
            });
        }
        let values: Vec<Option<bool>> = x.iter().map(Some).collect();
        Ok(self.evaluate_partial(&values))
    }

    /// ln p(e) with every variable in `marginalized` summed out.
    ///
    /// `e` and `marginalized` must be disjoint and together cover all variables.
    pub fn evaluate_marginal(&self, e: &PartialAssignment, marginalized: &[VarId]) -> Result<f64> {
        let n = self.num_vars();
        let mut values: Vec<Option<bool>> = vec![None; n];
        let mut covered = vec![false; n];
        for (var, x) in e.iter() {
            if var.index() >= n {
                return Err(Error::InvalidQuery(format!("evidence variable {var} out of range")));
            }
            values[var.index()] = Some(x);
            covered[var.index()] = true;
        }
        for &var in marginalized {
            if var.index() >= n {
                return Err(Error::InvalidQuery(format!("marginalized variable {var} out of range")));
            }
            if covered[var.index()] {
                return Err(Error::InvalidQuery(format!(
                    "variable {var} is both observed and marginalized"
                )));
            }
            covered[var.index()] = true;
        }
        if let Some(v) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidQuery(format!(
                "variable {v} is neither observed nor marginalized"
            )));
        }
        Ok(self.evaluate_partial(&values))
    }
}
