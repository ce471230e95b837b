use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{Circuit, LeafKind, Node};
use crate::assignment::VarId;
use crate::error::{Error, Result};

/// Parameters for [`generate_random_circuit`], recorded so a generated corpus
/// can be rebuilt exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorParams {
    pub num_vars: usize,
    pub depth: usize,
    pub fanout: usize,
    pub seed: u64,
}

impl GeneratorParams {
    pub fn generate(&self) -> Result<Circuit> {
        generate_random_circuit(self.num_vars, self.depth, self.fanout, self.seed)
    }
}

struct Builder {
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

impl Builder {
    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn theta(&mut self) -> f64 {
        self.rng.random_range(0.01..0.99)
    }

    fn weights(&mut self, k: usize) -> Vec<f64> {
        // symmetric Dirichlet(1) draw
        let raw: Vec<f64> = (0..k)
            .map(|_| {
                let g: f64 = self.rng.sample(Exp1);
                g.max(1e-12)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    fn bernoulli(&mut self, var: usize) -> usize {
        let theta = self.theta();
        self.push(Node::Leaf {
            var: VarId(var),
            kind: LeafKind::Bernoulli(theta),
        })
    }

    fn factorized(&mut self, vars: &[usize]) -> usize {
        if let [v] = vars {
            return self.bernoulli(*v);
        }
        let children = vars.iter().map(|&v| self.bernoulli(v)).collect();
        self.push(Node::Product { children })
    }

    fn split(&mut self, vars: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut shuffled = vars.to_vec();
        shuffled.shuffle(&mut self.rng);
        let right = shuffled.split_off(shuffled.len() / 2);
        (shuffled, right)
    }

    fn region(&mut self, vars: &[usize], depth: usize, fanout: usize) -> usize {
        if depth == 0 {
            return self.factorized(vars);
        }
        let children: Vec<usize> = (0..fanout)
            .map(|_| {
                if vars.len() == 1 {
                    self.bernoulli(vars[0])
                } else {
                    let (a, b) = self.split(vars);
                    let l = self.region(&a, depth - 1, fanout);
                    let r = self.region(&b, depth - 1, fanout);
                    self.push(Node::Product { children: vec![l, r] })
                }
            })
            .collect();
        let weights = self.weights(fanout);
        self.push(Node::Sum { children, weights })
    }

    fn deterministic_region(&mut self, vars: &[usize], depth: usize) -> usize {
        if depth == 0 || vars.len() == 1 {
            return self.factorized(vars);
        }
        if vars.len() >= 4 && self.rng.random_bool(0.3) {
            let (a, b) = self.split(vars);
            let l = self.deterministic_region(&a, depth - 1);
            let r = self.deterministic_region(&b, depth - 1);
            return self.push(Node::Product { children: vec![l, r] });
        }
        let pivot = vars[self.rng.random_range(0..vars.len())];
        let rest: Vec<usize> = vars.iter().copied().filter(|&v| v != pivot).collect();
        let children = [false, true]
            .into_iter()
            .map(|value| {
                let ind = self.push(Node::Leaf {
                    var: VarId(pivot),
                    kind: LeafKind::Indicator(value),
                });
                let sub = self.deterministic_region(&rest, depth - 1);
                self.push(Node::Product {
                    children: vec![ind, sub],
                })
            })
            .collect();
        let weights = self.weights(2);
        self.push(Node::Sum { children, weights })
    }
}

fn check(n: usize, depth: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("variable count must be at least 1"));
    }
    if depth == 0 {
        return Err(Error::param("depth must be at least 1"));
    }
    Ok(())
}

/// Generates a smooth, decomposable circuit over `n` variables by recursive
/// region splitting.
///
/// Each of `depth` levels is a sum over `fanout` independently generated
/// children; every child is a product over a random balanced bipartition of the
/// region. Singleton regions become Bernoulli leaves and regions reached with
/// no depth left become fully factorized products. Deterministic in `seed`.
pub fn generate_random_circuit(n: usize, depth: usize, fanout: usize, seed: u64) -> Result<Circuit> {
    check(n, depth)?;
    if fanout < 2 {
        return Err(Error::param("fanout must be at least 2"));
    }
    let mut b = Builder {
        nodes: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let vars: Vec<usize> = (0..n).collect();
    let root = b.region(&vars, depth, fanout);
    Circuit::new(b.nodes, root, n)
}

/// Generates a circuit that is deterministic by construction: every sum node
/// branches on the value of one variable through indicator leaves.
pub fn generate_deterministic_circuit(n: usize, depth: usize, seed: u64) -> Result<Circuit> {
    check(n, depth)?;
    let mut b = Builder {
        nodes: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let vars: Vec<usize> = (0..n).collect();
    let root = b.deterministic_region(&vars, depth);
    Circuit::new(b.nodes, root, n)
}
