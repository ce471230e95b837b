//! Brute-force reference computations that share no code with the library's
//! evaluation, sampling or tabulation paths.
#![allow(dead_code)]

use pacmap_core::circuit::{Circuit, LeafKind, Node};
use pacmap_core::inference::Role;
use pacmap_core::{PartialAssignment, QuerySpec, VarId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// p(x) by a direct linear-space pass over the node array.
pub fn joint_prob(c: &Circuit, x: &[bool]) -> f64 {
    let mut val = vec![0.0f64; c.len()];
    for (id, node) in c.nodes().iter().enumerate() {
        val[id] = match node {
            Node::Leaf { var, kind } => {
                let xv = x[var.0];
                match *kind {
                    LeafKind::Bernoulli(t) => {
                        if xv {
                            t
                        } else {
                            1.0 - t
                        }
                    }
                    LeafKind::Indicator(b) => (b == xv) as u8 as f64,
                }
            }
            Node::Product { children } => children.iter().map(|&ch| val[ch]).product(),
            Node::Sum { children, weights } => {
                let z: f64 = weights.iter().sum();
                children.iter().zip(weights).map(|(&ch, w)| w / z * val[ch]).sum()
            }
        };
    }
    val[c.root()]
}

/// Bits of `pattern` as a vector of `n` values, position 0 = bit 0.
pub fn bits(pattern: usize, n: usize) -> Vec<bool> {
    (0..n).map(|i| (pattern >> i) & 1 == 1).collect()
}

/// Full joint table over all circuit variables.
pub fn joint_table(c: &Circuit) -> Vec<f64> {
    let n = c.num_vars();
    (0..1usize << n).map(|k| joint_prob(c, &bits(k, n))).collect()
}

/// `p(q | e)` for every query pattern, summing nuisance variables out of the joint table.
pub fn conditional_table(c: &Circuit, spec: &QuerySpec) -> Vec<f64> {
    let n = c.num_vars();
    let joint = joint_table(c);
    let mut out = vec![0.0; 1 << spec.query_vars().len()];
    'outer: for (k, p) in joint.iter().enumerate() {
        let x = bits(k, n);
        let mut q = 0usize;
        for (v, &xv) in x.iter().enumerate() {
            match spec.roles()[v] {
                Role::Evidence(e) if e != xv => continue 'outer,
                Role::Query(pos) if xv => q |= 1 << pos,
                _ => {}
            }
        }
        out[q] += p;
    }
    let z: f64 = out.iter().sum();
    out.iter().map(|p| p / z).collect()
}

/// First index attaining the maximum.
pub fn argmax(p: &[f64]) -> (usize, f64) {
    let mut best = (0, p[0]);
    for (i, &v) in p.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Log-normal masses over `2^n` atoms, normalized; larger `sigma` gives peakier tables.
pub fn random_table(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).unwrap();
    let raw: Vec<f64> = (0..1usize << n).map(|_| normal.sample(&mut rng).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|x| x / z).collect()
}

/// Σ of masses within a factor `(1 - eps)` of the maximum.
pub fn superlevel(p: &[f64], eps: f64) -> f64 {
    let top = p.iter().cloned().fold(0.0, f64::max);
    p.iter().filter(|&&x| x >= top * (1.0 - eps)).sum()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

/// Random disjoint Q/E/V split with at least one query variable.
pub fn random_roles(n: usize, max_query: usize, with_nuisance: bool, seed: u64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vars: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        vars.swap(i, rng.random_range(0..=i));
    }
    let nq = rng.random_range(1..=max_query.min(n));
    let q = vars[..nq].to_vec();
    let rest = &vars[nq..];
    let nv = if with_nuisance && !rest.is_empty() {
        rng.random_range(1..=rest.len().min(4))
    } else {
        0
    };
    let v = rest[..nv].to_vec();
    let e = rest[nv..].to_vec();
    (q, e, v)
}

/// Binomial slack: `3 sqrt(p (1 - p) / n)`.
pub fn three_sigma(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// A full assignment drawn from a joint table (so any projection has positive mass).
pub fn draw_from_table(joint: &[f64], seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: f64 = rng.random::<f64>() * joint.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in joint.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    joint.iter().rposition(|&p| p > 0.0).unwrap()
}

/// A spec over the given roles whose evidence values come from one joint draw.
pub fn make_spec(c: &Circuit, q: &[usize], e: &[usize], v: &[usize], seed: u64) -> QuerySpec {
    let joint = joint_table(c);
    let x = bits(draw_from_table(&joint, seed), c.num_vars());
    let evidence: PartialAssignment = e.iter().map(|&i| (VarId(i), x[i])).collect();
    let ids = |s: &[usize]| s.iter().map(|&i| VarId(i)).collect();
    QuerySpec::new(c.num_vars(), ids(q), evidence, ids(v)).unwrap()
}
