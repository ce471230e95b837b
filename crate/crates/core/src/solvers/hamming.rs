use crate::assignment::Assignment;
use crate::error::{Error, Result};

/// All assignments within Hamming distance `r` of `center`, center first,
/// ordered by distance and then by bit pattern.
pub fn hamming_ball(center: &Assignment, r: usize) -> Result<Vec<Assignment>> {
    let n = center.len();
    if r > n {
        return Err(Error::param(format!("radius {r} exceeds dimension {n}")));
    }
    let mut out = vec![center.clone()];
    let mut flips: Vec<usize> = Vec::with_capacity(r);
    for k in 1..=r {
        let start = out.len();
        // lexicographic k-combinations of flip positions
        flips.clear();
        flips.extend(0..k);
        loop {
            let mut q = center.clone();
            for &i in &flips {
                q.flip(i);
            }
            out.push(q);
            let Some(pos) = (0..k).rev().find(|&p| flips[p] < n - k + p) else {
                break;
            };
            flips[pos] += 1;
            for p in pos + 1..k {
                flips[p] = flips[p - 1] + 1;
            }
        }
        out[start..].sort_by(|a, b| a.cmp_pattern(b));
    }
    Ok(out)
}

/// Σ_{k=0..r} C(n, k).
pub fn hamming_ball_size(n: usize, r: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for k in 0..=r.min(n) {
        total += binom;
        binom = binom * (n - k) as u128 / (k + 1) as u128;
    }
    total
}
