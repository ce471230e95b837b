//! Log-space arithmetic helpers. All probabilities in this crate are carried as
//! natural logarithms; `-inf` encodes probability zero.

/// `ln(exp(a) + exp(b))` without overflow or underflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Max-shifted log-sum-exp of a slice; `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `ln(Σ w_i exp(x_i))` with weights given in log-space.
#[inline]
pub fn weighted_log_sum_exp<I>(terms: I) -> f64
where
    I: Iterator<Item = (f64, f64)> + Clone,
{
    let max = terms
        .clone()
        .map(|(lw, x)| lw + x)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.map(|(lw, x)| (lw + x - max).exp()).sum();
    max + sum.ln()
}

/// `ln(1 - exp(x))` for `x <= 0`, accurate near both ends.
pub fn log1m_exp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NEG_INFINITY
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}
