//! Base-10 log-space arithmetic.

/// log10(10^a + 10^b) without leaving log space.
#[inline]
pub fn log10_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (10f64.powf(lo - hi)).ln_1p() / std::f64::consts::LN_10
}

/// log10 of a sum of probabilities given as log10 values. Two passes: the
/// maximum first, then the scaled sum.
pub fn log10_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| 10f64.powf(v - max)).sum();
    max + sum.log10()
}

/// 10^(-log_prob / units).
pub fn perplexity(log_prob: f64, units: f64) -> f64 {
    10f64.powf(-log_prob / units)
}
