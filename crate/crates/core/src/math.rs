//! Log-domain combinatorics shared by the analytical modules.

use statrs::function::gamma::ln_gamma;

/// Below this many factors the product form is both faster and more accurate
/// than differencing three log-gamma values.
const PRODUCT_CUTOFF: u64 = 256;

/// `ln C(n, k)`, or negative infinity when `k > n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if k <= PRODUCT_CUTOFF {
        let base = (n - k) as f64;
        (1..=k).map(|i| ((base + i as f64) / i as f64).ln()).sum()
    } else {
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
    }
}

/// `C(n, k)` as a float. Zero when `k > n`.
pub fn choose(n: u64, k: u64) -> f64 {
    ln_choose(n, k).exp()
}

/// `ln(m (m-1) ... (m-k+1))`, negative infinity when `k > m`.
pub fn ln_falling(m: u64, k: u64) -> f64 {
    if k > m {
        return f64::NEG_INFINITY;
    }
    (0..k).map(|i| ((m - i) as f64).ln()).sum()
}

pub fn ln_factorial(k: u64) -> f64 {
    ln_falling(k, k)
}

/// Stable `ln(sum(exp(x)))`. Empty input or all `-inf` gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `x^k` for an integer exponent with `0^0 = 1`.
pub(crate) fn powu(x: f64, k: usize) -> f64 {
    x.powi(k as i32)
}
