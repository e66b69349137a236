//! Truncated exponential series: regularized incomplete gamma functions at
//! integer order, `P(n, x) = 1 - e^{-x} sum_{r<n} x^r / r!` and its
//! complement `Q(n, x)`. Both are evaluated without subtractive
//! cancellation so tiny values keep full relative precision.

use std::sync::OnceLock;

const TABLE_LEN: usize = 256;
const MAX_SERIES_TERMS: usize = 100_000;

fn factorial_table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; TABLE_LEN];
        for k in 1..TABLE_LEN {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    })
}

/// `ln(k!)`, exact summation below 256 and Stirling's series above.
pub fn ln_factorial(k: u64) -> f64 {
    if (k as usize) < TABLE_LEN {
        return factorial_table()[k as usize];
    }
    let n = k as f64;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    n * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI * n).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// Poisson probability `e^{-x} x^k / k!`.
pub fn poisson_pmf(k: u64, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x.is_infinite() {
        return 0.0;
    }
    (k as f64 * x.ln() - x - ln_factorial(k)).exp()
}

/// Lower regularized incomplete gamma `P(n, x)` for integer `n >= 1`.
pub fn lower_regularized(n: u64, x: f64) -> f64 {
    debug_assert!(n >= 1);
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if n == 1 {
        return -(-x).exp_m1();
    }
    if x < n as f64 + 1.0 {
        lower_series(n, x)
    } else {
        1.0 - upper_sum(n, x)
    }
}

/// Upper regularized incomplete gamma `Q(n, x) = e^{-x} sum_{r<n} x^r / r!`.
pub fn upper_regularized(n: u64, x: f64) -> f64 {
    debug_assert!(n >= 1);
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < n as f64 + 1.0 {
        1.0 - lower_series(n, x)
    } else {
        upper_sum(n, x)
    }
}

// P(n, x) = pmf(n, x) * sum_j x^j / ((n+1)...(n+j)); converges for any x,
// quickly once x < n + 1.
fn lower_series(n: u64, x: f64) -> f64 {
    let lead = poisson_pmf(n, x);
    if lead == 0.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut denom = n as f64;
    for _ in 0..MAX_SERIES_TERMS {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (lead * sum).min(1.0)
}

// Direct sum e^{-x} sum_{r<n} x^r/r!, accumulated from the largest term
// (r = n - 1 when x >= n) downward.
fn upper_sum(n: u64, x: f64) -> f64 {
    let mut term = poisson_pmf(n - 1, x);
    let mut sum = term;
    let mut r = n - 1;
    while r > 0 {
        term *= r as f64 / x;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
        r -= 1;
    }
    sum.min(1.0)
}
