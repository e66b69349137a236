//! First-order Marcum Q-function.
//!
//! Evaluated as a Poisson mixture of integer-order incomplete gamma
//! functions,
//!
//! ```text
//! Q1(a, b) = sum_m  e^{-a^2/2} (a^2/2)^m / m!  *  Q(m + 1, b^2/2)
//! ```
//!
//! Every term is non-negative, so both `Q1` and its complement `1 - Q1` are
//! accumulated directly (the complement from the matching mixture of lower
//! incomplete gammas) and neither suffers cancellation.

use super::gamma::{lower_regularized, poisson_pmf};
use crate::error::{domain, Result};

const MAX_TERMS: usize = 10_000;

/// `Q1(a, b)` together with `1 - Q1(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarcumPair {
    pub q: f64,
    pub complement: f64,
}

fn check(a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0) || !(b >= 0.0) {
        return Err(domain(
            "marcum_q1",
            format!("arguments must be non-negative, got a = {a}, b = {b}"),
        ));
    }
    Ok(())
}

pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    Ok(marcum_pair(a, b)?.q)
}

/// `1 - Q1(a, b)`, accurate when it is tiny.
pub fn marcum_q1_complement(a: f64, b: f64) -> Result<f64> {
    Ok(marcum_pair(a, b)?.complement)
}

pub fn marcum_pair(a: f64, b: f64) -> Result<MarcumPair> {
    check(a, b)?;
    if b == 0.0 {
        return Ok(MarcumPair {
            q: 1.0,
            complement: 0.0,
        });
    }
    if b.is_infinite() {
        return Ok(MarcumPair {
            q: 0.0,
            complement: 1.0,
        });
    }
    let x = 0.5 * a * a;
    let y = 0.5 * b * b;
    if x == 0.0 {
        return Ok(MarcumPair {
            q: (-y).exp(),
            complement: -(-y).exp_m1(),
        });
    }

    let ln_x = x.ln();
    let ln_y = y.ln();
    let mut ln_w = -x;
    let mut ln_py = -y;
    // weights[m] = Poisson(x) pmf at m; pmf_y[m] = Poisson(y) pmf at m
    let mut weights = Vec::with_capacity(64);
    let mut pmf_y = Vec::with_capacity(64);
    let mut upper = 0.0; // Q(m + 1, y)
    let mut q = 0.0;
    for m in 0..MAX_TERMS {
        if m > 0 {
            let lm = (m as f64).ln();
            ln_w += ln_x - lm;
            ln_py += ln_y - lm;
        }
        let w = ln_w.exp();
        let py = ln_py.exp();
        upper = (upper + py).min(1.0);
        let term = w * upper;
        q += term;
        weights.push(w);
        pmf_y.push(py);

        // Past this point successive terms shrink at least twofold, so the
        // remaining tail is bounded by the current term.
        let k = (m + 1) as f64;
        let ratio_bound = x / k * (1.0 + y / k);
        if ratio_bound <= 0.5 && term <= 1e-15 * q && w <= 1e-17 {
            break;
        }
    }

    // complement: sum_m w_m P(m + 1, y), with P built downward from the top
    // order so each step only adds a positive Poisson term.
    let top = weights.len();
    let mut lower = lower_regularized(top as u64, y); // P(top, y)
    let mut p = 0.0;
    for m in (0..top).rev() {
        // P(m + 1, y) = P(m + 2, y) + pmf_y(m + 1)
        if m + 1 < top {
            let next_pmf = if m + 1 < pmf_y.len() {
                pmf_y[m + 1]
            } else {
                poisson_pmf((m + 1) as u64, y)
            };
            lower = (lower + next_pmf).min(1.0);
        }
        p += weights[m] * lower;
    }

    Ok(MarcumPair {
        q: q.min(1.0),
        complement: p.min(1.0),
    })
}
