//! Slow, independent reference evaluations by numerical integration of the
//! defining integrals. They share no code with the series implementations
//! they check.

pub mod quadrature;

use quadrature::integrate;
use std::f64::consts::PI;

// Poisson pmf by direct product, independent of the log-factorial table.
fn poisson(i: u32, x: f64) -> f64 {
    let mut t = (-x).exp();
    for r in 1..=i {
        t *= x / r as f64;
    }
    t
}

fn truncated_exp(m: u32, x: f64) -> f64 {
    (0..=m).map(|i| poisson(i, x)).sum()
}

/// Exponentially scaled Bessel function `e^{-z} I0(z) = (1/pi) int_0^pi
/// e^{z (cos t - 1)} dt`, by the trapezoidal rule (spectrally accurate for
/// this periodic integrand).
pub fn bessel_i0e(z: f64) -> f64 {
    let n = 64 + 16 * (z.sqrt().ceil() as usize);
    let h = PI / n as f64;
    let mut s = 0.5 * (1.0 + (-2.0 * z).exp());
    for k in 1..n {
        s += (z * ((k as f64 * h).cos() - 1.0)).exp();
    }
    s * h / PI
}

/// `Q1(a, b) = int_b^inf x exp(-(x^2 + a^2)/2) I0(a x) dx`.
pub fn marcum_q1_oracle(a: f64, b: f64) -> f64 {
    let f = |x: f64| x * (-0.5 * (x - a) * (x - a)).exp() * bessel_i0e(a * x);
    let top = a.max(b) + 40.0;
    if b < a {
        // split at the peak of the integrand
        integrate(f, b, a, 1e-14) + integrate(f, a, top, 1e-14)
    } else {
        integrate(f, b, top, 1e-14)
    }
}

/// `int_0^S sum_{i<=m} e^{-Al} (Al)^i / i! dl`.
pub fn phi_oracle(m: u32, a: f64, s: f64) -> f64 {
    integrate(|l| truncated_exp(m, a * l), 0.0, s, 1e-15 * s.max(1e-300))
}

/// `int_0^S [sum_{i<=m} Pois(A1 l; i)] [sum_{j<=n} Pois(A2 l; j)] dl`.
pub fn psi_oracle(m: u32, n: u32, a1: f64, a2: f64, s: f64) -> f64 {
    integrate(
        |l| truncated_exp(m, a1 * l) * truncated_exp(n, a2 * l),
        0.0,
        s,
        1e-15 * s.max(1e-300),
    )
}

/// `E[max(Y, Z)] = int_0^{Omega_max} 1 - F_Y(l) F_Z(l) dl` for clipped
/// Rician flows, integrating the CDFs numerically.
pub fn mean_max_oracle(
    cut_k: f64,
    cut_l: f64,
    dl_mean_k: f64,
    dl_mean_l: f64,
    fading: &crate::channel::RicianParams,
) -> f64 {
    let cdf = |cut: f64, mean: f64, l: f64| {
        if l >= cut {
            1.0
        } else {
            crate::channel::rician_power_cdf(mean, fading, l).unwrap_or(1.0)
        }
    };
    let tail = |l: f64| 1.0 - cdf(cut_k, dl_mean_k, l) * cdf(cut_l, dl_mean_l, l);
    let lo = cut_k.min(cut_l);
    let hi = cut_k.max(cut_l);
    let tol = 1e-11 * hi.max(1.0);
    integrate(tail, 0.0, lo, tol) + integrate(tail, lo, hi, tol)
}
