//! Closed-form mean of the system SINR `Gamma = max(Y, Z)`, with `Y` and `Z`
//! the clipped Rician downlink SINRs of the two flows.
//!
//! Expanding each Marcum Q-function as a Poisson mixture of truncated
//! exponential series turns the tail integral
//! `E[max(Y, Z)] = int_0^{Omega_max} 1 - F_Y(l) F_Z(l) dl` into finite sums
//! of the two kernels below.

use crate::channel::gamma::{ln_factorial, lower_regularized};
use crate::channel::RicianParams;
use crate::error::{Error, Result};

/// `Phi_m(A, S) = (1/A) sum_{i=0}^{m} [1 - e^{-AS} sum_{r=0}^{i} (AS)^r / r!]`,
/// i.e. `int_0^S sum_{i<=m} e^{-Al} (Al)^i / i! dl`.
pub fn phi(m: u32, a: f64, s: f64) -> f64 {
    debug_assert!(a > 0.0 && s >= 0.0);
    if s == 0.0 {
        return 0.0;
    }
    let x = a * s;
    let total: f64 = (0..=m as u64).map(|i| lower_regularized(i + 1, x)).sum();
    total / a
}

/// `Psi_mn(A1, A2, S) = sum_{i<=m} sum_{j<=n} A1^i A2^j (i+j)! / (i! j! (A1+A2)^{i+j+1})
///  * [1 - e^{-(A1+A2)S} sum_{r<=i+j} ((A1+A2)S)^r / r!]`.
pub fn psi(m: u32, n: u32, a1: f64, a2: f64, s: f64) -> f64 {
    debug_assert!(a1 > 0.0 && a2 > 0.0 && s >= 0.0);
    if s == 0.0 {
        return 0.0;
    }
    let sum_a = a1 + a2;
    let ln_p = (a1 / sum_a).ln();
    let ln_q = (a2 / sum_a).ln();
    let x = sum_a * s;
    let mut total = 0.0;
    for i in 0..=m as u64 {
        for j in 0..=n as u64 {
            let ln_coef = ln_factorial(i + j) - ln_factorial(i) - ln_factorial(j)
                + i as f64 * ln_p
                + j as f64 * ln_q;
            total += ln_coef.exp() * lower_regularized(i + j + 1, x);
        }
    }
    total / sum_a
}

/// Exponent on `|mu| / sigma_g` in the cross term of the mean-SINR series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossExponent {
    /// `2(m + n)`: the exponent produced by multiplying two Marcum series.
    #[default]
    Sum,
    /// `2 m n`, the literal alternative kept for comparison.
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControls {
    /// Highest Poisson index `M` kept in each series.
    pub truncation: u32,
    pub term_tolerance: f64,
    pub exponent: CrossExponent,
}

impl Default for SeriesControls {
    fn default() -> Self {
        Self {
            truncation: 20,
            term_tolerance: 1e-12,
            exponent: CrossExponent::Sum,
        }
    }
}

impl SeriesControls {
    pub fn validate(&self) -> Result<()> {
        if self.truncation < 1 {
            return Err(Error::Validation {
                field: "series.m".into(),
                reason: "truncation must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// `A = 1 / (gamma_bar sigma_g^2)`.
pub fn a_coefficient(mean_snr: f64, fading: &RicianParams) -> f64 {
    1.0 / (mean_snr * fading.scatter_variance())
}

/// Level beyond which a cut level no longer constrains a downlink with mean
/// `mean_snr`: there `Q1` has fallen below `e^{-800}`.
pub fn effective_cut_limit(mean_snr: f64, fading: &RicianParams) -> f64 {
    let b = fading.marcum_a() + 40.0;
    0.5 * mean_snr * fading.scatter_variance() * b * b
}

fn poisson_weights(rate: f64, m_max: u32) -> Vec<f64> {
    let mut w = Vec::with_capacity(m_max as usize + 1);
    let mut cur = (-rate).exp();
    for m in 0..=m_max {
        if m > 0 {
            cur *= rate / m as f64;
        }
        w.push(cur);
    }
    w
}

/// `E[min(Omega, gamma_bar |h|^2)] = int_0^Omega Q1(a, sqrt(2 A l)) dl
///  = e^{-K} sum_m K^m / m! Phi_m(A, Omega)`, with `K = |mu|^2 / sigma_g^2`.
pub fn mean_clipped_sinr(
    cut: f64,
    mean_snr: f64,
    fading: &RicianParams,
    ctl: &SeriesControls,
) -> Result<f64> {
    ctl.validate()?;
    if cut <= 0.0 || mean_snr <= 0.0 {
        return Ok(0.0);
    }
    let cut = cut.min(effective_cut_limit(mean_snr, fading));
    Ok(tail_span(a_coefficient(mean_snr, fading), 0.0, cut, fading, ctl))
}

// e^{-K} sum_m K^m/m! [Phi_m(A, hi) - Phi_m(A, lo)]
fn tail_span(a: f64, lo: f64, hi: f64, fading: &RicianParams, ctl: &SeriesControls) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let k = fading.k_factor();
    let weights = poisson_weights(k, ctl.truncation);
    let mut acc = 0.0;
    for (m, w) in weights.iter().enumerate() {
        let term = w * (phi(m as u32, a, hi) - phi(m as u32, a, lo));
        acc += term;
        if m as f64 > k && term.abs() < ctl.term_tolerance * acc.abs() {
            break;
        }
    }
    acc
}

/// Inputs of the mean-SINR series for one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSinrInputs {
    pub cut_k: f64,
    pub cut_l: f64,
    /// Mean SNR of flow K's downlink `S_l -> U_k`.
    pub dl_mean_k: f64,
    /// Mean SNR of flow L's downlink `S_k -> U_l`.
    pub dl_mean_l: f64,
    pub fading: RicianParams,
}

/// Breakdown of `E[Gamma] = F + G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSinrTerms {
    pub f: f64,
    pub g: f64,
}

impl MeanSinrTerms {
    pub fn total(&self) -> f64 {
        self.f + self.g
    }
}

/// Closed-form `E[Gamma]`.
pub fn mean_system_sinr(inputs: &MeanSinrInputs, ctl: &SeriesControls) -> Result<f64> {
    Ok(mean_system_sinr_terms(inputs, ctl)?.total())
}

pub fn mean_system_sinr_terms(inputs: &MeanSinrInputs, ctl: &SeriesControls) -> Result<MeanSinrTerms> {
    ctl.validate()?;
    let fading = &inputs.fading;
    if !(inputs.cut_k >= 0.0 && inputs.cut_l >= 0.0) {
        return Err(Error::Series {
            reason: "cut levels must be non-negative".into(),
            f_partial: f64::NAN,
            g_partial: f64::NAN,
        });
    }
    // A silent downlink contributes a flow identically zero.
    let clamp = |cut: f64, mean: f64| {
        if mean > 0.0 {
            cut.min(effective_cut_limit(mean, fading))
        } else {
            0.0
        }
    };
    let cut_k = clamp(inputs.cut_k, inputs.dl_mean_k);
    let cut_l = clamp(inputs.cut_l, inputs.dl_mean_l);
    if cut_k == 0.0 || cut_l == 0.0 {
        let (cut, mean) = if cut_k == 0.0 {
            (cut_l, inputs.dl_mean_l)
        } else {
            (cut_k, inputs.dl_mean_k)
        };
        let g = mean_clipped_sinr(cut, mean, fading, ctl)?;
        return Ok(MeanSinrTerms { f: 0.0, g });
    }

    let omega_min = cut_k.min(cut_l);
    let omega_max = cut_k.max(cut_l);
    let a_k = a_coefficient(inputs.dl_mean_k, fading);
    let a_l = a_coefficient(inputs.dl_mean_l, fading);

    let k = fading.k_factor();
    let mm = ctl.truncation;
    let f_sum = match ctl.exponent {
        CrossExponent::Sum => {
            let w = poisson_weights(k, mm);
            let mut acc = 0.0;
            for m in 0..=mm {
                let phi_m = phi(m, a_k, omega_min);
                let mut row = 0.0;
                for n in 0..=mm {
                    let bracket =
                        omega_min - phi_m - phi(n, a_l, omega_min) + psi(m, n, a_k, a_l, omega_min);
                    let term = w[m as usize] * w[n as usize] * bracket;
                    row += term;
                    if n as f64 > k && term.abs() < ctl.term_tolerance * row.abs() {
                        break;
                    }
                }
                acc += row;
                if m as f64 > k && row.abs() < ctl.term_tolerance * acc.abs() {
                    break;
                }
            }
            acc
        }
        CrossExponent::Product => {
            let mut acc = 0.0;
            for m in 0..=mm {
                for n in 0..=mm {
                    let ln_w = (m as f64 * n as f64) * k.ln()
                        - ln_factorial(m as u64)
                        - ln_factorial(n as u64)
                        - 2.0 * k;
                    let bracket = omega_min - phi(m, a_k, omega_min) - phi(n, a_l, omega_min)
                        + psi(m, n, a_k, a_l, omega_min);
                    acc += ln_w.exp() * bracket;
                }
            }
            acc
        }
    };
    let f = omega_min - f_sum;

    // On [Omega_min, Omega_max] the flow with the smaller cut is saturated
    // and only the other downlink's fading matters.
    let a_open = if cut_l >= cut_k { a_l } else { a_k };
    let g = tail_span(a_open, omega_min, omega_max, fading, ctl);

    let total = f + g;
    let slack = 1e-9 * omega_max.max(1.0);
    if !total.is_finite() || total < -slack || total > omega_max + slack || f < -slack {
        return Err(Error::Series {
            reason: format!(
                "mean system SINR {total} outside [0, {omega_max}] (exponent variant {:?})",
                ctl.exponent
            ),
            f_partial: f,
            g_partial: g,
        });
    }
    Ok(MeanSinrTerms { f, g })
}

/// Jensen upper bound on energy efficiency, `W / (2 P_T) log2(1 + E[Gamma])`
/// in bits/joule.
pub fn energy_efficiency_bound(mean_sinr: f64, bandwidth: f64, total_power: f64) -> Result<f64> {
    if !(total_power > 0.0) {
        return Err(crate::error::domain(
            "energy_efficiency_bound",
            format!("total power must be positive, got {total_power}"),
        ));
    }
    Ok(bandwidth / (2.0 * total_power) * mean_sinr.ln_1p() / std::f64::consts::LN_2)
}

/// Energy-efficiency inputs: the mean-SINR inputs plus bandwidth and total
/// transmit power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EeInputs {
    pub sinr: MeanSinrInputs,
    pub bandwidth: f64,
    pub total_power: f64,
}

impl EeInputs {
    /// `A_{S_l,U_k}` of flow K's downlink.
    pub fn a_k(&self) -> f64 {
        a_coefficient(self.sinr.dl_mean_k, &self.sinr.fading)
    }

    /// `A_{S_k,U_l}` of flow L's downlink.
    pub fn a_l(&self) -> f64 {
        a_coefficient(self.sinr.dl_mean_l, &self.sinr.fading)
    }

    pub fn bound(&self, ctl: &SeriesControls) -> Result<f64> {
        energy_efficiency_bound(mean_system_sinr(&self.sinr, ctl)?, self.bandwidth, self.total_power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::quadrature::integrate;

    fn fading() -> RicianParams {
        RicianParams::new(1.56, 1.3).unwrap()
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(3, 0.7, 0.0), 0.0);
        assert!((phi(0, 1.0, 1.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(2, 1, 0.3, 0.4, 0.0), 0.0);
        let v = psi(0, 0, 1.0, 1.0, 1.0);
        assert!((v - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
        assert!((v - 0.43233235838169365).abs() < 1e-15);
    }

    #[test]
    fn phi_against_quadrature() {
        // m = 2, A = 0.5, S = 3
        let oracle = integrate(
            |l| (0..=2).map(|i| crate::channel::gamma::poisson_pmf(i, 0.5 * l)).sum(),
            0.0,
            3.0,
            1e-14,
        );
        let v = phi(2, 0.5, 3.0);
        assert!((v / oracle - 1.0).abs() < 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn degenerate_interval_and_zero_support() {
        let ctl = SeriesControls::default();
        let inputs = MeanSinrInputs {
            cut_k: 80.0,
            cut_l: 80.0,
            dl_mean_k: 50.0,
            dl_mean_l: 70.0,
            fading: fading(),
        };
        let t = mean_system_sinr_terms(&inputs, &ctl).unwrap();
        assert_eq!(t.g, 0.0);
        assert!(t.f <= 80.0 && t.f > 0.0);

        let zero = MeanSinrInputs {
            cut_k: 0.0,
            cut_l: 0.0,
            ..inputs
        };
        assert_eq!(mean_system_sinr(&zero, &ctl).unwrap(), 0.0);
    }

    #[test]
    fn single_flow_reduces_to_clipped_mean() {
        let ctl = SeriesControls::default();
        let inputs = MeanSinrInputs {
            cut_k: 0.0,
            cut_l: 120.0,
            dl_mean_k: 50.0,
            dl_mean_l: 70.0,
            fading: fading(),
        };
        let both = mean_system_sinr(&inputs, &ctl).unwrap();
        let one = mean_clipped_sinr(120.0, 70.0, &fading(), &ctl).unwrap();
        assert_eq!(both, one);
    }

    #[test]
    fn clipped_mean_unbounded_cut_is_full_mean() {
        let ctl = SeriesControls::default();
        let m = mean_clipped_sinr(f64::MAX, 40.0, &fading(), &ctl).unwrap();
        assert!((m / (40.0 * fading().mean_power()) - 1.0).abs() < 1e-10, "{m}");
    }

    #[test]
    fn ee_bound_examples() {
        assert_eq!(energy_efficiency_bound(0.0, 500e6, 10.0).unwrap(), 0.0);
        assert!((energy_efficiency_bound(1.0, 2.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(energy_efficiency_bound(1.0, 2.0, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn mean_in_range_and_monotone(
                ck in 0.1..500.0f64, cl in 0.1..500.0f64,
                gk in 1.0..200.0f64, gl in 1.0..200.0f64, bump in 0.0..50.0f64,
            ) {
                let ctl = SeriesControls::default();
                let base = MeanSinrInputs { cut_k: ck, cut_l: cl, dl_mean_k: gk, dl_mean_l: gl, fading: fading() };
                let e = mean_system_sinr(&base, &ctl).unwrap();
                prop_assert!(e >= 0.0 && e <= ck.max(cl) * (1.0 + 1e-12));
                let up_k = mean_system_sinr(&MeanSinrInputs { cut_k: ck + bump, ..base }, &ctl).unwrap();
                let up_l = mean_system_sinr(&MeanSinrInputs { cut_l: cl + bump, ..base }, &ctl).unwrap();
                prop_assert!(up_k >= e - 1e-9 * e.max(1.0));
                prop_assert!(up_l >= e - 1e-9 * e.max(1.0));
            }

            #[test]
            fn psi_symmetric(m in 0u32..6, n in 0u32..6, a1 in 0.1..10.0f64, a2 in 0.1..10.0f64, s in 0.0..20.0f64) {
                let x = psi(m, n, a1, a2, s);
                let y = psi(n, m, a2, a1, s);
                prop_assert!((x - y).abs() <= 1e-13 * x.abs().max(1e-300));
            }

            #[test]
            fn phi_monotone_in_s(m in 0u32..8, a in 0.1..10.0f64, s in 0.0..20.0f64, ds in 0.0..5.0f64) {
                prop_assert!(phi(m, a, s) <= phi(m, a, s + ds) + 1e-15);
            }
        }
    }
}
