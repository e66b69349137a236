//! Per-slot SINR quantities of the two relayed flows.
//!
//! A two-hop flow is limited by the weakest of its ISL, its downlink and the
//! backlog it has to deliver. With a common bandwidth all three can be put
//! in the SINR domain: the backlog becomes the SINR whose Shannon rate
//! drains exactly the queued bits in one slot, and the deterministic part
//! (ISL and backlog) collapses to a single cut level that clips the random
//! downlink SINR.

use crate::error::{domain, Result};

/// Value returned by [`backlog_equivalent_sinr`] once the spectral load
/// exceeds 60 bits/s/Hz. Such a backlog never binds.
pub const BACKLOG_SATURATION: f64 = 1_152_921_504_606_846_975.0; // 2^60 - 1

const SATURATION_EXPONENT: f64 = 60.0;

/// Deterministic ISL SINR `gamma_bar / (sum interferers + 1)`.
pub fn isl_sinr(desired_mean_snr: f64, interferers: &[f64]) -> Result<f64> {
    if !(desired_mean_snr >= 0.0) {
        return Err(domain(
            "isl_sinr",
            format!("desired mean SNR must be non-negative, got {desired_mean_snr}"),
        ));
    }
    if let Some(bad) = interferers.iter().find(|v| !(**v >= 0.0)) {
        return Err(domain(
            "isl_sinr",
            format!("interferer mean SNR must be non-negative, got {bad}"),
        ));
    }
    let interference: f64 = interferers.iter().sum();
    Ok(desired_mean_snr / (interference + 1.0))
}

/// SINR whose rate over one slot carries exactly `backlog_bits`:
/// `2^{Q / (W T_slot)} - 1`.
pub fn backlog_equivalent_sinr(backlog_bits: f64, bandwidth: f64, slot: f64) -> Result<f64> {
    if !(backlog_bits >= 0.0) {
        return Err(domain(
            "backlog_equivalent_sinr",
            format!("backlog must be non-negative, got {backlog_bits}"),
        ));
    }
    if !(bandwidth > 0.0) || !(slot > 0.0) {
        return Err(domain(
            "backlog_equivalent_sinr",
            "bandwidth and slot duration must be positive",
        ));
    }
    let load = backlog_bits / (bandwidth * slot);
    if load > SATURATION_EXPONENT {
        return Ok(BACKLOG_SATURATION);
    }
    Ok(load.exp2() - 1.0)
}

pub fn cut_level(isl: f64, backlog: f64) -> f64 {
    isl.min(backlog)
}

/// Deterministic state of one relayed flow in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionState {
    pub isl_sinr: f64,
    /// Large-scale average SNR of the relay-to-user downlink.
    pub downlink_mean: f64,
    pub backlog_bits: f64,
    pub backlog_sinr: f64,
    /// `min(isl_sinr, backlog_sinr)`
    pub cut_level: f64,
}

impl DirectionState {
    pub fn new(
        isl_sinr: f64,
        downlink_mean: f64,
        backlog_bits: f64,
        bandwidth: f64,
        slot: f64,
    ) -> Result<Self> {
        if !(isl_sinr >= 0.0) || !(downlink_mean >= 0.0) {
            return Err(domain("DirectionState::new", "SINR values must be non-negative"));
        }
        let backlog_sinr = backlog_equivalent_sinr(backlog_bits, bandwidth, slot)?;
        Ok(Self {
            isl_sinr,
            downlink_mean,
            backlog_bits,
            backlog_sinr,
            cut_level: cut_level(isl_sinr, backlog_sinr),
        })
    }

    /// Whether the backlog rather than the ISL sets the cut level.
    pub fn backlog_limited(&self) -> bool {
        self.backlog_sinr < self.isl_sinr
    }

    /// Same flow with its ISL SINR replaced (used for full-duplex RSI).
    pub fn with_isl_sinr(&self, isl_sinr: f64) -> Self {
        Self {
            isl_sinr,
            cut_level: cut_level(isl_sinr, self.backlog_sinr),
            ..*self
        }
    }
}

/// `min(Omega, gamma_bar |h|^2)`.
pub fn composite_direction_sinr(state: &DirectionState, dl_power_gain: f64) -> f64 {
    state.cut_level.min(state.downlink_mean * dl_power_gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{rician_power_cdf, sample_rician_power, RicianParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isl_examples() {
        assert_eq!(isl_sinr(10.0, &[]).unwrap(), 10.0);
        assert_eq!(isl_sinr(10.0, &[4.0, 5.0]).unwrap(), 1.0);
        assert_eq!(isl_sinr(0.0, &[3.0, 9.0]).unwrap(), 0.0);
        assert!(isl_sinr(1.0, &[-1.0]).is_err());
        assert!(isl_sinr(-1.0, &[]).is_err());
    }

    #[test]
    fn backlog_examples() {
        let w = 500e6;
        let slot = 1e-3;
        assert_eq!(backlog_equivalent_sinr(0.0, w, slot).unwrap(), 0.0);
        assert_eq!(backlog_equivalent_sinr(w * slot, w, slot).unwrap(), 1.0);
        assert_eq!(backlog_equivalent_sinr(2.0 * w * slot, w, slot).unwrap(), 3.0);
        assert_eq!(
            backlog_equivalent_sinr(61.0 * w * slot, w, slot).unwrap(),
            BACKLOG_SATURATION
        );
        assert_eq!(
            backlog_equivalent_sinr(f64::INFINITY, w, slot).unwrap(),
            BACKLOG_SATURATION
        );
        assert!(backlog_equivalent_sinr(-1.0, w, slot).is_err());
    }

    #[test]
    fn cut_levels() {
        assert_eq!(cut_level(5.0, 3.0), 3.0);
        assert_eq!(cut_level(3.0, 5.0), 3.0);
        let empty = DirectionState::new(40.0, 100.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(empty.cut_level, 0.0);
        assert_eq!(composite_direction_sinr(&empty, 7.0), 0.0);
    }

    #[test]
    fn composite_examples() {
        let s = DirectionState::new(2.0, 1.0, f64::INFINITY, 1.0, 1.0).unwrap();
        assert_eq!(composite_direction_sinr(&s, 5.0), 2.0);
        assert_eq!(composite_direction_sinr(&s, 0.5), 0.5);
    }

    #[test]
    fn composite_distribution_is_clipped_rician() {
        let fading = RicianParams::new(1.56, 1.3).unwrap();
        let state = DirectionState::new(150.0, 100.0, f64::INFINITY, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 1_000_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| composite_direction_sinr(&state, sample_rician_power(&fading, &mut rng)))
            .collect();
        assert!(samples.iter().all(|&v| v <= state.cut_level));
        for &x in &[20.0, 80.0, 140.0, 149.9, 150.0, 400.0] {
            let emp = samples.iter().filter(|&&v| v <= x).count() as f64 / n as f64;
            let oracle = if x >= state.cut_level {
                1.0
            } else {
                rician_power_cdf(state.downlink_mean, &fading, x).unwrap()
            };
            let se = (oracle * (1.0 - oracle) / n as f64).sqrt();
            assert!((emp - oracle).abs() <= 4.0 * se + 1e-12, "x={x}: {emp} vs {oracle}");
        }
        let at_cut = samples.iter().filter(|&&v| v == state.cut_level).count() as f64 / n as f64;
        let expected = 1.0 - rician_power_cdf(100.0, &fading, 150.0).unwrap();
        assert!((at_cut - expected).abs() < 4.0 * (expected * (1.0 - expected) / n as f64).sqrt());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn backlog_inverse(load in 0.0..59.0f64, w in 1e3..1e9f64, slot in 1e-4..1.0f64) {
                let q = load * w * slot;
                let g = backlog_equivalent_sinr(q, w, slot).unwrap();
                let back = w * slot * (1.0 + g).log2();
                prop_assert!((back - q).abs() <= 1e-9 * q.max(1e-300));
            }

            #[test]
            fn isl_monotone(desired in 0.1..1e6f64, i1 in 0.0..1e3f64, i2 in 0.0..1e3f64, bump in 1e-3..10.0f64) {
                let base = isl_sinr(desired, &[i1, i2]).unwrap();
                prop_assert!(isl_sinr(desired, &[i1 + bump, i2]).unwrap() < base);
                prop_assert!(isl_sinr(desired * (1.0 + bump), &[i1, i2]).unwrap() > base);
            }
        }
    }
}
