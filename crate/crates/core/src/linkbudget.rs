//! Free-space large-scale gain and average SNR of a directed link.
//!
//! Everything here is linear. dB, dBm and dBi values are converted with the
//! helpers below at the configuration boundary only.

use std::f64::consts::PI;

use crate::error::{domain, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn dbw_to_watts(dbw: f64) -> f64 {
    db_to_linear(dbw)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfConstants {
    pub carrier_frequency: f64,
    pub bandwidth: f64,
}

impl RfConstants {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Transmit antenna gain toward the receiver (linear).
    pub tx_gain: f64,
    /// Receive antenna gain toward the transmitter (linear).
    pub rx_gain: f64,
    /// Transmit power in watts.
    pub tx_power: f64,
    /// Receiver noise power in watts.
    pub noise_power: f64,
}

/// Large-scale gain `G_tx G_rx c^2 / (4 pi f d)^2`.
pub fn path_gain(budget: &LinkBudget, rf: &RfConstants, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(domain("path_gain", format!("distance must be positive, got {d}")));
    }
    let denom = 4.0 * PI * rf.carrier_frequency * d;
    Ok(budget.tx_gain * budget.rx_gain * SPEED_OF_LIGHT * SPEED_OF_LIGHT / (denom * denom))
}

/// Average received SNR `P alpha / sigma^2`.
pub fn average_snr(budget: &LinkBudget, alpha: f64) -> f64 {
    budget.tx_power * alpha / budget.noise_power
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_budget() -> LinkBudget {
        LinkBudget {
            tx_gain: 1.0,
            rx_gain: 1.0,
            tx_power: 1.0,
            noise_power: 1.0,
        }
    }

    #[test]
    fn identity_normalization() {
        let rf = RfConstants {
            carrier_frequency: SPEED_OF_LIGHT / (4.0 * PI),
            bandwidth: 1.0,
        };
        let a = path_gain(&unit_budget(), &rf, 1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_square() {
        let rf = RfConstants {
            carrier_frequency: 25e9,
            bandwidth: 500e6,
        };
        let b = unit_budget();
        let a1 = path_gain(&b, &rf, 700e3).unwrap();
        let a2 = path_gain(&b, &rf, 1400e3).unwrap();
        assert!((a1 / a2 - 4.0).abs() < 1e-12);
        assert!(path_gain(&b, &rf, 0.0).is_err());
        assert!(path_gain(&b, &rf, -5.0).is_err());
    }

    #[test]
    fn ka_band_isl_gain() {
        // 35 dBi at both ends, 25 GHz, 600 km:
        // (3162.28^2 * 0.0119917^2) / (4 pi 6e5)^2 = 1438.0 / 5.6849e13
        let g = db_to_linear(35.0);
        let budget = LinkBudget {
            tx_gain: g,
            rx_gain: g,
            ..unit_budget()
        };
        let rf = RfConstants {
            carrier_frequency: 25e9,
            bandwidth: 500e6,
        };
        let a = path_gain(&budget, &rf, 600e3).unwrap();
        assert!((a / 2.5296e-11 - 1.0).abs() < 1e-3, "{a:e}");
    }

    #[test]
    fn average_snr_with_noise_floor() {
        let budget = LinkBudget {
            tx_power: 10.0,
            noise_power: dbm_to_watts(-115.0),
            ..unit_budget()
        };
        let snr = average_snr(&budget, 1e-10);
        assert!((snr / 3.1623e5 - 1.0).abs() < 1e-4, "{snr}");
        let silent = LinkBudget {
            tx_power: 0.0,
            ..budget
        };
        assert_eq!(average_snr(&silent, 1e-10), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn db_round_trip(x in -200.0..200.0f64) {
                let back = linear_to_db(db_to_linear(x));
                prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
            }

            #[test]
            fn distance_ratio_exact(d1 in 1e3..1e7f64, d2 in 1e3..1e7f64) {
                let rf = RfConstants { carrier_frequency: 25e9, bandwidth: 1.0 };
                let b = unit_budget();
                let r = path_gain(&b, &rf, d1).unwrap() / path_gain(&b, &rf, d2).unwrap();
                prop_assert!((r / ((d2 / d1) * (d2 / d1)) - 1.0).abs() < 1e-12);
            }

            #[test]
            fn snr_linear(p in 0.1..100.0f64, alpha in 1e-14..1e-8f64, k in 0.1..10.0f64) {
                let b = LinkBudget { tx_power: p, noise_power: 1e-15, ..unit_budget() };
                let s1 = average_snr(&b, alpha);
                let s2 = average_snr(&b, k * alpha);
                prop_assert!((s2 / s1 - k).abs() < 1e-12 * k);
            }
        }
    }
}
