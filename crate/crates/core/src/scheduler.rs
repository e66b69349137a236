//! FlexD direction selection and the half-/full-duplex baselines.
//!
//! Rates in a [`SlotOutcome`] are two-hop service rates in bits/s, i.e.
//! `W log2(1 + composite SINR)`, without the relay pre-log. The factor 1/2
//! of half-duplex relaying is applied exactly once, when `throughput` is
//! formed.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sinr::{composite_direction_sinr, DirectionState};

/// Which relayed flow uses the ISL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `S_k -> S_l -> U_k`
    FlowK,
    /// `S_l -> S_k -> U_l`
    FlowL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HdPolicy {
    FixedK,
    FixedL,
    /// FlowK on even slots, FlowL on odd slots.
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    FlexD,
    HdFixedK,
    HdFixedL,
    HdAlternating,
    Fd,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::FlexD,
        Scheme::HdFixedK,
        Scheme::HdFixedL,
        Scheme::HdAlternating,
        Scheme::Fd,
    ];

    pub fn hd_policy(self) -> Option<HdPolicy> {
        match self {
            Scheme::HdFixedK => Some(HdPolicy::FixedK),
            Scheme::HdFixedL => Some(HdPolicy::FixedL),
            Scheme::HdAlternating => Some(HdPolicy::Alternating),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::FlexD => "flexd",
            Scheme::HdFixedK => "hd-fixed-k",
            Scheme::HdFixedL => "hd-fixed-l",
            Scheme::HdAlternating => "hd-alternating",
            Scheme::Fd => "fd",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flexd" => Ok(Scheme::FlexD),
            "hd-fixed-k" => Ok(Scheme::HdFixedK),
            "hd-fixed-l" => Ok(Scheme::HdFixedL),
            "hd-alternating" | "hd" => Ok(Scheme::HdAlternating),
            "fd" => Ok(Scheme::Fd),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}` (expected flexd, hd-fixed-k, hd-fixed-l, hd-alternating, fd)"
            ))),
        }
    }
}

/// How full-duplex throughput is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdThroughput {
    /// Both ISL directions run at once but each relay still forwards in
    /// half-duplex, so the two flows share the 1/2 relay pre-log.
    #[default]
    RelayHalfDuplex,
    /// Sum of both flows with no pre-log.
    FullPrelog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Served {
    One(Direction),
    Both,
}

/// Per-slot constants the scheduler needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotContext {
    pub bandwidth: f64,
    pub slot_duration: f64,
    /// Per-node transmit power `P` in watts.
    pub tx_power: f64,
    pub fd_throughput: FdThroughput,
}

impl SlotContext {
    /// Total transmit power of a scheme: `2P` for full duplex, `P` otherwise.
    pub fn total_power(&self, scheme: Scheme) -> f64 {
        match scheme {
            Scheme::Fd => 2.0 * self.tx_power,
            _ => self.tx_power,
        }
    }
}

/// Flow states of one slot, both as used by half-duplex schemes and with
/// the ISL receivers self-interfered as in full duplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotStates {
    pub flow_k: DirectionState,
    pub flow_l: DirectionState,
    pub fd_flow_k: DirectionState,
    pub fd_flow_l: DirectionState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotOutcome {
    pub slot: usize,
    pub scheme: Scheme,
    pub chosen: Served,
    /// Composite SINR of each flow under this scheme's ISL conditions.
    pub sinr_k: f64,
    pub sinr_l: f64,
    pub rate_k: f64,
    pub rate_l: f64,
    /// Service rate of the active flow(s), bits/s.
    pub achieved_rate: f64,
    /// End-to-end throughput after the relay pre-log, bits/s.
    pub throughput: f64,
    pub energy: f64,
}

impl SlotOutcome {
    /// System SINR `Gamma` of the served direction; `None` for full duplex.
    pub fn system_sinr(&self) -> Option<f64> {
        match self.chosen {
            Served::One(Direction::FlowK) => Some(self.sinr_k),
            Served::One(Direction::FlowL) => Some(self.sinr_l),
            Served::Both => None,
        }
    }

    /// Energy efficiency of the slot in bits/joule.
    pub fn energy_efficiency(&self, slot_duration: f64) -> f64 {
        if self.energy == 0.0 {
            return 0.0;
        }
        self.throughput * slot_duration / self.energy
    }
}

/// Half-duplex end-to-end service rate `min(C_isl, D_dl, Q / T_slot)`.
pub fn two_hop_rate(isl_capacity: f64, downlink_capacity: f64, backlog_bits: f64, slot: f64) -> f64 {
    isl_capacity.min(downlink_capacity).min(backlog_bits / slot)
}

/// Shannon rate `W log2(1 + sinr)` in bits/s.
pub fn shannon_rate(bandwidth: f64, sinr: f64) -> f64 {
    bandwidth * sinr.ln_1p() / std::f64::consts::LN_2
}

/// Picks the direction with the larger rate; ties go to FlowK.
pub fn flexd_select(rate_k: f64, rate_l: f64) -> (Direction, f64) {
    if rate_l > rate_k {
        (Direction::FlowL, rate_l)
    } else {
        (Direction::FlowK, rate_k)
    }
}

pub fn hd_direction(policy: HdPolicy, t: usize) -> Direction {
    match policy {
        HdPolicy::FixedK => Direction::FlowK,
        HdPolicy::FixedL => Direction::FlowL,
        HdPolicy::Alternating => {
            if t.is_multiple_of(2) {
                Direction::FlowK
            } else {
                Direction::FlowL
            }
        }
    }
}

/// ISL SINR with residual self-interference in the denominator:
/// `gamma_bar / (sum interferers + gamma_rsi + 1)`.
pub fn fd_isl_sinr(desired_mean_snr: f64, interference: f64, rsi_snr: f64) -> f64 {
    desired_mean_snr / (interference + rsi_snr + 1.0)
}

/// Evaluates `scheme` in slot `t` given the two downlink power gains
/// `|h|^2` (flow K's downlink first).
pub fn evaluate(
    scheme: Scheme,
    t: usize,
    states: &SlotStates,
    gains: [f64; 2],
    ctx: &SlotContext,
) -> SlotOutcome {
    let energy = ctx.total_power(scheme) * ctx.slot_duration;
    let (sk, sl) = match scheme {
        Scheme::Fd => (&states.fd_flow_k, &states.fd_flow_l),
        _ => (&states.flow_k, &states.flow_l),
    };
    let sinr_k = composite_direction_sinr(sk, gains[0]);
    let sinr_l = composite_direction_sinr(sl, gains[1]);
    let rate_k = shannon_rate(ctx.bandwidth, sinr_k);
    let rate_l = shannon_rate(ctx.bandwidth, sinr_l);

    let (chosen, achieved_rate, prelog) = match scheme {
        Scheme::FlexD => {
            let (d, r) = flexd_select(rate_k, rate_l);
            (Served::One(d), r, 0.5)
        }
        Scheme::HdFixedK | Scheme::HdFixedL | Scheme::HdAlternating => {
            let policy = scheme.hd_policy().expect("half-duplex scheme");
            let d = hd_direction(policy, t);
            let r = match d {
                Direction::FlowK => rate_k,
                Direction::FlowL => rate_l,
            };
            (Served::One(d), r, 0.5)
        }
        Scheme::Fd => {
            let prelog = match ctx.fd_throughput {
                FdThroughput::RelayHalfDuplex => 0.5,
                FdThroughput::FullPrelog => 1.0,
            };
            (Served::Both, rate_k + rate_l, prelog)
        }
    };

    SlotOutcome {
        slot: t,
        scheme,
        chosen,
        sinr_k,
        sinr_l,
        rate_k,
        rate_l,
        achieved_rate,
        throughput: prelog * achieved_rate,
        energy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sinr::isl_sinr;

    fn ctx() -> SlotContext {
        SlotContext {
            bandwidth: 1.0,
            slot_duration: 1.0,
            tx_power: 1.0,
            fd_throughput: FdThroughput::RelayHalfDuplex,
        }
    }

    fn state(isl: f64, dl: f64, backlog: f64) -> DirectionState {
        DirectionState::new(isl, dl, backlog, 1.0, 1.0).unwrap()
    }

    fn states(k: DirectionState, l: DirectionState) -> SlotStates {
        SlotStates {
            flow_k: k,
            flow_l: l,
            fd_flow_k: k,
            fd_flow_l: l,
        }
    }

    #[test]
    fn bottleneck_examples() {
        assert_eq!(two_hop_rate(1e9, 5e8, 1e9, 1.0), 5e8);
        assert_eq!(two_hop_rate(1e9, 5e8, 0.0, 1.0), 0.0);
        assert_eq!(two_hop_rate(7.0, 7.0, 7.0, 1.0), 7.0);
    }

    #[test]
    fn sinr_domain_equals_rate_domain() {
        let w = 500e6;
        let slot = 1e-3;
        let backlog = 3.2 * w * slot;
        let s = DirectionState::new(15.0, 40.0, backlog, w, slot).unwrap();
        let gain = 0.3;
        let via_sinr = shannon_rate(w, composite_direction_sinr(&s, gain));
        let via_rates = two_hop_rate(shannon_rate(w, 15.0), shannon_rate(w, 40.0 * gain), backlog, slot);
        assert!((via_sinr - via_rates).abs() < 1e-6 * via_rates);
    }

    #[test]
    fn flexd_argmax_and_tie() {
        assert_eq!(flexd_select(3.0, 5.0), (Direction::FlowL, 5.0));
        assert_eq!(flexd_select(5.0, 3.0), (Direction::FlowK, 5.0));
        assert_eq!(flexd_select(4.0, 4.0), (Direction::FlowK, 4.0));
    }

    #[test]
    fn hd_policies() {
        assert_eq!(hd_direction(HdPolicy::Alternating, 0), Direction::FlowK);
        assert_eq!(hd_direction(HdPolicy::Alternating, 1), Direction::FlowL);
        assert_eq!(hd_direction(HdPolicy::FixedL, 0), Direction::FlowL);

        // rates (3, 5) in bits/s with W = 1: SINRs 2^3 - 1 and 2^5 - 1
        let st = states(state(7.0, 1e9, f64::INFINITY), state(31.0, 1e9, f64::INFINITY));
        let alt = evaluate(Scheme::HdAlternating, 0, &st, [1.0, 1.0], &ctx());
        assert!((alt.achieved_rate - 3.0).abs() < 1e-12);
        let fixed_l = evaluate(Scheme::HdFixedL, 0, &st, [1.0, 1.0], &ctx());
        assert!((fixed_l.achieved_rate - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_k_with_empty_queue() {
        let st = states(state(7.0, 100.0, 0.0), state(31.0, 100.0, f64::INFINITY));
        let hd = evaluate(Scheme::HdFixedK, 0, &st, [1.0, 1.0], &ctx());
        let fx = evaluate(Scheme::FlexD, 0, &st, [1.0, 1.0], &ctx());
        assert_eq!(hd.achieved_rate, 0.0);
        assert_eq!(fx.achieved_rate, fx.rate_l);
        assert!(fx.achieved_rate > 0.0);
    }

    #[test]
    fn fd_rsi_examples() {
        // ideal FD, symmetric links: both flows at the one-direction rate
        let desired = 15.0;
        let s = state(isl_sinr(desired, &[]).unwrap(), 1e9, f64::INFINITY);
        let fd_s = s.with_isl_sinr(fd_isl_sinr(desired, 0.0, 0.0));
        let st = SlotStates {
            flow_k: s,
            flow_l: s,
            fd_flow_k: fd_s,
            fd_flow_l: fd_s,
        };
        let fd = evaluate(Scheme::Fd, 0, &st, [1.0, 1.0], &ctx());
        assert!((fd.achieved_rate - 2.0 * 4.0).abs() < 1e-12);
        assert_eq!(fd.energy, 2.0);
        assert_eq!(fd.chosen, Served::Both);
        let full = SlotContext {
            fd_throughput: FdThroughput::FullPrelog,
            ..ctx()
        };
        assert!((evaluate(Scheme::Fd, 0, &st, [1.0, 1.0], &full).throughput - 8.0).abs() < 1e-12);

        // self-jamming limit
        assert!(fd_isl_sinr(desired, 0.0, 1e300) < 1e-290);

        // -120 dBm RSI over a -115 dBm floor
        let rsi = crate::linkbudget::dbm_to_watts(-120.0) / crate::linkbudget::dbm_to_watts(-115.0);
        assert!((rsi - 10f64.powf(-0.5)).abs() < 1e-12);
        assert!((fd_isl_sinr(10.0, 0.0, rsi) - 10.0 / (1.0 + rsi)).abs() < 1e-12);
    }

    #[test]
    fn fd_energy_doubles() {
        let s = state(5.0, 10.0, f64::INFINITY);
        let st = states(s, s);
        let c = SlotContext {
            tx_power: 10.0,
            slot_duration: 0.01,
            ..ctx()
        };
        let fd = evaluate(Scheme::Fd, 3, &st, [1.0, 1.0], &c);
        let fx = evaluate(Scheme::FlexD, 3, &st, [1.0, 1.0], &c);
        assert!((fd.energy - 2.0 * fx.energy).abs() < 1e-15);
        assert!((fx.energy - 0.1).abs() < 1e-15);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.as_str().parse::<Scheme>().unwrap(), s);
        }
        assert!("simplex".parse::<Scheme>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn flexd_dominates_hd(
                ik in 0.0..100.0f64, il in 0.0..100.0f64,
                dk in 0.1..100.0f64, dl in 0.1..100.0f64,
                qk in 0.0..10.0f64, ql in 0.0..10.0f64,
                gk in 0.0..5.0f64, gl in 0.0..5.0f64, t in 0usize..10,
            ) {
                let st = states(state(ik, dk, qk), state(il, dl, ql));
                let fx = evaluate(Scheme::FlexD, t, &st, [gk, gl], &ctx());
                prop_assert!(fx.achieved_rate == fx.rate_k || fx.achieved_rate == fx.rate_l);
                for s in [Scheme::HdFixedK, Scheme::HdFixedL, Scheme::HdAlternating] {
                    let hd = evaluate(s, t, &st, [gk, gl], &ctx());
                    prop_assert!(fx.achieved_rate >= hd.achieved_rate);
                }
            }

            #[test]
            fn argmax_scale_invariant(a in 0.0..1e9f64, b in 0.0..1e9f64, k in 1e-3..1e3f64) {
                prop_assert_eq!(flexd_select(a, b).0, flexd_select(k * a, k * b).0);
            }
        }
    }
}
