//! Resolved experiment description and the per-slot models derived from it.

use crate::analytics::{
    energy_efficiency_bound, mean_clipped_sinr, mean_system_sinr, outage_probability,
    single_flow_outage, MeanSinrInputs, OutageInputs, SeriesControls,
};
use crate::channel::FadingLaw;
use crate::error::{Error, Result};
use crate::geometry::{handover_map, Association, GeometryTrack, NodeId, Timeline};
use crate::linkbudget::{average_snr, path_gain, LinkBudget, RfConstants};
use crate::montecarlo::{Tolerance, TrialPlan};
use crate::scheduler::{
    evaluate, hd_direction, Direction, FdThroughput, Scheme, SlotContext, SlotOutcome, SlotStates,
};
use crate::sinr::{isl_sinr, DirectionState};

/// Interferer mean SNRs (linear) heard by one satellite, per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Interference {
    per_slot: Vec<Vec<f64>>,
}

impl Interference {
    pub fn new(per_slot: Vec<Vec<f64>>) -> Self {
        Self { per_slot }
    }

    pub fn at(&self, t: usize) -> &[f64] {
        &self.per_slot[t]
    }

    pub fn count(&self, t: usize) -> usize {
        self.per_slot[t].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub rf: RfConstants,
    pub noise_power: f64,
    pub fading: FadingLaw,
    /// (transmit, receive) antenna gains, linear.
    pub isl_gains: (f64, f64),
    pub sgl_gains: (f64, f64),
    /// Per-node transmit power `P`, watts.
    pub tx_power: f64,
    pub rsi_power: f64,
    pub timeline: Timeline,
    pub track: GeometryTrack,
    /// Heard by `S_k`, so they degrade flow L's ISL.
    pub interference_at_s_k: Interference,
    /// Heard by `S_l`, so they degrade flow K's ISL.
    pub interference_at_s_l: Interference,
    pub backlog_k: Vec<f64>,
    pub backlog_l: Vec<f64>,
    pub series: SeriesControls,
    pub plan: TrialPlan,
    pub schemes: Vec<Scheme>,
    pub fd_throughput: FdThroughput,
    pub eval_slots: Vec<usize>,
    pub tolerance: Tolerance,
}

impl Scenario {
    /// Links every scenario must describe: the ISL and the two relay
    /// downlinks `S_l -> U_k` and `S_k -> U_l`.
    pub const REQUIRED_LINKS: [(NodeId, NodeId); 3] = [
        (NodeId::S_K, NodeId::S_L),
        (NodeId::S_L, NodeId::U_K),
        (NodeId::S_K, NodeId::U_L),
    ];

    pub fn horizon(&self) -> usize {
        self.timeline.horizon_slots()
    }

    pub fn with_tx_power(&self, watts: f64) -> Self {
        Self {
            tx_power: watts,
            ..self.clone()
        }
    }

    pub fn ctx(&self) -> SlotContext {
        SlotContext {
            bandwidth: self.rf.bandwidth,
            slot_duration: self.timeline.slot_duration(),
            tx_power: self.tx_power,
            fd_throughput: self.fd_throughput,
        }
    }

    pub fn rsi_snr(&self) -> f64 {
        self.rsi_power / self.noise_power
    }

    fn mean_snr(&self, gains: (f64, f64), a: NodeId, b: NodeId, t: usize) -> Result<f64> {
        let budget = LinkBudget {
            tx_gain: gains.0,
            rx_gain: gains.1,
            tx_power: self.tx_power,
            noise_power: self.noise_power,
        };
        let d = self.track.distance(a, b, t)?;
        Ok(average_snr(&budget, path_gain(&budget, &self.rf, d)?))
    }

    pub fn slot_states(&self, t: usize) -> Result<SlotStates> {
        self.timeline.check_slot(t)?;
        let w = self.rf.bandwidth;
        let slot = self.timeline.slot_duration();
        let isl_mean = self.mean_snr(self.isl_gains, NodeId::S_K, NodeId::S_L, t)?;
        let dl_k = self.mean_snr(self.sgl_gains, NodeId::S_L, NodeId::U_K, t)?;
        let dl_l = self.mean_snr(self.sgl_gains, NodeId::S_K, NodeId::U_L, t)?;
        let heard_by_l = self.interference_at_s_l.at(t);
        let heard_by_k = self.interference_at_s_k.at(t);

        let flow_k = DirectionState::new(isl_sinr(isl_mean, heard_by_l)?, dl_k, self.backlog_k[t], w, slot)?;
        let flow_l = DirectionState::new(isl_sinr(isl_mean, heard_by_k)?, dl_l, self.backlog_l[t], w, slot)?;
        let rsi = self.rsi_snr();
        let fd = |s: &DirectionState, heard: &[f64]| {
            s.with_isl_sinr(crate::scheduler::fd_isl_sinr(isl_mean, heard.iter().sum(), rsi))
        };
        Ok(SlotStates {
            flow_k,
            flow_l,
            fd_flow_k: fd(&flow_k, heard_by_l),
            fd_flow_l: fd(&flow_l, heard_by_k),
        })
    }

    pub fn slot_model(&self, t: usize) -> Result<SlotModel> {
        Ok(SlotModel {
            slot: t,
            states: self.slot_states(t)?,
            fading: self.fading,
            ctx: self.ctx(),
        })
    }

    pub fn eval_models(&self) -> Result<Vec<SlotModel>> {
        self.eval_slots.iter().map(|&t| self.slot_model(t)).collect()
    }

    pub fn association(&self, t: usize) -> Result<Association> {
        handover_map(&self.timeline, t)
    }
}

/// Everything needed to evaluate one slot: flow states, fading law and
/// scheduler constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotModel {
    pub slot: usize,
    pub states: SlotStates,
    pub fading: FadingLaw,
    pub ctx: SlotContext,
}

impl SlotModel {
    pub fn evaluate(&self, scheme: Scheme, gains: [f64; 2]) -> SlotOutcome {
        evaluate(scheme, self.slot, &self.states, gains, &self.ctx)
    }

    pub fn outage_inputs(&self) -> OutageInputs {
        let s = &self.states;
        OutageInputs {
            cut_k: s.flow_k.cut_level,
            cut_l: s.flow_l.cut_level,
            dl_mean_k: s.flow_k.downlink_mean,
            dl_mean_l: s.flow_l.downlink_mean,
            fading: self.fading,
        }
    }

    fn served(&self, scheme: Scheme) -> Option<&DirectionState> {
        let policy = scheme.hd_policy()?;
        Some(match hd_direction(policy, self.slot) {
            Direction::FlowK => &self.states.flow_k,
            Direction::FlowL => &self.states.flow_l,
        })
    }

    /// Closed-form outage of the SINR a half-duplex scheme delivers.
    pub fn closed_form_outage(&self, scheme: Scheme, zeta: f64) -> Result<f64> {
        match scheme {
            Scheme::FlexD => outage_probability(zeta, &self.outage_inputs()),
            Scheme::Fd => Err(Error::Unsupported(
                "threshold outage is defined for single-direction schemes; full duplex serves both flows".into(),
            )),
            hd => {
                let s = self.served(hd).expect("half-duplex scheme");
                single_flow_outage(zeta, s.cut_level, s.downlink_mean, &self.fading)
            }
        }
    }

    fn rician(&self) -> Result<crate::channel::RicianParams> {
        match self.fading {
            FadingLaw::Rician(p) => Ok(p),
            FadingLaw::Nakagami { .. } => Err(Error::Unsupported(
                "closed-form mean SINR is available for Rician downlinks only".into(),
            )),
        }
    }

    /// Closed-form mean of the delivered SINR; for full duplex, the sum of
    /// the two flows' means.
    pub fn closed_form_mean_sinr(&self, scheme: Scheme, ctl: &SeriesControls) -> Result<f64> {
        let fading = self.rician()?;
        let s = &self.states;
        match scheme {
            Scheme::FlexD => mean_system_sinr(
                &MeanSinrInputs {
                    cut_k: s.flow_k.cut_level,
                    cut_l: s.flow_l.cut_level,
                    dl_mean_k: s.flow_k.downlink_mean,
                    dl_mean_l: s.flow_l.downlink_mean,
                    fading,
                },
                ctl,
            ),
            Scheme::Fd => Ok(flow_mean(&s.fd_flow_k, &fading, ctl)? + flow_mean(&s.fd_flow_l, &fading, ctl)?),
            hd => flow_mean(self.served(hd).expect("half-duplex scheme"), &fading, ctl),
        }
    }

    /// Jensen upper bound on the slot's energy efficiency, bits/joule.
    pub fn closed_form_ee(&self, scheme: Scheme, ctl: &SeriesControls) -> Result<f64> {
        let w = self.ctx.bandwidth;
        let p_t = self.ctx.total_power(scheme);
        match scheme {
            Scheme::Fd => {
                let fading = self.rician()?;
                let prelog = match self.ctx.fd_throughput {
                    FdThroughput::RelayHalfDuplex => 0.5,
                    FdThroughput::FullPrelog => 1.0,
                };
                let ek = flow_mean(&self.states.fd_flow_k, &fading, ctl)?;
                let el = flow_mean(&self.states.fd_flow_l, &fading, ctl)?;
                if !(p_t > 0.0) {
                    return Err(crate::error::domain("closed_form_ee", "total power must be positive"));
                }
                Ok(prelog * w * (ek.ln_1p() + el.ln_1p()) / std::f64::consts::LN_2 / p_t)
            }
            _ => energy_efficiency_bound(self.closed_form_mean_sinr(scheme, ctl)?, w, p_t),
        }
    }
}

fn flow_mean(s: &DirectionState, fading: &crate::channel::RicianParams, ctl: &SeriesControls) -> Result<f64> {
    mean_clipped_sinr(s.cut_level, s.downlink_mean, fading, ctl)
}
