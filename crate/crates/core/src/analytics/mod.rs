//! Closed-form performance of FlexD: system outage probability, the mean
//! system SINR and the Jensen energy-efficiency bound, plus the Nakagami,
//! multiuser and multihop extensions.

mod extensions;
mod series;

pub use extensions::{multihop_cdf, multiuser_outage};
pub use series::{
    a_coefficient, effective_cut_limit, energy_efficiency_bound, mean_clipped_sinr,
    mean_system_sinr, mean_system_sinr_terms, phi, psi, CrossExponent, EeInputs, MeanSinrInputs,
    MeanSinrTerms, SeriesControls,
};

use crate::channel::{FadingLaw, RicianParams};
use crate::error::{domain, Result};

/// `zeta = 2^{2 delta / W} - 1`, the system SINR a half-duplex two-hop flow
/// needs to deliver `delta` bits/s.
pub fn threshold_from_rate(delta: f64, bandwidth: f64) -> Result<f64> {
    if !(delta >= 0.0) || !(bandwidth > 0.0) {
        return Err(domain(
            "threshold_from_rate",
            format!("need delta >= 0 and W > 0, got delta = {delta}, W = {bandwidth}"),
        ));
    }
    Ok((2.0 * delta / bandwidth).exp2() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageInputs {
    pub cut_k: f64,
    pub cut_l: f64,
    /// Mean SNR of flow K's downlink `S_l -> U_k`.
    pub dl_mean_k: f64,
    /// Mean SNR of flow L's downlink `S_k -> U_l`.
    pub dl_mean_l: f64,
    pub fading: FadingLaw,
}

impl OutageInputs {
    pub fn rician(cut_k: f64, cut_l: f64, dl_mean_k: f64, dl_mean_l: f64, fading: RicianParams) -> Self {
        Self {
            cut_k,
            cut_l,
            dl_mean_k,
            dl_mean_l,
            fading: FadingLaw::Rician(fading),
        }
    }

    pub fn omega_min(&self) -> f64 {
        self.cut_k.min(self.cut_l)
    }

    pub fn omega_max(&self) -> f64 {
        self.cut_k.max(self.cut_l)
    }

    pub fn region(&self, zeta: f64) -> OutageRegion {
        if zeta >= self.omega_max() {
            OutageRegion::Saturated
        } else if zeta < self.omega_min() {
            OutageRegion::BothOpen
        } else if self.cut_l <= zeta {
            OutageRegion::FlowLCapped
        } else {
            OutageRegion::FlowKCapped
        }
    }

    /// Mean-SINR inputs, available for Rician fading only.
    pub fn mean_sinr_inputs(&self) -> Option<MeanSinrInputs> {
        match self.fading {
            FadingLaw::Rician(fading) => Some(MeanSinrInputs {
                cut_k: self.cut_k,
                cut_l: self.cut_l,
                dl_mean_k: self.dl_mean_k,
                dl_mean_l: self.dl_mean_l,
                fading,
            }),
            FadingLaw::Nakagami { .. } => None,
        }
    }
}

/// Piecewise region of the outage CDF containing a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutageRegion {
    /// `zeta < Omega_min`: both flows can still clear the threshold.
    BothOpen,
    /// `Omega_l <= zeta < Omega_k`: flow L is capped below the threshold.
    FlowLCapped,
    /// `Omega_k <= zeta < Omega_l`
    FlowKCapped,
    /// `zeta >= Omega_max`: outage is certain.
    Saturated,
}

/// CDF of a clipped downlink `min(Omega, gamma_bar |h|^2)` at `x`.
fn clipped_cdf(fading: &FadingLaw, cut: f64, mean: f64, x: f64) -> Result<f64> {
    if x >= cut {
        return Ok(1.0);
    }
    if mean <= 0.0 {
        // a silent downlink delivers zero SINR
        return Ok(1.0);
    }
    fading.cdf(mean, x)
}

/// System outage `Pr(max(Y, Z) <= zeta)` with `Y`, `Z` the clipped downlink
/// SINRs of the two flows.
pub fn outage_probability(zeta: f64, inputs: &OutageInputs) -> Result<f64> {
    if !(zeta >= 0.0) {
        return Err(domain("outage_probability", format!("threshold must be >= 0, got {zeta}")));
    }
    let f = &inputs.fading;
    Ok(match inputs.region(zeta) {
        OutageRegion::Saturated => 1.0,
        OutageRegion::BothOpen => {
            clipped_cdf(f, inputs.cut_l, inputs.dl_mean_l, zeta)?
                * clipped_cdf(f, inputs.cut_k, inputs.dl_mean_k, zeta)?
        }
        OutageRegion::FlowLCapped => clipped_cdf(f, inputs.cut_k, inputs.dl_mean_k, zeta)?,
        OutageRegion::FlowKCapped => clipped_cdf(f, inputs.cut_l, inputs.dl_mean_l, zeta)?,
    })
}

/// Outage of a single relayed flow: `Pr(min(Omega, gamma_bar |h|^2) <= zeta)`.
pub fn single_flow_outage(zeta: f64, cut: f64, dl_mean: f64, fading: &FadingLaw) -> Result<f64> {
    if !(zeta >= 0.0) {
        return Err(domain("single_flow_outage", format!("threshold must be >= 0, got {zeta}")));
    }
    clipped_cdf(fading, cut, dl_mean, zeta)
}

/// Per-user outage of the direct one-hop downlink when no relay traffic
/// exists.
pub fn no_backlog_outage(zeta: f64, mean_snr: f64, fading: &RicianParams) -> Result<f64> {
    if !(zeta >= 0.0) {
        return Err(domain("no_backlog_outage", format!("threshold must be >= 0, got {zeta}")));
    }
    crate::channel::rician_power_cdf(mean_snr, fading, zeta)
}
