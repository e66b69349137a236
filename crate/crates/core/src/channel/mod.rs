//! Special functions and small-scale fading laws for the satellite-to-ground
//! links.

mod fading;
pub mod gamma;
mod marcum;

pub use fading::{
    nakagami_power_cdf, rician_power_cdf, sample_rician_power, FadingLaw, GainSampler,
    NakagamiParams, RicianParams,
};
pub use marcum::{marcum_pair, marcum_q1, marcum_q1_complement, MarcumPair};
