use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::gamma::lower_regularized;
use super::marcum::marcum_q1_complement;
use crate::error::{domain, Error, Result};

/// Rician small-scale fading `h ~ CN(mu, sigma_g^2)`. Only `|mu|` matters
/// for power statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianParams {
    los_magnitude: f64,
    scatter_variance: f64,
}

impl RicianParams {
    pub fn new(los_magnitude: f64, scatter_variance: f64) -> Result<Self> {
        if !(los_magnitude >= 0.0 && los_magnitude.is_finite()) {
            return Err(Error::Validation {
                field: "fading.mu_abs".into(),
                reason: format!("must be non-negative, got {los_magnitude}"),
            });
        }
        if !(scatter_variance > 0.0 && scatter_variance.is_finite()) {
            return Err(Error::Validation {
                field: "fading.sigma_g_sq".into(),
                reason: format!("must be positive, got {scatter_variance}"),
            });
        }
        Ok(Self {
            los_magnitude,
            scatter_variance,
        })
    }

    pub fn los_magnitude(&self) -> f64 {
        self.los_magnitude
    }

    pub fn scatter_variance(&self) -> f64 {
        self.scatter_variance
    }

    /// `|mu|^2 / sigma_g^2`, the Poisson rate of the Marcum-Q series.
    pub fn k_factor(&self) -> f64 {
        self.los_magnitude * self.los_magnitude / self.scatter_variance
    }

    /// First Marcum argument `|mu| / sqrt(sigma_g^2 / 2)`.
    pub fn marcum_a(&self) -> f64 {
        self.los_magnitude / (self.scatter_variance / 2.0).sqrt()
    }

    pub fn mean_power(&self) -> f64 {
        self.los_magnitude * self.los_magnitude + self.scatter_variance
    }
}

/// Nakagami-m fading with integer shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiParams {
    pub shape: u32,
    pub mean_snr: f64,
}

/// CDF of `gamma_bar * |h|^2` under Rician fading:
/// `1 - Q1(|mu| / sqrt(sigma_g^2/2), sqrt(2x / (gamma_bar sigma_g^2)))`.
pub fn rician_power_cdf(mean_snr: f64, params: &RicianParams, x: f64) -> Result<f64> {
    if !(mean_snr > 0.0) {
        return Err(domain(
            "rician_power_cdf",
            format!("mean SNR must be positive, got {mean_snr}"),
        ));
    }
    if !(x >= 0.0) {
        return Err(domain("rician_power_cdf", format!("x must be non-negative, got {x}")));
    }
    let b = (2.0 * x / (mean_snr * params.scatter_variance)).sqrt();
    marcum_q1_complement(params.marcum_a(), b)
}

/// `1 - exp(-m x / gamma_bar) sum_{r<m} (m x / gamma_bar)^r / r!`.
pub fn nakagami_power_cdf(params: &NakagamiParams, x: f64) -> Result<f64> {
    if params.shape < 1 {
        return Err(domain("nakagami_power_cdf", "shape m must be at least 1"));
    }
    if !(params.mean_snr > 0.0) {
        return Err(domain(
            "nakagami_power_cdf",
            format!("mean SNR must be positive, got {}", params.mean_snr),
        ));
    }
    if !(x >= 0.0) {
        return Err(domain("nakagami_power_cdf", format!("x must be non-negative, got {x}")));
    }
    let m = params.shape as f64;
    Ok(lower_regularized(params.shape as u64, m * x / params.mean_snr))
}

/// Draws `|mu + g|^2` with `g` circularly-symmetric Gaussian of variance
/// `sigma_g^2`.
pub fn sample_rician_power<R: Rng + ?Sized>(params: &RicianParams, rng: &mut R) -> f64 {
    let s = (params.scatter_variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let i = params.los_magnitude + s * re;
    let q = s * im;
    i * i + q * q
}

/// Small-scale power-gain law of a downlink. The received SINR is
/// `gamma_bar * |h|^2`, where `gamma_bar` is the large-scale average SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingLaw {
    Rician(RicianParams),
    /// Unit-mean gamma power gain with integer shape `m`.
    Nakagami { shape: u32 },
}

impl FadingLaw {
    /// CDF of `gamma_bar * |h|^2` at `x`.
    pub fn cdf(&self, mean_snr: f64, x: f64) -> Result<f64> {
        match self {
            FadingLaw::Rician(p) => rician_power_cdf(mean_snr, p, x),
            FadingLaw::Nakagami { shape } => {
                // gamma_bar here scales a unit-mean gain, so it is also the
                // Nakagami mean SNR.
                nakagami_power_cdf(
                    &NakagamiParams {
                        shape: *shape,
                        mean_snr,
                    },
                    x,
                )
            }
        }
    }

    pub fn mean_gain(&self) -> f64 {
        match self {
            FadingLaw::Rician(p) => p.mean_power(),
            FadingLaw::Nakagami { .. } => 1.0,
        }
    }

    pub fn sampler(&self) -> Result<GainSampler> {
        match self {
            FadingLaw::Rician(p) => Ok(GainSampler::Rician(*p)),
            FadingLaw::Nakagami { shape } => {
                if *shape < 1 {
                    return Err(domain("FadingLaw::sampler", "shape m must be at least 1"));
                }
                let m = *shape as f64;
                let g = Gamma::new(m, 1.0 / m)
                    .map_err(|e| domain("FadingLaw::sampler", e.to_string()))?;
                Ok(GainSampler::Nakagami(g))
            }
        }
    }
}

/// Prepared sampler for a [`FadingLaw`].
#[derive(Debug, Clone, Copy)]
pub enum GainSampler {
    Rician(RicianParams),
    Nakagami(Gamma<f64>),
}

impl GainSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            GainSampler::Rician(p) => sample_rician_power(p, rng),
            GainSampler::Nakagami(g) => g.sample(rng),
        }
    }
}
