//! Block-fading narrowband channel draws and additive white Gaussian noise.
//!
//! A channel is constant over one coherence interval and redrawn
//! independently for the next one. Its in-phase and quadrature components
//! are independent zero-mean Gaussians, which makes the amplitude Rayleigh
//! and the phase uniform on `[0, 2pi)`.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    sigma_h2: f64,
    coherence_time_s: f64,
}

impl ChannelParams {
    /// `sigma_h2` is the variance of each quadrature component.
    pub fn new(sigma_h2: f64, coherence_time_s: f64) -> Result<Self> {
        if !(sigma_h2 > 0.0 && sigma_h2.is_finite()) {
            return Err(Error::invalid("sigma_h2", "must be positive and finite"));
        }
        if !(coherence_time_s > 0.0 && coherence_time_s.is_finite()) {
            return Err(Error::invalid(
                "coherence_time_s",
                "must be positive and finite",
            ));
        }
        Ok(ChannelParams {
            sigma_h2,
            coherence_time_s,
        })
    }

    pub fn sigma_h2(&self) -> f64 {
        self.sigma_h2
    }

    pub fn coherence_time_s(&self) -> f64 {
        self.coherence_time_s
    }

    /// `E[alpha^2] = 2 sigma_h^2`.
    pub fn mean_power_gain(&self) -> f64 {
        2.0 * self.sigma_h2
    }
}

/// One coherence-interval draw of a narrowband channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelRealization {
    pub in_phase: f64,
    pub quadrature: f64,
    pub amplitude: f64,
    /// In `[0, 2pi)`.
    pub phase: f64,
}

impl ChannelRealization {
    pub fn from_components(in_phase: f64, quadrature: f64) -> Self {
        ChannelRealization {
            in_phase,
            quadrature,
            amplitude: in_phase.hypot(quadrature),
            phase: wrap_phase(quadrature.atan2(in_phase)),
        }
    }

    pub fn from_polar(amplitude: f64, phase: f64) -> Self {
        let phase = wrap_phase(phase);
        ChannelRealization {
            in_phase: amplitude * phase.cos(),
            quadrature: amplitude * phase.sin(),
            amplitude,
            phase,
        }
    }
}

/// Reduces an angle into `[0, 2pi)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid of a tiny negative number rounds up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Rayleigh fading: independent Gaussian quadrature components.
pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R, params: &ChannelParams) -> ChannelRealization {
    let s = params.sigma_h2.sqrt();
    let i: f64 = rng.sample(StandardNormal);
    let q: f64 = rng.sample(StandardNormal);
    ChannelRealization::from_components(s * i, s * q)
}

/// The same realization for the forward and reverse direction of a link
/// within one coherence interval.
pub fn reciprocal_pair(
    realization: ChannelRealization,
) -> (ChannelRealization, ChannelRealization) {
    (realization, realization)
}

/// A draw for an eavesdropper's channel. Statistically identical to
/// [`sample_channel`]; independence comes from handing it the dedicated
/// eavesdropper stream.
pub fn eavesdropper_channel<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ChannelParams,
) -> ChannelRealization {
    sample_channel(rng, params)
}

/// How a channel draw is produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChannelModel {
    /// Rayleigh amplitude, uniform phase.
    #[default]
    Rayleigh,
    /// Amplitude pinned to its RMS value `sqrt(2 sigma_h^2)`, uniform phase.
    /// The received SNR then equals the configured mean SNR in every
    /// interval, which is the regime the CRB analysis describes.
    FixedAmplitude,
}

impl ChannelModel {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R, params: &ChannelParams) -> ChannelRealization {
        match self {
            ChannelModel::Rayleigh => sample_channel(rng, params),
            ChannelModel::FixedAmplitude => {
                // consume the same two normals so both models stay in lockstep
                let h = sample_channel(rng, params);
                ChannelRealization::from_polar(params.mean_power_gain().sqrt(), h.phase)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelModel::Rayleigh => "rayleigh",
            ChannelModel::FixedAmplitude => "fixed-amplitude",
        }
    }
}

impl std::str::FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rayleigh" => Ok(ChannelModel::Rayleigh),
            "fixed-amplitude" | "fixed" => Ok(ChannelModel::FixedAmplitude),
            other => Err(Error::Config(format!("unknown channel model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    sigma2: f64,
}

impl NoiseParams {
    pub fn new(sigma2: f64) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "must be finite and non-negative"));
        }
        Ok(NoiseParams { sigma2 })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
}

/// `length` i.i.d. zero-mean Gaussian samples of variance `sigma2`.
pub fn awgn<R: Rng + ?Sized>(length: usize, sigma2: f64, rng: &mut R) -> Result<Vec<f64>> {
    if length == 0 {
        return Err(Error::invalid("length", "must be at least 1"));
    }
    let noise = NoiseParams::new(sigma2)?;
    let mut out = vec![0.0; length];
    add_awgn(&mut out, noise.sigma2, rng);
    Ok(out)
}

/// Adds noise in place. A zero variance leaves the samples untouched and
/// draws nothing from `rng`.
pub fn add_awgn<R: Rng + ?Sized>(samples: &mut [f64], sigma2: f64, rng: &mut R) {
    if sigma2 == 0.0 {
        return;
    }
    let sd = sigma2.sqrt();
    for s in samples {
        let z: f64 = rng.sample(StandardNormal);
        *s += sd * z;
    }
}
