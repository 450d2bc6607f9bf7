//! Physical constants of the full-scale scenario and their desk-scale
//! counterparts.
//!
//! Scaling every frequency down by the same factor and every time up by it
//! keeps sample counts, SNR and the slot structure unchanged, which is all
//! the estimator statistics and the bounds depend on.

use crate::beacon::MIN_SAMPLES;
use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants {
    pub carrier_freq_hz: f64,
    pub sample_rate_hz: f64,
    pub speed_mps: f64,
    pub coherence_time_s: f64,
    pub delay_spread_s: f64,
    pub max_prop_delay_s: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            carrier_freq_hz: 900e6,
            sample_rate_hz: 2.7e9,
            speed_mps: 10.0,
            coherence_time_s: 14e-3,
            delay_spread_s: 1.2e-6,
            max_prop_delay_s: 33.3e-9,
        }
    }
}

impl PhysicalConstants {
    /// `f_d = v / lambda`.
    pub fn doppler_hz(&self) -> f64 {
        self.speed_mps * self.carrier_freq_hz / SPEED_OF_LIGHT
    }

    /// Clarke's `0.423 / f_d` rule of thumb.
    pub fn coherence_time_from_doppler(&self) -> f64 {
        0.423 / self.doppler_hz()
    }

    /// Dead time per slot, `nu + tau_max`.
    pub fn guard_s(&self) -> f64 {
        self.delay_spread_s + self.max_prop_delay_s
    }

    pub fn guard_samples(&self) -> f64 {
        (self.guard_s() * self.sample_rate_hz).round()
    }

    /// Samples in half a coherence interval, the observation each end gets
    /// without relays when the whole slot is used.
    pub fn half_interval_samples(&self) -> f64 {
        (self.coherence_time_s * self.sample_rate_hz / 2.0).round()
    }
}

/// The same scenario with frequencies multiplied and times divided by
/// `factor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeskScale {
    pub factor: f64,
    pub carrier_freq_hz: f64,
    pub sample_rate_hz: f64,
    pub coherence_time_s: f64,
    pub guard_s: f64,
    pub n_samples: usize,
    pub observation_s: f64,
}

/// Rescales to `desk_sample_rate_hz`, keeping `n_samples` per beacon.
/// `budget` caps the samples one beacon may take.
pub fn scale_config(
    physical: &PhysicalConstants,
    n_samples: usize,
    desk_sample_rate_hz: f64,
    budget: usize,
) -> Result<DeskScale> {
    if budget < MIN_SAMPLES {
        return Err(Error::invalid(
            "sample_budget",
            format!("must allow at least {MIN_SAMPLES} samples per beacon"),
        ));
    }
    if n_samples < MIN_SAMPLES {
        return Err(Error::invalid(
            "observation_samples",
            format!("must be at least {MIN_SAMPLES}"),
        ));
    }
    if n_samples > budget {
        return Err(Error::invalid(
            "sample_budget",
            format!("{n_samples} samples per beacon exceed the budget of {budget}"),
        ));
    }
    if !(desk_sample_rate_hz > 0.0 && desk_sample_rate_hz.is_finite()) {
        return Err(Error::invalid("desk_sample_rate_hz", "must be positive"));
    }
    let factor = desk_sample_rate_hz / physical.sample_rate_hz;
    Ok(DeskScale {
        factor,
        carrier_freq_hz: physical.carrier_freq_hz * factor,
        sample_rate_hz: desk_sample_rate_hz,
        coherence_time_s: physical.coherence_time_s / factor,
        guard_s: physical.guard_s() / factor,
        n_samples,
        observation_s: n_samples as f64 / desk_sample_rate_hz,
    })
}
