//! Single-tone beacons as seen by a receiver after fading and noise.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fading::{add_awgn, ChannelRealization};

/// Smallest observation the estimator accepts.
pub const MIN_SAMPLES: usize = 16;

/// Transmit-side description of a beacon and the receiver's sampling grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeaconSpec {
    /// Transmit amplitude `a`; the transmit power is `a^2 / 2`.
    pub amplitude_a: f64,
    pub carrier_freq_hz: f64,
    /// Observation time `T_o`.
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Time of the first sample on the common clock.
    pub start_time_s: f64,
}

impl BeaconSpec {
    pub fn new(
        amplitude_a: f64,
        carrier_freq_hz: f64,
        duration_s: f64,
        sample_rate_hz: f64,
        start_time_s: f64,
    ) -> Result<Self> {
        let spec = BeaconSpec {
            amplitude_a,
            carrier_freq_hz,
            duration_s,
            sample_rate_hz,
            start_time_s,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.amplitude_a,
            self.carrier_freq_hz,
            self.duration_s,
            self.sample_rate_hz,
            self.start_time_s,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("beacon", "parameters must be finite"));
        }
        if self.amplitude_a <= 0.0 {
            return Err(Error::invalid("amplitude_a", "must be positive"));
        }
        if self.carrier_freq_hz <= 0.0 {
            return Err(Error::invalid("carrier_freq_hz", "must be positive"));
        }
        if self.sample_rate_hz <= 2.0 * self.carrier_freq_hz {
            return Err(Error::invalid(
                "sample_rate_hz",
                "must exceed twice the carrier frequency",
            ));
        }
        if self.duration_s <= 0.0 {
            return Err(Error::invalid("duration_s", "must be positive"));
        }
        if self.start_time_s < 0.0 {
            return Err(Error::invalid("start_time_s", "must be non-negative"));
        }
        let n = self.n_samples();
        if n < MIN_SAMPLES {
            return Err(Error::invalid(
                "duration_s",
                format!("gives {n} samples, fewer than {MIN_SAMPLES}"),
            ));
        }
        Ok(())
    }

    /// Transmit power `P = a^2 / 2`.
    pub fn power(&self) -> f64 {
        0.5 * self.amplitude_a * self.amplitude_a
    }

    /// `floor(T_o f_s)`, tolerant of the rounding in products like
    /// `7.5e-6 * 2.7e9`.
    pub fn n_samples(&self) -> usize {
        samples_in(self.duration_s, self.sample_rate_hz)
    }

    pub fn with_start_time(mut self, start_time_s: f64) -> Self {
        self.start_time_s = start_time_s;
        self
    }

    pub fn with_duration(mut self, duration_s: f64) -> Self {
        self.duration_s = duration_s;
        self
    }

    pub fn omega_c(&self) -> f64 {
        TAU * self.carrier_freq_hz
    }
}

/// Number of whole samples in `duration_s` at `sample_rate_hz`.
pub fn samples_in(duration_s: f64, sample_rate_hz: f64) -> usize {
    let x = duration_s * sample_rate_hz;
    if !x.is_finite() || x < 0.0 {
        return 0;
    }
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

/// A real discrete-time observation with its sampling grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleVector {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    start_time_s: f64,
}

impl SampleVector {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64, start_time_s: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyObservation);
        }
        if !samples.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("samples", "must be finite"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid("sample_rate_hz", "must be positive"));
        }
        if !start_time_s.is_finite() {
            return Err(Error::invalid("start_time_s", "must be finite"));
        }
        Ok(SampleVector {
            samples,
            sample_rate_hz,
            start_time_s,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// `a alpha cos(w_c (t_0 + m T_s) + theta) + n[m]` for `m = 0..N_s`.
pub fn received_tone<R: Rng + ?Sized>(
    spec: &BeaconSpec,
    channel: &ChannelRealization,
    sigma2: f64,
    rng: &mut R,
) -> Result<SampleVector> {
    let mut samples = Vec::new();
    received_tone_into(spec, channel, sigma2, rng, &mut samples)?;
    SampleVector::new(samples, spec.sample_rate_hz, spec.start_time_s)
}

/// Same as [`received_tone`] but reuses `buf` for the samples.
pub fn received_tone_into<R: Rng + ?Sized>(
    spec: &BeaconSpec,
    channel: &ChannelRealization,
    sigma2: f64,
    rng: &mut R,
    buf: &mut Vec<f64>,
) -> Result<()> {
    spec.validate()?;
    if !(channel.amplitude.is_finite() && channel.phase.is_finite()) {
        return Err(Error::invalid("channel", "must be finite"));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid("sigma2", "must be finite and non-negative"));
    }
    let n = spec.n_samples();
    let amp = spec.amplitude_a * channel.amplitude;
    // work in cycles so large start times keep their fractional part
    let start = (spec.carrier_freq_hz * spec.start_time_s).fract() + channel.phase / TAU;
    let step = spec.carrier_freq_hz / spec.sample_rate_hz;
    buf.clear();
    buf.extend((0..n).map(|m| {
        let cycles = (start + (m as f64 * step).fract()).fract();
        amp * (TAU * cycles).cos()
    }));
    add_awgn(buf, sigma2, rng);
    Ok(())
}

/// Noise variance giving `SNR = 2 sigma_h^2 P / sigma^2`. An infinite SNR
/// maps to a noiseless channel.
pub fn snr_to_sigma2(spec: &BeaconSpec, sigma_h2: f64, snr_linear: f64) -> Result<f64> {
    if snr_linear.is_nan() || snr_linear <= 0.0 {
        return Err(Error::invalid("snr", "must be positive"));
    }
    if !(sigma_h2 > 0.0 && sigma_h2.is_finite()) {
        return Err(Error::invalid("sigma_h2", "must be positive and finite"));
    }
    Ok(2.0 * sigma_h2 * spec.power() / snr_linear)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::{sample_channel, ChannelParams};
    use crate::rng::{SeedTree, Stream};

    fn spec() -> BeaconSpec {
        BeaconSpec::new(1.0, 0.9e6, 1024.0 / 2.7e6, 2.7e6, 0.0).unwrap()
    }

    fn unit() -> ChannelRealization {
        ChannelRealization::from_polar(1.0, 0.0)
    }

    #[test]
    fn noiseless_tone_is_a_cosine() {
        let s = spec();
        let v = received_tone(&s, &unit(), 0.0, &mut SeedTree::new(0).rng()).unwrap();
        assert_eq!(v.len(), 1024);
        for (m, &x) in v.samples().iter().enumerate() {
            let want = (TAU * 0.9e6 * m as f64 / 2.7e6).cos();
            assert!((x - want).abs() < 1e-12, "m={m}: {x} vs {want}");
        }
    }

    #[test]
    fn pi_shift_negates() {
        let s = spec();
        let mut rng = SeedTree::new(0).rng();
        let a = received_tone(&s, &unit(), 0.0, &mut rng).unwrap();
        let b = received_tone(
            &s,
            &ChannelRealization::from_polar(1.0, std::f64::consts::PI),
            0.0,
            &mut rng,
        )
        .unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x + y).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_and_linear() {
        let s = spec();
        let h = ChannelRealization::from_polar(0.7, 2.1);
        let mut rng = SeedTree::new(0).rng();
        let a = received_tone(&s, &h, 0.0, &mut rng).unwrap();
        for m in 3..a.len() {
            assert!((a.samples()[m] - a.samples()[m - 3]).abs() < 1e-12);
        }
        let s3 = BeaconSpec {
            amplitude_a: 3.0,
            ..s
        };
        let b = received_tone(&s3, &h, 0.0, &mut rng).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((3.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_count_tolerates_rounding() {
        let s = BeaconSpec::new(1.0, 0.9e9, 7.5e-6, 2.7e9, 0.0).unwrap();
        assert_eq!(s.n_samples(), 20250);
        assert_eq!(samples_in(1.5, 2.0), 3);
        assert_eq!(samples_in(1.2, 2.0), 2);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(BeaconSpec::new(1.0, 1e6, 1e-3, 1.9e6, 0.0).is_err());
        assert!(BeaconSpec::new(0.0, 1e6, 1e-3, 3e6, 0.0).is_err());
        assert!(BeaconSpec::new(1.0, 1e6, 1e-6, 3e6, 0.0).is_err());
        assert!(BeaconSpec::new(1.0, f64::NAN, 1e-3, 3e6, 0.0).is_err());
        let s = spec();
        let bad = ChannelRealization::from_polar(f64::INFINITY, 0.0);
        assert!(received_tone(&s, &bad, 0.0, &mut SeedTree::new(0).rng()).is_err());
    }

    #[test]
    fn snr_conversion() {
        let s = BeaconSpec {
            amplitude_a: 2f64.sqrt(),
            ..spec()
        };
        assert!((snr_to_sigma2(&s, 0.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(snr_to_sigma2(&s, 0.5, f64::INFINITY).unwrap(), 0.0);
        assert!(snr_to_sigma2(&s, 0.5, 0.0).is_err());
        assert!(snr_to_sigma2(&s, 0.5, -1.0).is_err());
        let v = snr_to_sigma2(&s, 0.5, db_to_linear(25.0)).unwrap();
        assert!((v - 10f64.powf(-2.5)).abs() < 1e-15);
        assert!((v - 3.162e-3).abs() < 1e-6);
    }

    #[test]
    fn realized_snr_matches_configuration() {
        let tree = SeedTree::new(11);
        let mut ch = tree.stream(Stream::Channel);
        let mut noise = tree.stream(Stream::Noise);
        let params = ChannelParams::new(0.5, 14e-3).unwrap();
        let s = BeaconSpec::new(2f64.sqrt(), 0.9e6, 256.0 / 2.7e6, 2.7e6, 0.0).unwrap();
        let sigma2 = snr_to_sigma2(&s, 0.5, db_to_linear(25.0)).unwrap();
        let (mut signal, mut noise_power) = (0.0, 0.0);
        let trials = 100_000;
        for _ in 0..trials {
            let h = sample_channel(&mut ch, &params);
            let clean = received_tone(&s, &h, 0.0, &mut noise).unwrap();
            let noisy = received_tone(&s, &h, sigma2, &mut noise).unwrap();
            let n = clean.len() as f64;
            signal += clean.samples().iter().map(|x| x * x).sum::<f64>() / n;
            noise_power += clean
                .samples()
                .iter()
                .zip(noisy.samples())
                .map(|(c, y)| (y - c) * (y - c))
                .sum::<f64>()
                / n;
        }
        let snr_db = linear_to_db(signal / noise_power);
        assert!((snr_db - 25.0).abs() < 0.1, "realized {snr_db} dB");
    }
}
