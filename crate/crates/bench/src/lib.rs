//! Shared fixtures for the criterion benches.

use coopkey::beacon::{received_tone, snr_to_sigma2};
use coopkey::harness::{session_config, ExperimentConfig, ExperimentId};
use coopkey::{BeaconSpec, ChannelRealization, SampleVector, SeedTree, SessionConfig};

pub const SAMPLE_RATE_HZ: f64 = 2.7e6;
pub const CARRIER_HZ: f64 = 0.9e6;

/// A noisy beacon of `n` samples at `snr_db`.
pub fn noisy_tone(n: usize, snr_db: f64, seed: u64) -> SampleVector {
    let spec = BeaconSpec::new(
        std::f64::consts::SQRT_2,
        CARRIER_HZ,
        n as f64 / SAMPLE_RATE_HZ,
        SAMPLE_RATE_HZ,
        0.0,
    )
    .expect("valid beacon");
    let sigma2 = snr_to_sigma2(&spec, 0.5, 10f64.powf(snr_db / 10.0)).expect("valid snr");
    let h = ChannelRealization::from_polar(1.0, 1.234);
    received_tone(&spec, &h, sigma2, &mut SeedTree::new(seed).rng()).expect("valid tone")
}

/// Desk-scale session at 25 dB.
pub fn session(relays: u32, q: u32, n_samples: usize) -> SessionConfig {
    let cfg = ExperimentConfig::defaults(ExperimentId::E2eKeygen);
    let (mut s, _) = session_config(&cfg, 25.0, n_samples, relays, q, 64).expect("valid session");
    s.rounds = Some(1);
    s
}
