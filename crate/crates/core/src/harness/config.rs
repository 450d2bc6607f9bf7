//! Experiment configuration as line-oriented `key = value` text.

use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::scale::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fading::ChannelModel;
use crate::protocol::EveMode;
use crate::reconciliation::Code;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentId {
    BoundsVsTo,
    BoundsVsN,
    RateVsQ,
    BerVsQ,
    BerVsTo,
    RateVsNSim,
    NistTable,
    E2eKeygen,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 8] = [
        ExperimentId::BoundsVsTo,
        ExperimentId::BoundsVsN,
        ExperimentId::RateVsQ,
        ExperimentId::BerVsQ,
        ExperimentId::BerVsTo,
        ExperimentId::RateVsNSim,
        ExperimentId::NistTable,
        ExperimentId::E2eKeygen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::BoundsVsTo => "bounds_vs_To",
            ExperimentId::BoundsVsN => "bounds_vs_N",
            ExperimentId::RateVsQ => "rate_vs_q",
            ExperimentId::BerVsQ => "ber_vs_q",
            ExperimentId::BerVsTo => "ber_vs_To",
            ExperimentId::RateVsNSim => "rate_vs_N_sim",
            ExperimentId::NistTable => "nist_table",
            ExperimentId::E2eKeygen => "e2e_keygen",
        }
    }

    /// Analytic experiments ignore `trials`.
    pub fn is_analytic(self) -> bool {
        matches!(self, ExperimentId::BoundsVsTo | ExperimentId::BoundsVsN)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub trials: usize,
    pub snr_db: Vec<f64>,
    /// Samples per beacon observation.
    pub observation_samples: Vec<usize>,
    pub relays: Vec<u32>,
    pub q: Vec<u32>,
    pub sigma_h2: f64,
    pub amplitude: f64,
    pub channel_model: ChannelModel,
    pub eavesdropper: EveMode,
    pub key_bits: usize,
    pub sequences: usize,
    pub sequence_bits: usize,
    pub code: Code,
    pub physical: PhysicalConstants,
    pub desk_sample_rate_hz: f64,
    pub sample_budget: usize,
    /// Draws for the Monte Carlo agreement oracle.
    pub oracle_draws: u64,
}

fn geometric(lo: u32, hi: u32) -> Vec<u32> {
    (lo..=hi).map(|e| 1 << e).collect()
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentId) -> Self {
        let physical = PhysicalConstants::default();
        let mut cfg = ExperimentConfig {
            experiment,
            seed: 1,
            trials: 400,
            snr_db: vec![25.0],
            observation_samples: vec![20250],
            relays: vec![0],
            q: vec![16],
            sigma_h2: 0.5,
            amplitude: std::f64::consts::SQRT_2,
            channel_model: ChannelModel::Rayleigh,
            eavesdropper: EveMode::Off,
            key_bits: 1024,
            sequences: 10,
            sequence_bits: 10_000,
            code: Code::default(),
            physical,
            desk_sample_rate_hz: 2.7e6,
            sample_budget: 100_000,
            oracle_draws: 1_000_000,
        };
        match experiment {
            ExperimentId::BoundsVsTo => {
                cfg.snr_db = vec![15.0, 20.0, 25.0];
                cfg.observation_samples = (1..=10).map(|k| 2025 * k).collect();
                cfg.relays = vec![0, 1, 2, 4, 8];
            }
            ExperimentId::BoundsVsN => {
                cfg.snr_db = vec![15.0, 20.0, 25.0];
                cfg.observation_samples =
                    vec![(physical.half_interval_samples() - physical.guard_samples()) as usize];
                cfg.relays = vec![
                    0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 3000, 4000, 5000, 6000,
                    7000, 8000, 9000, 10000, 10500, 11000, 11200, 11300,
                ];
            }
            ExperimentId::RateVsQ => {
                cfg.q = geometric(1, 16);
                cfg.channel_model = ChannelModel::FixedAmplitude;
            }
            ExperimentId::BerVsQ => {
                cfg.observation_samples = vec![256];
                cfg.q = geometric(2, 7);
                cfg.trials = 2000;
                cfg.channel_model = ChannelModel::FixedAmplitude;
            }
            ExperimentId::BerVsTo => {
                cfg.snr_db = vec![15.0, 20.0, 25.0];
                cfg.observation_samples = vec![64, 128, 256, 512, 1024];
                cfg.trials = 2000;
                cfg.channel_model = ChannelModel::FixedAmplitude;
            }
            ExperimentId::RateVsNSim => {
                cfg.observation_samples = vec![2025];
                cfg.relays = (1..=8).collect();
                cfg.trials = 200;
            }
            ExperimentId::NistTable => {
                cfg.observation_samples = vec![256];
                cfg.relays = vec![4];
                cfg.q = vec![256];
            }
            ExperimentId::E2eKeygen => {
                cfg.observation_samples = vec![256];
                cfg.relays = vec![1];
                cfg.q = vec![256];
                cfg.trials = 100;
            }
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::Config(format!("grid `{name}` is empty")))
            } else {
                Ok(())
            }
        };
        empty("snr_db", self.snr_db.len())?;
        empty("observation_samples", self.observation_samples.len())?;
        empty("relays", self.relays.len())?;
        empty("q", self.q.len())?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(&q) = self.q.iter().find(|&&q| q < 2 || !q.is_power_of_two()) {
            return Err(Error::Config(format!("q = {q} is not a power of two >= 2")));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if !(self.sigma_h2 > 0.0 && self.amplitude > 0.0) {
            return Err(Error::Config(
                "sigma_h2 and amplitude must be positive".into(),
            ));
        }
        if self.sequences == 0 || self.sequence_bits == 0 || self.key_bits == 0 {
            return Err(Error::Config(
                "sequences, sequence_bits and key_bits must be positive".into(),
            ));
        }
        if self.oracle_draws == 0 {
            return Err(Error::Config("oracle_draws must be positive".into()));
        }
        Ok(())
    }

    /// Parses a config file on top of the experiment's defaults. A file
    /// that names a different experiment is rejected.
    pub fn from_text(experiment: ExperimentId, text: &str) -> Result<Self> {
        let mut cfg = Self::defaults(experiment);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override {kv:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn one<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for `{key}`")))
        }
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| one(key, x))
                .collect()
        }
        match key {
            "experiment" => {
                let id: ExperimentId = value.parse()?;
                if id != self.experiment {
                    return Err(Error::Config(format!(
                        "config is for {id}, not {}",
                        self.experiment
                    )));
                }
            }
            "seed" => self.seed = one(key, value)?,
            "trials" => self.trials = one(key, value)?,
            "snr_db" => self.snr_db = list(key, value)?,
            "observation_samples" => self.observation_samples = list(key, value)?,
            "relays" => self.relays = list(key, value)?,
            "q" => self.q = list(key, value)?,
            "sigma_h2" => self.sigma_h2 = one(key, value)?,
            "amplitude" => self.amplitude = one(key, value)?,
            "channel_model" => self.channel_model = value.parse()?,
            "eavesdropper" => self.eavesdropper = value.parse()?,
            "key_bits" => self.key_bits = one(key, value)?,
            "sequences" => self.sequences = one(key, value)?,
            "sequence_bits" => self.sequence_bits = one(key, value)?,
            "code" => self.code = value.parse()?,
            "carrier_freq_hz" => self.physical.carrier_freq_hz = one(key, value)?,
            "sample_rate_hz" => self.physical.sample_rate_hz = one(key, value)?,
            "speed_mps" => self.physical.speed_mps = one(key, value)?,
            "coherence_time_s" => self.physical.coherence_time_s = one(key, value)?,
            "delay_spread_s" => self.physical.delay_spread_s = one(key, value)?,
            "max_prop_delay_s" => self.physical.max_prop_delay_s = one(key, value)?,
            "desk_sample_rate_hz" => self.desk_sample_rate_hz = one(key, value)?,
            "sample_budget" => self.sample_budget = one(key, value)?,
            "oracle_draws" => self.oracle_draws = one(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Canonical text form; parsing it back gives the same config.
    pub fn to_text(&self) -> String {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let p = &self.physical;
        let lines = [
            ("experiment", self.experiment.to_string()),
            ("seed", self.seed.to_string()),
            ("trials", self.trials.to_string()),
            ("snr_db", join(&self.snr_db)),
            ("observation_samples", join(&self.observation_samples)),
            ("relays", join(&self.relays)),
            ("q", join(&self.q)),
            ("sigma_h2", self.sigma_h2.to_string()),
            ("amplitude", self.amplitude.to_string()),
            ("channel_model", self.channel_model.name().to_string()),
            ("eavesdropper", self.eavesdropper.to_string()),
            ("key_bits", self.key_bits.to_string()),
            ("sequences", self.sequences.to_string()),
            ("sequence_bits", self.sequence_bits.to_string()),
            ("code", self.code.to_string()),
            ("carrier_freq_hz", p.carrier_freq_hz.to_string()),
            ("sample_rate_hz", p.sample_rate_hz.to_string()),
            ("speed_mps", p.speed_mps.to_string()),
            ("coherence_time_s", p.coherence_time_s.to_string()),
            ("delay_spread_s", p.delay_spread_s.to_string()),
            ("max_prop_delay_s", p.max_prop_delay_s.to_string()),
            ("desk_sample_rate_hz", self.desk_sample_rate_hz.to_string()),
            ("sample_budget", self.sample_budget.to_string()),
            ("oracle_draws", self.oracle_draws.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`Self::to_text`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}
