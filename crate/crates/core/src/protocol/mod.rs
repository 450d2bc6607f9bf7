//! The time-slotted cooperative key-generation protocol.
//!
//! Each round lives inside one coherence interval split into `N + 2` slots.
//! In slot 1 node A sends a beacon, in slot 2 node B, and in slot `2 + j`
//! relay `R_j`. Every listener estimates the phase of each beacon it hears
//! and quantizes it. A and B end up with a direct component `K1`, and each
//! relay shares `K_j1` with A and `K_j2` with B. The relay publishes
//! `K_j1 xor K_j2` so that both ends learn both halves.
//!
//! An eavesdropper E can be attached. It hears every beacon over channels
//! of its own and runs the same estimator.

mod leakage;
mod shares;
mod trace;

pub use leakage::{
    exact_mutual_information, plug_in_mutual_information, xor_leakage_exact, Contingency,
    LeakageAccumulator, LeakageReport, RoleLeakage,
};
pub use shares::{
    accumulate_shares, assemble_final_key, recover_components, relay_publish, Components, FinalKey,
    KeyShares, PublicTranscript, SelectionPolicy, SharedComponent,
};
pub use trace::{parse_trace, write_trace};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::beacon::{received_tone_into, BeaconSpec};
use crate::error::{Error, Result};
use crate::estimator::{ClockReference, EstimatorConfig, ToneEstimator};
use crate::fading::{ChannelModel, ChannelParams, ChannelRealization};
use crate::quantizer::{quantize_phase, QuantizerConfig};
use crate::rng::{SeedTree, Stream};

/// A protocol participant. Relays are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    A,
    B,
    Relay(u32),
    Eve,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::A => f.write_str("A"),
            Node::B => f.write_str("B"),
            Node::Relay(j) => write!(f, "R{j}"),
            Node::Eve => f.write_str("E"),
        }
    }
}

impl FromStr for Node {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Node::A),
            "B" => Ok(Node::B),
            "E" => Ok(Node::Eve),
            _ => s
                .strip_prefix('R')
                .and_then(|j| j.parse().ok())
                .filter(|&j| j > 0)
                .map(Node::Relay)
                .ok_or_else(|| Error::Config(format!("unknown node {s:?}"))),
        }
    }
}

/// A key component: the direct one or one half of a relay pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// Shared by A and B.
    K1,
    /// Shared by A and relay `j`.
    RelayFirst(u32),
    /// Shared by B and relay `j`.
    RelaySecond(u32),
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::K1 => f.write_str("K1"),
            Role::RelayFirst(j) => write!(f, "K{j}_1"),
            Role::RelaySecond(j) => write!(f, "K{j}_2"),
        }
    }
}

/// How E's channels are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EveMode {
    /// No eavesdropper is simulated.
    #[default]
    Off,
    /// Independent channels from every transmitter to E.
    Independent,
    /// E's channel from A and B copies the A-B link and its channel from
    /// `R_j` copies the A-`R_j` link. Not physical; used to check that the
    /// leakage estimator sees a fully exposed key.
    Mirror,
}

impl fmt::Display for EveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EveMode::Off => "off",
            EveMode::Independent => "independent",
            EveMode::Mirror => "mirror",
        })
    }
}

impl FromStr for EveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(EveMode::Off),
            "independent" => Ok(EveMode::Independent),
            "mirror" => Ok(EveMode::Mirror),
            other => Err(Error::Config(format!(
                "unknown eavesdropper mode {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub relays: u32,
    pub quantizer: QuantizerConfig,
    pub target_key_bits: usize,
    /// Beacon shape; its start time is replaced by each slot's start.
    pub beacon: BeaconSpec,
    pub channel: ChannelParams,
    pub channel_model: ChannelModel,
    /// Noise variance on every link without an override, and at E.
    pub sigma2: f64,
    /// Per-link noise variance overrides, keyed by unordered node pair.
    pub link_sigma2: Vec<(Node, Node, f64)>,
    /// Dead time at the start of every slot (delay spread plus propagation
    /// delay) before the steady-state observation begins.
    pub guard_s: f64,
    pub rounds: Option<usize>,
    pub estimator: EstimatorConfig,
    pub eavesdropper: EveMode,
    pub selection: SelectionPolicy,
}

impl SessionConfig {
    /// Defaults: Rayleigh channels, no guard, no eavesdropper, components
    /// `K_j1` selected, phases referenced to the nominal carrier.
    pub fn new(
        relays: u32,
        q: u32,
        target_key_bits: usize,
        beacon: BeaconSpec,
        channel: ChannelParams,
        sigma2: f64,
    ) -> Result<Self> {
        let cfg = SessionConfig {
            relays,
            quantizer: QuantizerConfig::new(q)?,
            target_key_bits,
            beacon,
            channel,
            channel_model: ChannelModel::Rayleigh,
            sigma2,
            link_sigma2: Vec::new(),
            guard_s: 0.0,
            rounds: None,
            estimator: EstimatorConfig {
                clock: ClockReference::NominalCarrier {
                    carrier_freq_hz: beacon.carrier_freq_hz,
                },
                ..EstimatorConfig::default()
            },
            eavesdropper: EveMode::Off,
            selection: SelectionPolicy::First,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_key_bits == 0 {
            return Err(Error::invalid("target_key_bits", "must be positive"));
        }
        if self.rounds == Some(0) {
            return Err(Error::invalid("rounds", "must be positive"));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", "must be finite and non-negative"));
        }
        for &(_, _, s) in &self.link_sigma2 {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::invalid(
                    "link_sigma2",
                    "must be finite and non-negative",
                ));
            }
        }
        if !(self.guard_s >= 0.0 && self.guard_s.is_finite()) {
            return Err(Error::invalid("guard_s", "must be non-negative"));
        }
        self.beacon.validate()?;
        let slot = self.slot_duration_s();
        if self.beacon.duration_s + self.guard_s > slot * (1.0 + 1e-12) {
            return Err(Error::SlotTooShort {
                slot_s: slot,
                observation_s: self.beacon.duration_s,
                guard_s: self.guard_s,
            });
        }
        Ok(())
    }

    pub fn slots_per_round(&self) -> usize {
        self.relays as usize + 2
    }

    /// `T_c / (N + 2)`.
    pub fn slot_duration_s(&self) -> f64 {
        self.channel.coherence_time_s() / self.slots_per_round() as f64
    }

    /// Start of the steady-state observation in 1-based `slot`.
    pub fn observation_start_s(&self, slot: usize) -> f64 {
        (slot - 1) as f64 * self.slot_duration_s() + self.guard_s
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.quantizer.bits_per_symbol()
    }

    /// `ceil(|K| / ((N + 1) log2 q))` unless overridden.
    pub fn rounds(&self) -> usize {
        self.rounds.unwrap_or_else(|| {
            let per_round = (self.relays as usize + 1) * self.bits_per_symbol();
            self.target_key_bits.div_ceil(per_round)
        })
    }

    /// `(N + 1) * rounds * log2 q`.
    pub fn final_key_bits(&self) -> usize {
        (self.relays as usize + 1) * self.rounds() * self.bits_per_symbol()
    }

    pub fn link_sigma2(&self, a: Node, b: Node) -> f64 {
        self.link_sigma2
            .iter()
            .find(|&&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a))
            .map(|&(_, _, s)| s)
            .unwrap_or(self.sigma2)
    }

    /// Transmitter of 1-based `slot`.
    pub fn transmitter(&self, slot: usize) -> Node {
        match slot {
            1 => Node::A,
            2 => Node::B,
            s => Node::Relay((s - 2) as u32),
        }
    }

    /// Legitimate listeners of 1-based `slot`, in recording order.
    pub fn listeners(&self, slot: usize) -> Vec<Node> {
        let relays = (1..=self.relays).map(Node::Relay);
        match slot {
            1 => std::iter::once(Node::B).chain(relays).collect(),
            2 => std::iter::once(Node::A).chain(relays).collect(),
            _ => vec![Node::A, Node::B],
        }
    }
}

/// One node's processing of one beacon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reception {
    pub receiver: Node,
    /// Phase of the channel the beacon travelled through.
    pub true_phase: f64,
    pub estimate: f64,
    pub index: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotRecord {
    /// 1-based.
    pub round: usize,
    /// 1-based.
    pub slot: usize,
    pub transmitter: Node,
    pub receptions: Vec<Reception>,
}

impl SlotRecord {
    pub fn reception(&self, receiver: Node) -> Option<&Reception> {
        self.receptions.iter().find(|r| r.receiver == receiver)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub slots: Vec<SlotRecord>,
}

impl RoundRecord {
    /// `receiver`'s estimate of the beacon sent by `transmitter`.
    pub fn reception(&self, receiver: Node, transmitter: Node) -> Option<&Reception> {
        self.slots
            .iter()
            .find(|s| s.transmitter == transmitter)
            .and_then(|s| s.reception(receiver))
    }

    pub fn index(&self, receiver: Node, transmitter: Node) -> Result<u32> {
        self.reception(receiver, transmitter)
            .map(|r| r.index)
            .ok_or_else(|| {
                Error::MissingComponent(format!(
                    "round {}: {receiver} has no estimate from {transmitter}",
                    self.round
                ))
            })
    }
}

/// Everything one protocol run produces.
#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub rounds: Vec<RoundRecord>,
    pub shares: KeyShares,
    pub transcript: PublicTranscript,
    pub key_a: FinalKey,
    pub key_b: FinalKey,
}

/// Runs sessions for one configuration. Owns estimator state, so keep one
/// per worker.
#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    estimator: ToneEstimator,
    buf: Vec<f64>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let estimator = ToneEstimator::new(config.estimator);
        Ok(Session {
            config,
            estimator,
            buf: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// One coherence interval: fresh channels, then every slot in order.
    /// Randomness comes from `tree`'s `round/<round>` node.
    pub fn run_round(&mut self, round: usize, tree: &SeedTree) -> Result<RoundRecord> {
        let cfg = &self.config;
        let node = tree.child("round").child(round);
        let mut ch_rng = node.stream(Stream::Channel);
        let mut noise_rng = node.stream(Stream::Noise);

        let mut links: HashMap<(Node, Node), ChannelRealization> = HashMap::new();
        let draw = |rng: &mut _| cfg.channel_model.draw(rng, &cfg.channel);
        links.insert((Node::A, Node::B), draw(&mut ch_rng));
        for j in 1..=cfg.relays {
            links.insert((Node::A, Node::Relay(j)), draw(&mut ch_rng));
            links.insert((Node::B, Node::Relay(j)), draw(&mut ch_rng));
        }
        let link = |x: Node, y: Node| -> ChannelRealization {
            links
                .get(&(x, y))
                .or_else(|| links.get(&(y, x)))
                .copied()
                .expect("every legitimate link is drawn")
        };

        let mut eve: HashMap<Node, ChannelRealization> = HashMap::new();
        match cfg.eavesdropper {
            EveMode::Off => {}
            EveMode::Independent => {
                let mut rng = node.stream(Stream::Eavesdropper);
                for slot in 1..=cfg.slots_per_round() {
                    eve.insert(cfg.transmitter(slot), draw(&mut rng));
                }
            }
            EveMode::Mirror => {
                eve.insert(Node::A, link(Node::A, Node::B));
                eve.insert(Node::B, link(Node::A, Node::B));
                for j in 1..=cfg.relays {
                    eve.insert(Node::Relay(j), link(Node::A, Node::Relay(j)));
                }
            }
        }

        let mut slots = Vec::with_capacity(cfg.slots_per_round());
        for slot in 1..=cfg.slots_per_round() {
            let tx = cfg.transmitter(slot);
            let spec = cfg.beacon.with_start_time(cfg.observation_start_s(slot));
            let mut receptions = Vec::new();
            let mut listeners: Vec<(Node, ChannelRealization, f64)> = cfg
                .listeners(slot)
                .into_iter()
                .map(|rx| (rx, link(tx, rx), cfg.link_sigma2(tx, rx)))
                .collect();
            if let Some(h) = eve.get(&tx) {
                listeners.push((Node::Eve, *h, cfg.sigma2));
            }
            for (rx, h, sigma2) in listeners {
                received_tone_into(&spec, &h, sigma2, &mut noise_rng, &mut self.buf)?;
                let est = self.estimator.estimate_samples(
                    &self.buf,
                    spec.sample_rate_hz,
                    spec.start_time_s,
                )?;
                receptions.push(Reception {
                    receiver: rx,
                    true_phase: h.phase,
                    estimate: est.theta_hat,
                    index: quantize_phase(est.theta_hat, cfg.quantizer.q())?,
                });
            }
            slots.push(SlotRecord {
                round,
                slot,
                transmitter: tx,
                receptions,
            });
        }
        Ok(RoundRecord { round, slots })
    }

    /// Runs every round, assembles shares, publishes the relay XORs and
    /// builds both ends' final keys.
    pub fn run(&mut self, tree: &SeedTree) -> Result<SessionOutcome> {
        let rounds = (1..=self.config.rounds())
            .map(|r| self.run_round(r, tree))
            .collect::<Result<Vec<_>>>()?;
        let shares = accumulate_shares(&self.config, &rounds)?;
        let mut transcript = relay_publish(&shares)?;
        transcript.eavesdropper = rounds
            .iter()
            .flat_map(|r| r.slots.iter())
            .filter_map(|s| s.reception(Node::Eve).map(|e| (s.round, s.slot, *e)))
            .collect();
        let at_a = recover_components(Node::A, &shares, &transcript)?;
        let at_b = recover_components(Node::B, &shares, &transcript)?;
        let key_a = assemble_final_key(&at_a, self.config.selection)?;
        let key_b = assemble_final_key(&at_b, self.config.selection)?;
        Ok(SessionOutcome {
            rounds,
            shares,
            transcript,
            key_a,
            key_b,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beacon::db_to_linear;
    use crate::stats::wrapped_error;

    pub(crate) fn desk_config(relays: u32, q: u32, bits: usize, sigma2: f64) -> SessionConfig {
        let beacon = BeaconSpec::new(2f64.sqrt(), 0.9e6, 256.0 / 2.7e6, 2.7e6, 0.0).unwrap();
        let channel = ChannelParams::new(0.5, 14.0).unwrap();
        SessionConfig::new(relays, q, bits, beacon, channel, sigma2).unwrap()
    }

    #[test]
    fn node_and_role_text() {
        for n in [Node::A, Node::B, Node::Relay(12), Node::Eve] {
            assert_eq!(n.to_string().parse::<Node>().unwrap(), n);
        }
        assert!("R0".parse::<Node>().is_err());
        assert!("X".parse::<Node>().is_err());
        assert_eq!(Role::RelayFirst(1).to_string(), "K1_1");
    }

    #[test]
    fn schedule_arithmetic() {
        let cfg = desk_config(3, 16, 128, 0.0);
        assert_eq!(cfg.slots_per_round(), 5);
        assert_eq!(cfg.rounds(), 8);
        assert_eq!(cfg.final_key_bits(), 128);
        let mut s = Session::new(cfg).unwrap();
        let r = s.run_round(1, &SeedTree::new(1)).unwrap();
        assert_eq!(r.slots.len(), 5);
        let at_keying: usize = r
            .slots
            .iter()
            .flat_map(|s| &s.receptions)
            .filter(|x| matches!(x.receiver, Node::A | Node::B))
            .count();
        assert_eq!(at_keying, 8);
        for slot in &r.slots {
            // half duplex: nobody hears its own slot
            assert!(slot.reception(slot.transmitter).is_none());
        }
    }

    #[test]
    fn slot_too_short_is_rejected() {
        let mut cfg = desk_config(1, 16, 128, 0.0);
        cfg.guard_s = cfg.slot_duration_s();
        assert!(matches!(cfg.validate(), Err(Error::SlotTooShort { .. })));
        assert!(Session::new(cfg).is_err());
    }

    #[test]
    fn noiseless_reciprocity() {
        let cfg = desk_config(2, 256, 256, 0.0);
        let mut s = Session::new(cfg).unwrap();
        for round in 1..=20 {
            let r = s.run_round(round, &SeedTree::new(5)).unwrap();
            let pairs = [
                (Node::A, Node::B),
                (Node::A, Node::Relay(1)),
                (Node::B, Node::Relay(1)),
                (Node::A, Node::Relay(2)),
                (Node::B, Node::Relay(2)),
            ];
            for (x, y) in pairs {
                let u = r.reception(x, y).unwrap();
                let v = r.reception(y, x).unwrap();
                assert!(wrapped_error(u.estimate, v.estimate).abs() < 1e-6);
                assert!(wrapped_error(u.estimate, u.true_phase).abs() < 1e-6);
                assert_eq!(u.index, v.index);
            }
        }
    }

    #[test]
    fn rounds_are_reproducible() {
        let cfg = desk_config(1, 16, 64, 1e-3);
        let mut s = Session::new(cfg.clone()).unwrap();
        let mut t = Session::new(cfg).unwrap();
        let tree = SeedTree::new(9);
        assert_eq!(
            s.run_round(4, &tree).unwrap(),
            t.run_round(4, &tree).unwrap()
        );
        assert_ne!(
            s.run_round(4, &tree).unwrap(),
            s.run_round(5, &tree).unwrap()
        );
    }

    #[test]
    fn eve_hears_every_slot() {
        let mut cfg = desk_config(2, 8, 48, 1e-3);
        cfg.eavesdropper = EveMode::Independent;
        let mut s = Session::new(cfg).unwrap();
        let out = s.run(&SeedTree::new(3)).unwrap();
        assert_eq!(out.transcript.eavesdropper.len(), out.rounds.len() * 4);
    }

    /// Per-link index disagreement against the quantizer's prediction at
    /// 25 dB with a fixed-amplitude channel.
    #[test]
    fn link_disagreement_matches_prediction() {
        let snr = db_to_linear(25.0);
        let mut cfg = desk_config(1, 16, 16, 0.0);
        cfg.beacon = cfg.beacon.with_duration(128.0 / 2.7e6);
        cfg.sigma2 = 2.0 * 0.5 * cfg.beacon.power() / snr;
        cfg.channel_model = ChannelModel::FixedAmplitude;
        cfg.rounds = Some(1);
        let mut s = Session::new(cfg).unwrap();
        let tree = SeedTree::new(31);
        let (mut miss, mut total) = (0u64, 0u64);
        for round in 1..=6000 {
            let r = s.run_round(round, &tree).unwrap();
            for (x, y) in [
                (Node::A, Node::B),
                (Node::A, Node::Relay(1)),
                (Node::B, Node::Relay(1)),
            ] {
                miss += (r.index(x, y).unwrap() != r.index(y, x).unwrap()) as u64;
                total += 1;
            }
        }
        let sim = miss as f64 / total as f64;
        let crb = crate::estimator::crb_phase_variance(snr, 128)
            .unwrap()
            .var_theta_exact;
        let pred = 1.0 - crate::quantizer::p_qia_all_sectors(crb, 16).unwrap();
        assert!(
            (sim / pred - 1.0).abs() < 0.2,
            "sim {sim} vs predicted {pred}"
        );
    }
}
