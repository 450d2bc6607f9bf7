//! Cooperative physical-layer secret-key generation in narrowband Rayleigh
//! fading: channel and beacon simulation, tone estimation, quantization,
//! the relay-assisted protocol, reconciliation, key-rate bounds, randomness
//! tests and an experiment harness.

pub mod beacon;
pub mod bits;
pub mod bounds;
pub mod error;
pub mod estimator;
pub mod fading;
pub mod harness;
pub mod protocol;
pub mod quantizer;
pub mod randomness;
pub mod reconciliation;
pub mod rng;
pub mod stats;

pub use beacon::{BeaconSpec, SampleVector};
pub use bits::BitVector;
pub use bounds::{BoundConfig, BoundReport};
pub use error::{Error, Result};
pub use estimator::{CrbReport, EstimatorConfig, PhaseEstimate, ToneEstimator};
pub use fading::{ChannelModel, ChannelParams, ChannelRealization, NoiseParams};
pub use harness::{ExperimentConfig, ExperimentId, ResultSet};
pub use protocol::{FinalKey, KeyShares, Node, PublicTranscript, Role, Session, SessionConfig};
pub use quantizer::QuantizerConfig;
pub use randomness::TestReport;
pub use reconciliation::{Code, ReconcileConfig, SecureSketch};
pub use rng::{SeedTree, SimRng, Stream};
