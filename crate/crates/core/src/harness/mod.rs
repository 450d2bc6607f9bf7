//! Experiment runner: configuration, desk scaling, the sweeps behind each
//! figure and table, and CSV output.
//!
//! Every trial draws from `SeedTree(seed).child(grid point).child(trial)`,
//! so results do not depend on the number of worker threads.

pub mod config;
pub mod experiments;
pub mod output;
pub mod scale;

pub use config::{ExperimentConfig, ExperimentId};
pub use experiments::{bound_config, monte_carlo, run_experiment, session_config};
pub use output::{manifest, write_outputs, ResultRow, ResultSet};
pub use scale::{scale_config, DeskScale, PhysicalConstants};
