//! Experiment harness, file formats and CLI plumbing for the consensus
//! intrusion-detection simulator in [`nids_core`].

pub mod config;
pub mod data;
pub mod error;
pub mod export;
pub mod harness;

pub use config::{AttackTemplate, DataSource, ExperimentConfig, Mitigation, TopologySpec};
pub use error::HarnessError;
pub use harness::{
    bench, compare_convergence, decide, run_experiment, run_phase_protocol, Decision, Metrics,
    PhaseRecord,
};
