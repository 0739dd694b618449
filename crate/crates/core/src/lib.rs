//! Consensus-based distributed intrusion detection under Byzantine data falsification.
//!
//! Each NIDS module holds a pair of log-likelihoods (attack / normal traffic)
//! and the network fuses them by synchronous average consensus. One module
//! may lie while the loop runs; two detectors are provided to find and cut it
//! out: an adaptive-threshold outlier vote ([`outlier`]) and per-node
//! model-based observers ([`observer`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! harness and the CLI live in the `consensus-nids` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attacks;
pub mod classifier;
pub mod consensus;
pub mod observer;
pub mod outlier;
pub mod topology;

pub use attacks::{apply_attack, select_target, AttackKind, AttackModel, Channel};
pub use consensus::{
    build_max_degree_weights, consensus_step, observation, run_phase, Clock, Detection,
    DisconnectPolicy, MitigationHook, NoClock, PhaseConfig, PhaseError, PhaseResult, PhaseState,
    PhaseView, WeightMatrix,
};
pub use topology::{Graph, NodeId, Removal, TopologyError};
