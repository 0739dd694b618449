//! Behaviors of a compromised module during a consensus phase.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::topology::NodeId;

/// The two likelihood loops run side by side in every phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Channel {
    Attack,
    Normal,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Attack, Channel::Normal];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Attack => "attack",
            Channel::Normal => "normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kind", rename_all = "snake_case")
)]
pub enum AttackKind {
    /// Sends `value` on both channels no matter what its neighbors say.
    ConstantTransmission { value: f64 },
    /// Adds a fixed input to its own update every iteration.
    AdditiveDisruption {
        u_attack: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        u_normal: f64,
    },
    /// Reports a shifted initial reading on the attack channel, then behaves.
    InitialStateFalsification { delta: f64 },
}

/// A single lying module.
///
/// `target` is the node's label in the initial topology, so it keeps naming
/// the same module after other nodes have been removed.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackModel {
    pub kind: AttackKind,
    pub target: NodeId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub start_iteration: usize,
}

impl AttackModel {
    pub fn new(kind: AttackKind, target: NodeId) -> Self {
        Self {
            kind,
            target,
            start_iteration: 0,
        }
    }

    pub fn additive(u_attack: f64, target: NodeId) -> Self {
        Self::new(
            AttackKind::AdditiveDisruption {
                u_attack,
                u_normal: 0.0,
            },
            target,
        )
    }

    pub fn constant(value: f64, target: NodeId) -> Self {
        Self::new(AttackKind::ConstantTransmission { value }, target)
    }

    pub fn is_finite(&self) -> bool {
        match self.kind {
            AttackKind::ConstantTransmission { value } => value.is_finite(),
            AttackKind::AdditiveDisruption { u_attack, u_normal } => {
                u_attack.is_finite() && u_normal.is_finite()
            }
            AttackKind::InitialStateFalsification { delta } => delta.is_finite(),
        }
    }
}

/// Value the attacker transmits as its state `x(t)` on `channel`.
///
/// `honest_next` is what the attacker would hold if it followed the protocol:
/// its reading at `t = 0`, its consensus update afterwards. The additive
/// input injected during the step from `t - 1` shows up in `x(t)`, so it is
/// active for `t > start_iteration`; a constant is sent from `start_iteration`
/// on; an initial-state shift touches only `x(0)`.
pub fn apply_attack(model: &AttackModel, t: usize, honest_next: f64, channel: Channel) -> f64 {
    let start = model.start_iteration;
    match model.kind {
        AttackKind::ConstantTransmission { value } if t >= start => value,
        AttackKind::AdditiveDisruption { u_attack, u_normal } if t > start => {
            honest_next
                + match channel {
                    Channel::Attack => u_attack,
                    Channel::Normal => u_normal,
                }
        }
        AttackKind::InitialStateFalsification { delta } if t == 0 && channel == Channel::Attack => {
            honest_next + delta
        }
        _ => honest_next,
    }
}

/// Uniformly random compromised module among `n`, reproducible per seed.
pub fn select_target(n: usize, seed: u64) -> NodeId {
    assert!(n >= 1, "select_target needs at least one node");
    select_target_with(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

pub fn select_target_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> NodeId {
    NodeId(rng.random_range(0..n))
}
