//! Experiment configuration, read from JSON and overridable from the CLI.

use std::path::{Path, PathBuf};

use nids_core::attacks::{AttackKind, AttackModel};
use nids_core::classifier::{SyntheticConfig, TrainConfig};
use nids_core::consensus::{DisconnectPolicy, PhaseConfig};
use nids_core::observer::FaultConfig;
use nids_core::outlier::OutlierConfig;
use nids_core::topology::{self, Graph, NodeId};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TopologySpec {
    Ring { size: usize },
    Torus { rows: usize, cols: usize },
    Petersen,
    Random { nodes: usize, edges: usize },
}

impl TopologySpec {
    /// Builds the graph for one phase; `seed` only matters for random graphs.
    pub fn build(&self, seed: u64) -> Result<Graph, HarnessError> {
        let g = match *self {
            Self::Ring { size } => topology::build_ring(size),
            Self::Torus { rows, cols } => topology::build_torus(rows, cols),
            Self::Petersen => Ok(topology::build_petersen()),
            Self::Random { nodes, edges } => topology::build_random(nodes, edges, seed),
        };
        g.map_err(|e| HarnessError::Config(format!("topology {}: {e}", self.name())))
    }

    pub fn node_count(&self) -> usize {
        match *self {
            Self::Ring { size } => size,
            Self::Torus { rows, cols } => rows * cols,
            Self::Petersen => 10,
            Self::Random { nodes, .. } => nodes,
        }
    }

    /// Short name such as `ring-9` or `torus-3x3`.
    pub fn name(&self) -> String {
        match *self {
            Self::Ring { size } => format!("ring-{size}"),
            Self::Torus { rows, cols } => format!("torus-{rows}x{cols}"),
            Self::Petersen => "petersen".into(),
            Self::Random { nodes, edges } => format!("random-{nodes}-{edges}"),
        }
    }

    /// Parses the CLI form: `ring`, `torus`, `petersen` or `random`, with
    /// `size` meaning ring length, torus side, or random node count.
    pub fn from_cli(kind: &str, size: Option<usize>) -> Result<Self, HarnessError> {
        Ok(match kind {
            "ring" => Self::Ring {
                size: size.unwrap_or(9),
            },
            "torus" => {
                let side = size.unwrap_or(3);
                Self::Torus { rows: side, cols: side }
            }
            "petersen" => Self::Petersen,
            "random" => {
                let nodes = size.unwrap_or(10);
                Self::Random {
                    nodes,
                    edges: nodes * 3 / 2,
                }
            }
            other => return Err(HarnessError::Config(format!("unknown topology {other:?}"))),
        })
    }

    /// The six configurations used throughout the experiments.
    pub fn standard_set() -> Vec<Self> {
        vec![
            Self::Ring { size: 9 },
            Self::Ring { size: 25 },
            Self::Torus { rows: 3, cols: 3 },
            Self::Torus { rows: 5, cols: 5 },
            Self::Petersen,
            Self::Random { nodes: 10, edges: 15 },
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mitigation {
    #[default]
    None,
    Outlier,
    Fault,
    Soft,
}

impl Mitigation {
    pub const ALL: [Mitigation; 4] = [Mitigation::None, Mitigation::Outlier, Mitigation::Fault, Mitigation::Soft];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Outlier => "outlier",
            Self::Fault => "fault",
            Self::Soft => "soft",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown mitigation {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackForm {
    Additive,
    Constant,
    InitialState,
}

impl AttackForm {
    pub fn parse(s: &str) -> Result<Option<Self>, HarnessError> {
        Ok(Some(match s {
            "none" => return Ok(None),
            "additive" => Self::Additive,
            "constant" => Self::Constant,
            "initial-state" => Self::InitialState,
            other => return Err(HarnessError::Config(format!("unknown attack {other:?}"))),
        }))
    }
}

/// Attack behavior; the compromised node is drawn per phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackTemplate {
    pub form: AttackForm,
    /// Additive input on the attack channel, constant value, or initial shift.
    pub magnitude: f64,
    /// Additive input on the normal channel.
    #[serde(default)]
    pub normal_magnitude: f64,
    #[serde(default)]
    pub start_iteration: usize,
}

impl AttackTemplate {
    pub fn additive(magnitude: f64) -> Self {
        Self {
            form: AttackForm::Additive,
            magnitude,
            normal_magnitude: 0.0,
            start_iteration: 0,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            form: AttackForm::Constant,
            ..Self::additive(value)
        }
    }

    pub fn instantiate(&self, target: NodeId) -> AttackModel {
        let kind = match self.form {
            AttackForm::Additive => AttackKind::AdditiveDisruption {
                u_attack: self.magnitude,
                u_normal: self.normal_magnitude,
            },
            AttackForm::Constant => AttackKind::ConstantTransmission { value: self.magnitude },
            AttackForm::InitialState => AttackKind::InitialStateFalsification { delta: self.magnitude },
        };
        AttackModel {
            kind,
            target,
            start_iteration: self.start_iteration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic {
        #[serde(default, flatten)]
        margins: SyntheticConfig,
    },
    NslKdd {
        path: PathBuf,
        /// Pre-trained model; trained from `path` when absent.
        #[serde(default)]
        model: Option<PathBuf>,
        #[serde(default = "yes")]
        dos_only: bool,
        #[serde(default)]
        train: TrainConfig,
    },
}

fn yes() -> bool {
    true
}

impl Default for DataSource {
    fn default() -> Self {
        Self::Synthetic {
            margins: SyntheticConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(HarnessError::Config(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    pub mitigation: Mitigation,
    pub attack: Option<AttackTemplate>,
    pub phases: usize,
    pub epsilon: f64,
    pub max_iter: usize,
    pub alert_value: f64,
    /// Probability that a phase carries attack traffic.
    pub attack_probability: f64,
    pub data: DataSource,
    pub seed: u64,
    pub outlier: OutlierConfig,
    pub fault: FaultConfig,
    pub disconnect: DisconnectPolicy,
    /// Removals allowed per phase; unlimited when absent.
    pub max_removals: Option<usize>,
    /// Run phases on all cores. Timing figures are only comparable when false.
    pub parallel: bool,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            topology: TopologySpec::Ring { size: 9 },
            mitigation: Mitigation::None,
            attack: None,
            phases: 1000,
            epsilon: 1e-6,
            max_iter: 10_000,
            alert_value: 1.0,
            attack_probability: 0.5,
            data: DataSource::default(),
            seed: 0,
            outlier: OutlierConfig::default(),
            fault: FaultConfig::default(),
            disconnect: DisconnectPolicy::default(),
            max_removals: None,
            parallel: true,
            output: None,
            format: OutputFormat::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn phase_config(&self) -> PhaseConfig {
        PhaseConfig {
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            disconnect: self.disconnect,
            max_removals: self.max_removals,
            record_trajectory: false,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.phases == 0 {
            return bad("phases must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.alert_value > 0.0 && self.alert_value.is_finite()) {
            return bad(format!("alert_value must be positive, got {}", self.alert_value));
        }
        if !(0.0..=1.0).contains(&self.attack_probability) {
            return bad(format!("attack_probability must lie in [0, 1], got {}", self.attack_probability));
        }
        if self.topology.node_count() < 2 {
            return bad("topology needs at least two nodes".into());
        }
        self.topology.build(0)?;
        if let Some(a) = &self.attack {
            if !(a.magnitude.is_finite() && a.normal_magnitude.is_finite()) {
                return bad("attack magnitudes must be finite".into());
            }
        }
        let o = &self.outlier;
        // written so that NaN fails every check
        let above = |v: f64, floor: f64| v > floor;
        if !above(o.beta, 0.0) || !above(o.a, 1.0) || o.gain.is_some_and(|g| !above(g, 0.0)) {
            return bad("outlier knobs need beta > 0, a > 1 and gain > 0".into());
        }
        if !(0.0..1.0).contains(&o.decay_tolerance) {
            return bad("outlier decay_tolerance must lie in [0, 1)".into());
        }
        if !above(self.fault.tau, 0.0) || self.fault.persistence == 0 {
            return bad("fault knobs need tau > 0 and persistence >= 1".into());
        }
        if let DataSource::Synthetic { margins } = &self.data {
            margins.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        Ok(())
    }
}
