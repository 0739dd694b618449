//! Max-degree weights and the synchronous dual-channel consensus phase.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

use crate::attacks::{apply_attack, AttackModel, Channel};
use crate::topology::{DisconnectionReport, Graph, NodeId, Removal, TopologyError};

/// Doubly stochastic consensus weights built with the max-degree rule.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    dense: Vec<f64>,
    // nonzero entries per row, ascending column, diagonal included
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    /// `1/(d+1)` on every edge and `1 - d_i/(d+1)` on the diagonal, where `d`
    /// is the largest degree in `g`.
    pub fn max_degree(g: &Graph) -> Self {
        let n = g.node_count();
        let denom = (g.max_degree() + 1) as f64;
        let edge = 1.0 / denom;
        let mut dense = vec![0.0; n * n];
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let self_weight = 1.0 - g.degree(i) as f64 / denom;
            dense[i * n + i] = self_weight;
            let mut row = Vec::with_capacity(g.degree(i) + 1);
            let mut placed_self = false;
            for &j in g.neighbors(i) {
                if !placed_self && j > i {
                    row.push((i, self_weight));
                    placed_self = true;
                }
                dense[i * n + j] = edge;
                row.push((j, edge));
            }
            if !placed_self {
                row.push((i, self_weight));
            }
            rows.push(row);
        }
        Self { n, dense, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dense[i * self.n + j]
    }

    /// Row `i` as a dense slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.dense[i * self.n..(i + 1) * self.n]
    }

    /// Nonzero `(column, weight)` pairs of row `i`.
    pub fn sparse_row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Row-major `n × n` entries.
    pub fn entries(&self) -> &[f64] {
        &self.dense
    }

    /// `(W·x)_i`
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].iter().map(|&(j, w)| w * x[j]).sum()
    }

    /// Writes `W·x` into `out`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n, "state length does not match W");
        assert_eq!(out.len(), self.n, "output length does not match W");
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(i, x);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(x, &mut out);
        out
    }
}

pub fn build_max_degree_weights(g: &Graph) -> WeightMatrix {
    WeightMatrix::max_degree(g)
}

/// One synchronous update `W·x + u`.
///
/// # Panics
///
/// If `x` or `u` does not have `w.n()` entries.
pub fn consensus_step(w: &WeightMatrix, x: &[f64], u: &[f64]) -> Vec<f64> {
    assert_eq!(u.len(), w.n(), "input length does not match W");
    let mut out = w.apply(x);
    for (o, ui) in out.iter_mut().zip(u) {
        *o += ui;
    }
    out
}

/// Indices a node can see: its neighbors and itself, ascending.
pub fn observed_set(g: &Graph, i: usize) -> Vec<usize> {
    let mut set = Vec::with_capacity(g.degree(i) + 1);
    set.extend(g.neighbors(i).iter().copied().filter(|&j| j < i));
    set.push(i);
    set.extend(g.neighbors(i).iter().copied().filter(|&j| j > i));
    set
}

/// The local measurement of node `i`: `x_j` for every `j` in its closed
/// neighborhood, in ascending index order.
pub fn observation(g: &Graph, i: NodeId, x: &[f64]) -> Vec<f64> {
    observed_set(g, i.0).into_iter().map(|j| x[j]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum DisconnectPolicy {
    /// Fail the phase if a removal splits the network.
    Abort,
    /// Continue on the largest remaining component; the rest drop out.
    #[default]
    KeepLargest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub disconnect: DisconnectPolicy,
    /// Cap on removals per phase; `None` lets detection keep running after a
    /// removal, which matters when the first verdict named an honest node.
    pub max_removals: Option<usize>,
    pub record_trajectory: bool,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            max_iter: 10_000,
            disconnect: DisconnectPolicy::default(),
            max_removals: None,
            record_trajectory: false,
        }
    }
}

impl PhaseConfig {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<(), PhaseError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(PhaseError::InvalidConfig("epsilon must be positive and finite".into()));
        }
        if self.max_iter == 0 {
            return Err(PhaseError::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseError {
    InvalidConfig(String),
    DimensionMismatch { expected: usize, found: usize },
    Disconnected { iteration: usize, report: DisconnectionReport },
    Topology(TopologyError),
}

impl fmt::Display for PhaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidConfig(msg) => write!(f, "invalid phase configuration: {msg}"),
            Self::DimensionMismatch { expected, found } => {
                write!(f, "expected {expected} initial states, got {found}")
            }
            Self::Disconnected { iteration, report } => write!(
                f,
                "removing node {} at iteration {iteration} split the network into {} parts",
                report.removed,
                report.components.len()
            ),
            Self::Topology(e) => write!(f, "topology error: {e}"),
        }
    }
}

impl core::error::Error for PhaseError {}

impl From<TopologyError> for PhaseError {
    fn from(e: TopologyError) -> Self {
        Self::Topology(e)
    }
}

/// Node states at iteration `t` on both channels, with the previous iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub t: usize,
    pub x_attack: Vec<f64>,
    pub x_normal: Vec<f64>,
    pub prev_attack: Vec<f64>,
    pub prev_normal: Vec<f64>,
    pub converged_attack: Vec<bool>,
    pub converged_normal: Vec<bool>,
}

impl PhaseState {
    pub fn new(x_attack: Vec<f64>, x_normal: Vec<f64>) -> Self {
        let n = x_attack.len();
        Self {
            t: 0,
            prev_attack: x_attack.clone(),
            prev_normal: x_normal.clone(),
            x_attack,
            x_normal,
            converged_attack: vec![false; n],
            converged_normal: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.x_attack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_attack.is_empty()
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        match c {
            Channel::Attack => &self.x_attack,
            Channel::Normal => &self.x_normal,
        }
    }

    /// Every node has settled on both channels.
    pub fn all_converged(&self) -> bool {
        self.converged_attack.iter().all(|&c| c) && self.converged_normal.iter().all(|&c| c)
    }

    /// Installs `x(t+1)` from the `next_*` buffers and refreshes the per-node
    /// stopping flags. The buffers get back the storage of `x(t-1)`.
    fn advance(&mut self, next_attack: &mut Vec<f64>, next_normal: &mut Vec<f64>, epsilon: f64) {
        let flag = |next: &[f64], cur: &[f64], out: &mut Vec<bool>| {
            out.clear();
            out.extend(next.iter().zip(cur).map(|(a, b)| (a - b).abs() < epsilon));
        };
        flag(next_attack, &self.x_attack, &mut self.converged_attack);
        flag(next_normal, &self.x_normal, &mut self.converged_normal);
        core::mem::swap(&mut self.prev_attack, &mut self.x_attack);
        core::mem::swap(&mut self.x_attack, next_attack);
        core::mem::swap(&mut self.prev_normal, &mut self.x_normal);
        core::mem::swap(&mut self.x_normal, next_normal);
        self.t += 1;
    }

    fn retain(&mut self, keep: &[usize]) {
        for v in [
            &mut self.x_attack,
            &mut self.x_normal,
            &mut self.prev_attack,
            &mut self.prev_normal,
        ] {
            *v = keep.iter().map(|&i| v[i]).collect();
        }
        for v in [&mut self.converged_attack, &mut self.converged_normal] {
            *v = keep.iter().map(|&i| v[i]).collect();
        }
    }
}

/// What a mitigation sees at iteration `t`.
#[derive(Debug, Clone, Copy)]
pub struct PhaseView<'a> {
    pub graph: &'a Graph,
    pub weights: &'a WeightMatrix,
    pub state: &'a PhaseState,
}

impl PhaseView<'_> {
    pub fn t(&self) -> usize {
        self.state.t
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        self.state.channel(c)
    }
}

/// A detector that runs alongside the consensus loop.
pub trait MitigationHook {
    /// Called before the first iteration and again after every removal, with
    /// the rebuilt graph and weights.
    fn reset(&mut self, view: &PhaseView<'_>);

    /// Looks at `x(t)` and optionally names a node (current index) to cut off.
    fn inspect(&mut self, view: &PhaseView<'_>) -> Option<usize>;

    /// Lets a mitigation replace the plain `W·x` update for one channel by
    /// writing every node's next value into `out`. Returns whether it did.
    fn honest_update(&mut self, _view: &PhaseView<'_>, _channel: Channel, _out: &mut [f64]) -> bool {
        false
    }
}

/// Monotonic time source; `now` is measured from an arbitrary fixed origin.
pub trait Clock {
    fn now(&self) -> Duration;
}

/// Clock for environments without a timer; every phase takes zero time.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}

/// A removal requested by a mitigation, in terms of initial-topology labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub iteration: usize,
    pub node: NodeId,
}

/// States of all live nodes at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: usize,
    pub labels: Vec<usize>,
    pub attack: Vec<f64>,
    pub normal: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseResult {
    /// Consensus steps executed.
    pub iterations: usize,
    /// Whether the stopping rule was met before `max_iter`.
    pub converged: bool,
    pub final_attack_avg: f64,
    pub final_normal_avg: f64,
    /// Labels of the nodes still in the network at the end.
    pub labels: Vec<usize>,
    pub final_attack: Vec<f64>,
    pub final_normal: Vec<f64>,
    /// Every removal a mitigation asked for, in order.
    pub removals: Vec<Detection>,
    /// Nodes cut off because a removal split the network.
    pub dropped: Vec<usize>,
    pub elapsed: Duration,
    pub trajectory: Option<Vec<TraceSample>>,
}

impl PhaseResult {
    /// The first verdict, if any mitigation fired.
    pub fn detection(&self) -> Option<Detection> {
        self.removals.first().copied()
    }

    pub fn removed(&self) -> Option<NodeId> {
        self.detection().map(|d| d.node)
    }
}

/// Runs one consensus phase on both channels.
///
/// Iterates until every node moved less than `cfg.epsilon` on both channels
/// or `cfg.max_iter` steps were taken. The attacker's transmitted state is
/// rewritten every iteration by [`apply_attack`]. A mitigation inspects each
/// iterate and may cut a node off; the weights are then rebuilt on the
/// surviving graph and the loop continues from the current states.
pub fn run_phase(
    graph: &Graph,
    x0_attack: &[f64],
    x0_normal: &[f64],
    cfg: &PhaseConfig,
    attacker: Option<&AttackModel>,
    mut mitigation: Option<&mut dyn MitigationHook>,
    clock: &dyn Clock,
) -> Result<PhaseResult, PhaseError> {
    cfg.validate()?;
    let n = graph.node_count();
    for len in [x0_attack.len(), x0_normal.len()] {
        if len != n {
            return Err(PhaseError::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let started = clock.now();

    let mut graph = graph.clone();
    let mut weights = WeightMatrix::max_degree(&graph);
    let mut state = PhaseState::new(x0_attack.to_vec(), x0_normal.to_vec());
    let mut target = attacker.and_then(|a| graph.index_of_label(a.target.0));
    if let (Some(model), Some(j)) = (attacker, target) {
        state.x_attack[j] = apply_attack(model, 0, state.x_attack[j], Channel::Attack);
        state.x_normal[j] = apply_attack(model, 0, state.x_normal[j], Channel::Normal);
        state.prev_attack.clone_from(&state.x_attack);
        state.prev_normal.clone_from(&state.x_normal);
    }

    let mut removals = Vec::new();
    let mut dropped = Vec::new();
    let mut trajectory = cfg.record_trajectory.then(Vec::new);
    let record = |trace: &mut Option<Vec<TraceSample>>, g: &Graph, s: &PhaseState| {
        if let Some(trace) = trace {
            trace.push(TraceSample {
                t: s.t,
                labels: g.labels().to_vec(),
                attack: s.x_attack.clone(),
                normal: s.x_normal.clone(),
            });
        }
    };
    record(&mut trajectory, &graph, &state);

    if let Some(hook) = mitigation.as_deref_mut() {
        hook.reset(&PhaseView {
            graph: &graph,
            weights: &weights,
            state: &state,
        });
    }

    let mut next_attack = vec![0.0; n];
    let mut next_normal = vec![0.0; n];
    let mut converged = false;
    loop {
        let may_remove = cfg.max_removals.is_none_or(|cap| removals.len() < cap);
        if let (Some(hook), true) = (mitigation.as_deref_mut(), may_remove && graph.node_count() > 1) {
            let view = PhaseView {
                graph: &graph,
                weights: &weights,
                state: &state,
            };
            if let Some(v) = hook.inspect(&view) {
                let label = graph.label(v);
                removals.push(Detection {
                    iteration: state.t,
                    node: NodeId(label),
                });
                let keep: Vec<usize> = match graph.remove_node(NodeId(v))? {
                    Removal::Connected(_) => (0..graph.node_count()).filter(|&i| i != v).collect(),
                    Removal::Disconnected(report) => match cfg.disconnect {
                        DisconnectPolicy::Abort => {
                            return Err(PhaseError::Disconnected {
                                iteration: state.t,
                                report,
                            })
                        }
                        DisconnectPolicy::KeepLargest => {
                            for comp in &report.components[1..] {
                                dropped.extend_from_slice(comp);
                            }
                            let mut keep: Vec<usize> = report.components[0]
                                .iter()
                                .map(|&l| graph.index_of_label(l).expect("label from this graph"))
                                .collect();
                            keep.sort_unstable();
                            keep
                        }
                    },
                };
                graph = graph.induced(&keep)?;
                weights = WeightMatrix::max_degree(&graph);
                state.retain(&keep);
                target = attacker.and_then(|a| graph.index_of_label(a.target.0));
                next_attack.truncate(keep.len());
                next_normal.truncate(keep.len());
                hook.reset(&PhaseView {
                    graph: &graph,
                    weights: &weights,
                    state: &state,
                });
            }
        }

        if state.t >= cfg.max_iter {
            break;
        }

        for (channel, out) in [
            (Channel::Attack, &mut next_attack),
            (Channel::Normal, &mut next_normal),
        ] {
            let view = PhaseView {
                graph: &graph,
                weights: &weights,
                state: &state,
            };
            let custom = match mitigation.as_deref_mut() {
                Some(hook) => hook.honest_update(&view, channel, out),
                None => false,
            };
            if !custom {
                weights.apply_into(state.channel(channel), out);
            }
            if let (Some(model), Some(j)) = (attacker, target) {
                out[j] = apply_attack(model, state.t + 1, out[j], channel);
            }
        }
        state.advance(&mut next_attack, &mut next_normal, cfg.epsilon);
        record(&mut trajectory, &graph, &state);
        if state.all_converged() {
            converged = true;
            break;
        }
    }

    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(PhaseResult {
        iterations: state.t,
        converged,
        final_attack_avg: avg(&state.x_attack),
        final_normal_avg: avg(&state.x_normal),
        labels: graph.labels().to_vec(),
        final_attack: state.x_attack,
        final_normal: state.x_normal,
        removals,
        dropped,
        elapsed: clock.now().saturating_sub(started),
        trajectory,
    })
}
