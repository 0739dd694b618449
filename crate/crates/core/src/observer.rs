//! Observer-based fault detection.
//!
//! Node `i` sees its closed neighborhood `y_i = C_i x` and knows `W`, so it can
//! run a copy of the whole network alongside the real one:
//!
//! ```text
//! z(t+1)  = (W + G C_i) z(t) - G y_i(t)
//! x^o(t)  = L z(t) + K y_i(t)
//! ```
//!
//! with `G = -W C_iᵀ`, `K = C_iᵀ` and `L = I - K C_i`. The update is the same
//! as `z(t+1) = W x^o(t)`. Without external inputs `x^o(t+1) - W x^o(t)`
//! vanishes; a neighbor that adds `u` to its own update leaves `u` in that
//! entry.

use alloc::vec;
use alloc::vec::Vec;

use crate::attacks::Channel;
use crate::consensus::{observed_set, MitigationHook, PhaseView, WeightMatrix};
use crate::topology::{Graph, NodeId};

/// Row-major dense matrix, just enough for the observer algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        self.data
            .chunks_exact(self.cols.max(1))
            .take(self.rows)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matrix dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        out
    }
}

/// How the unobserved part of an observer's state starts out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum ObserverInit {
    /// Start from the network state itself, as if every node had shared its
    /// initial reading before the loop began.
    #[default]
    Synchronized,
    /// Unobserved entries start at zero.
    Zero,
    /// Unobserved entries start at the mean of the node's own observation.
    ObservedMean,
}

/// Full-state observer run by one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Observer {
    node: usize,
    observed: Vec<usize>,
    in_view: Vec<bool>,
    c: Matrix,
    g: Matrix,
    k: Matrix,
    l: Matrix,
    z: Vec<f64>,
    x_o: Vec<f64>,
}

/// Builds the observer of node `i` with `z = 0`; see [`Observer::initialize`].
pub fn build_observer(w: &WeightMatrix, g: &Graph, i: NodeId) -> Observer {
    let n = g.node_count();
    let observed = observed_set(g, i.0);
    let m = observed.len();
    let mut c = Matrix::zeros(m, n);
    let mut gm = Matrix::zeros(n, m);
    let mut k = Matrix::zeros(n, m);
    let mut l = Matrix::identity(n);
    let mut in_view = vec![false; n];
    for (row, &j) in observed.iter().enumerate() {
        c.set(row, j, 1.0);
        k.set(j, row, 1.0);
        l.set(j, j, 0.0);
        in_view[j] = true;
        for r in 0..n {
            gm.set(r, row, -w.get(r, j));
        }
    }
    Observer {
        node: i.0,
        observed,
        in_view,
        c,
        g: gm,
        k,
        l,
        z: vec![0.0; n],
        x_o: vec![0.0; n],
    }
}

impl Observer {
    pub fn node(&self) -> usize {
        self.node
    }

    /// Closed neighborhood of the observing node, ascending.
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    pub fn sees(&self, j: usize) -> bool {
        self.in_view[j]
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn g(&self) -> &Matrix {
        &self.g
    }

    pub fn k(&self) -> &Matrix {
        &self.k
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// The most recent state estimate `x^o(t)`.
    pub fn estimate(&self) -> &[f64] {
        &self.x_o
    }

    /// Sets `z(0)` from the current network state `x`.
    pub fn initialize(&mut self, init: ObserverInit, x: &[f64]) {
        match init {
            ObserverInit::Synchronized => self.z.copy_from_slice(x),
            ObserverInit::Zero => self.z.fill(0.0),
            ObserverInit::ObservedMean => {
                let mean = self.observed.iter().map(|&j| x[j]).sum::<f64>() / self.observed.len() as f64;
                self.z.fill(mean);
            }
        }
        for &j in &self.observed {
            self.z[j] = x[j];
        }
        self.x_o.copy_from_slice(&self.z);
    }

    /// One step in matrix form. Consumes `y_i(t)`, stores `x^o(t)` and
    /// `z(t+1)`, and returns both.
    pub fn step(&mut self, y: &[f64], w: &WeightMatrix) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(y.len(), self.observed.len(), "observation length mismatch");
        let n = self.z.len();
        let lz = self.l.mul_vec(&self.z);
        let ky = self.k.mul_vec(y);
        let x_o: Vec<f64> = lz.iter().zip(&ky).map(|(a, b)| a + b).collect();
        let mut system = Matrix::zeros(n, n);
        system.data.copy_from_slice(w.entries());
        let gc = self.g.mul(&self.c);
        for (s, v) in system.data.iter_mut().zip(&gc.data) {
            *s += v;
        }
        let sz = system.mul_vec(&self.z);
        let gy = self.g.mul_vec(y);
        let z_next: Vec<f64> = sz.iter().zip(&gy).map(|(a, b)| a - b).collect();
        self.x_o.clone_from(&x_o);
        self.z.clone_from(&z_next);
        (z_next, x_o)
    }

    /// Same update written as `x^o(t) = z(t)` with observed entries replaced
    /// by `y_i(t)`, then `z(t+1) = W x^o(t)`. Takes the full state and reads
    /// only the observed entries.
    pub fn step_structured(&mut self, x: &[f64], w: &WeightMatrix) -> (Vec<f64>, Vec<f64>) {
        self.x_o.clone_from(&self.z);
        for &j in &self.observed {
            self.x_o[j] = x[j];
        }
        w.apply_into(&self.x_o, &mut self.z);
        (self.z.clone(), self.x_o.clone())
    }

    /// Structured step that writes `|x^o(t) - z(t)|` into `res` instead of
    /// allocating; `res` is the residual of the previous step.
    fn advance(&mut self, x: &[f64], w: &WeightMatrix, res: &mut [f64]) {
        res.fill(0.0);
        for &j in &self.observed {
            res[j] = (x[j] - self.z[j]).abs();
        }
        self.x_o.copy_from_slice(&self.z);
        for &j in &self.observed {
            self.x_o[j] = x[j];
        }
        w.apply_into(&self.x_o, &mut self.z);
    }
}

/// Matrix-form observer update; see [`Observer::step`].
pub fn observer_step(entry: &mut Observer, y: &[f64], w: &WeightMatrix) -> (Vec<f64>, Vec<f64>) {
    entry.step(y, w)
}

/// `|x^o(t+1) - W x^o(t)|` for one observer at iteration `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub values: Vec<f64>,
    pub iteration: usize,
}

pub fn residual(x_o_next: &[f64], w: &WeightMatrix, x_o: &[f64], iteration: usize) -> Residual {
    let predicted = w.apply(x_o);
    Residual {
        values: x_o_next.iter().zip(&predicted).map(|(a, b)| (a - b).abs()).collect(),
        iteration,
    }
}

/// Consecutive-exceedance counters, one per residual entry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResidualHistory {
    runs: Vec<usize>,
}

impl ResidualHistory {
    pub fn new(n: usize) -> Self {
        Self { runs: vec![0; n] }
    }

    pub fn clear(&mut self) {
        self.runs.fill(0);
    }
}

/// Names the entry that stayed above `tau` for `persistence` consecutive
/// residuals, preferring the largest current residual if several did.
pub fn detect(res: &Residual, tau: f64, persistence: usize, history: &mut ResidualHistory) -> Option<usize> {
    detect_values(&res.values, tau, persistence, history)
}

fn detect_values(values: &[f64], tau: f64, persistence: usize, history: &mut ResidualHistory) -> Option<usize> {
    if history.runs.len() != values.len() {
        history.runs = vec![0; values.len()];
    }
    let mut best: Option<(usize, f64)> = None;
    for (j, (&v, run)) in values.iter().zip(history.runs.iter_mut()).enumerate() {
        *run = if v > tau { *run + 1 } else { 0 };
        if *run >= persistence && best.is_none_or(|(_, b)| v > b) {
            best = Some((j, v));
        }
    }
    best.map(|(j, _)| j)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct FaultConfig {
    pub tau: f64,
    pub persistence: usize,
    pub init: ObserverInit,
    pub trace: bool,
}

impl Default for FaultConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            persistence: 3,
            init: ObserverInit::default(),
            trace: false,
        }
    }
}

/// One nonzero-capable residual entry for debugging dumps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub t: usize,
    pub channel: Channel,
    pub observer: usize,
    pub subject: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
struct Bank {
    observers: Vec<Observer>,
    histories: Vec<ResidualHistory>,
    residuals: Vec<Vec<f64>>,
}

/// Every node runs an observer on each channel; the first persistent
/// residual anywhere names the node to remove.
#[derive(Debug, Clone)]
pub struct FaultDetector {
    cfg: FaultConfig,
    banks: Vec<Bank>,
    // iteration whose state the observers have already consumed
    consumed: Option<usize>,
    labels: Vec<usize>,
    trace: Vec<ResidualSample>,
}

impl FaultDetector {
    pub fn new(cfg: FaultConfig) -> Self {
        Self {
            cfg,
            banks: Vec::new(),
            consumed: None,
            labels: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn config(&self) -> &FaultConfig {
        &self.cfg
    }

    pub fn observers(&self, channel: Channel) -> &[Observer] {
        &self.banks[channel as usize].observers
    }

    /// Latest residual of each observer on `channel` (all zero right after a reset).
    pub fn residuals(&self, channel: Channel) -> &[Vec<f64>] {
        &self.banks[channel as usize].residuals
    }

    pub fn trace(&self) -> &[ResidualSample] {
        &self.trace
    }
}

impl MitigationHook for FaultDetector {
    fn reset(&mut self, view: &PhaseView<'_>) {
        let g = view.graph;
        let n = g.node_count();
        self.labels = g.labels().to_vec();
        self.consumed = Some(view.t());
        self.banks = Channel::BOTH
            .iter()
            .map(|&c| {
                let x = view.channel(c);
                let observers = (0..n)
                    .map(|i| {
                        let mut o = build_observer(view.weights, g, NodeId(i));
                        o.initialize(self.cfg.init, x);
                        // consume x(t) so the next residual compares x(t+1)
                        o.advance(x, view.weights, &mut vec![0.0; n]);
                        o
                    })
                    .collect();
                Bank {
                    observers,
                    histories: vec![ResidualHistory::new(n); n],
                    residuals: vec![vec![0.0; n]; n],
                }
            })
            .collect();
    }

    fn inspect(&mut self, view: &PhaseView<'_>) -> Option<usize> {
        if self.consumed.replace(view.t()) == Some(view.t()) {
            return None;
        }
        let mut fired: Option<(usize, f64)> = None;
        for channel in Channel::BOTH {
            let x = view.channel(channel);
            let bank = &mut self.banks[channel as usize];
            for (i, obs) in bank.observers.iter_mut().enumerate() {
                let res = &mut bank.residuals[i];
                obs.advance(x, view.weights, res);
                // a node does not accuse itself
                res[i] = 0.0;
                if self.cfg.trace {
                    for &j in obs.observed() {
                        self.trace.push(ResidualSample {
                            t: view.t() - 1,
                            channel,
                            observer: self.labels[i],
                            subject: self.labels[j],
                            value: res[j],
                        });
                    }
                }
                if let Some(j) = detect_values(res, self.cfg.tau, self.cfg.persistence, &mut bank.histories[i]) {
                    let v = res[j];
                    if fired.is_none_or(|(_, b)| v > b) {
                        fired = Some((j, v));
                    }
                }
            }
        }
        fired.map(|(j, _)| j)
    }
}
