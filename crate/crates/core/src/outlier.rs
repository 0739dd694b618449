//! Adaptive-threshold outlier detection.
//!
//! Every node keeps a threshold that shrinks with the spread of its
//! neighborhood: each iteration it is rescaled by the ratio of successive
//! sums of neighbor deviations. Neighbors further away than the threshold are
//! flagged, and a node flagged by a strict majority of its voters becomes a
//! removal candidate.
//!
//! A threshold that tracks the neighborhood spread is scale-free, so a
//! snapshot alone cannot tell an attacker from an honest node that happens
//! to sit on a steep part of the consensus profile. [`OutlierDetector`]
//! therefore only confirms a candidate that wins for several consecutive
//! iterations while its deviation holds up, which an honest outlier cannot
//! do because consensus keeps shrinking it.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::attacks::Channel;
use crate::consensus::{MitigationHook, PhaseView};
use crate::topology::Graph;

/// Sums of neighbor deviations below this hold the threshold instead of rescaling it.
pub const DEGENERATE_SUM: f64 = 1e-12;

/// Who gets to vote on whether node `j` is lying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum VoterPolicy {
    /// All neighbors of `j`; a strict majority of them must flag it.
    #[default]
    AttackerNeighborhood,
    /// For an accuser `i`: the common neighbors of `i` and `j` plus `i`
    /// itself, needing more than `ceil(B/2)` flags with `B` the number of
    /// common neighbors.
    CommonNeighborsPlusSelf,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct OutlierConfig {
    /// Initial threshold as a multiple of the mean initial neighbor deviation.
    pub beta: f64,
    pub policy: VoterPolicy,
    /// Require every voter to see the candidate on the same side of itself.
    pub coherent: bool,
    /// A candidate must stay on top for `window + 1` consecutive iterations.
    pub window: usize,
    /// Allowed relative shrinkage of the candidate's deviation over the window.
    pub decay_tolerance: f64,
    /// Tally the flags raised one iteration earlier instead of the current ones.
    pub delayed_exchange: bool,
    /// Weight on trusted neighbors in the soft update; `None` means `1/(d+1)`.
    pub gain: Option<f64>,
    /// Suspicious neighbors get weight `gain / a`.
    pub a: f64,
    pub trace: bool,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            policy: VoterPolicy::default(),
            coherent: true,
            window: 10,
            decay_tolerance: 0.05,
            delayed_exchange: false,
            gain: None,
            a: 2.0,
            trace: false,
        }
    }
}

/// Per-node thresholds and suspicion flags for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierState {
    pub lambda: Vec<f64>,
    /// `Σ_j |x_j - x_i|` over the neighbors of `i` at the last update.
    pub prev_deviation_sum: Vec<f64>,
    /// Neighbors each node currently flags, ascending.
    pub flags: Vec<Vec<usize>>,
}

fn deviation_sum(g: &Graph, x: &[f64], i: usize) -> f64 {
    g.neighbors(i).iter().map(|&j| (x[j] - x[i]).abs()).sum()
}

/// Thresholds at the start of a phase: `beta` times each node's mean
/// absolute deviation from its neighbors, or `beta` if that mean is zero.
pub fn init_thresholds(x0: &[f64], g: &Graph, beta: f64) -> OutlierState {
    let n = g.node_count();
    let mut lambda = Vec::with_capacity(n);
    let mut sums = Vec::with_capacity(n);
    for i in 0..n {
        let sum = deviation_sum(g, x0, i);
        let mean = if g.degree(i) == 0 { 0.0 } else { sum / g.degree(i) as f64 };
        lambda.push(if mean > 0.0 { beta * mean } else { beta });
        sums.push(sum);
    }
    OutlierState {
        lambda,
        prev_deviation_sum: sums,
        flags: vec![Vec::new(); n],
    }
}

/// Rescales a threshold by the ratio of the new to the old deviation sum.
pub fn update_threshold(lambda: f64, dev_sum_t: f64, dev_sum_t1: f64) -> f64 {
    if dev_sum_t < DEGENERATE_SUM {
        lambda
    } else {
        dev_sum_t1 / dev_sum_t * lambda
    }
}

/// Relative slack on the flag comparison. A node with one neighbor has a
/// threshold equal to its only deviation up to rounding, and without slack
/// the flag would flip between iterations on the last bit.
pub const FLAG_SLACK: f64 = 1e-9;

/// Neighbors whose value is at least `lambda` away from `x_i`.
pub fn flag_suspicious(x_i: f64, neighbor_values: &[(usize, f64)], lambda: f64) -> Vec<usize> {
    let cut = lambda * (1.0 - FLAG_SLACK);
    neighbor_values
        .iter()
        .filter(|&&(_, x_j)| (x_j - x_i).abs() >= cut)
        .map(|&(j, _)| j)
        .collect()
}

/// Distance of `k` from the mean of its neighbors; ranks competing candidates.
pub fn local_deviation(g: &Graph, x: &[f64], k: usize) -> f64 {
    let nb = g.neighbors(k);
    if nb.is_empty() {
        return 0.0;
    }
    let mean = nb.iter().map(|&j| x[j]).sum::<f64>() / nb.len() as f64;
    (x[k] - mean).abs()
}

/// Mean absolute deviation between `k` and each of its neighbors.
pub fn voter_deviation(g: &Graph, x: &[f64], k: usize) -> f64 {
    let nb = g.neighbors(k);
    if nb.is_empty() {
        return 0.0;
    }
    nb.iter().map(|&j| (x[k] - x[j]).abs()).sum::<f64>() / nb.len() as f64
}

fn sign_coherent(g: &Graph, x: &[f64], k: usize) -> bool {
    let nb = g.neighbors(k);
    nb.iter().all(|&i| x[k] > x[i]) || nb.iter().all(|&i| x[k] < x[i])
}

/// Every node that passes the vote under `policy`, with its [`local_deviation`].
pub fn vote_candidates(
    flags_by_observer: &[Vec<usize>],
    g: &Graph,
    x: &[f64],
    policy: VoterPolicy,
    coherent: bool,
) -> Vec<(usize, f64)> {
    let n = g.node_count();
    let flagged = |i: usize, j: usize| flags_by_observer[i].contains(&j);
    let mut passes = vec![false; n];
    match policy {
        VoterPolicy::AttackerNeighborhood => {
            for (k, pass) in passes.iter_mut().enumerate() {
                let voters = g.neighbors(k);
                let votes = voters.iter().filter(|&&i| flagged(i, k)).count();
                *pass = !voters.is_empty() && 2 * votes > voters.len();
            }
        }
        VoterPolicy::CommonNeighborsPlusSelf => {
            for (i, flags) in flags_by_observer.iter().enumerate() {
                for &j in flags {
                    let common: Vec<usize> = g
                        .neighbors(i)
                        .iter()
                        .copied()
                        .filter(|&c| g.is_adjacent(c, j))
                        .collect();
                    let votes = 1 + common.iter().filter(|&&c| flagged(c, j)).count();
                    if votes > common.len().div_ceil(2) {
                        passes[j] = true;
                    }
                }
            }
        }
    }
    passes
        .iter()
        .enumerate()
        .filter(|&(k, &p)| p && (!coherent || sign_coherent(g, x, k)))
        .map(|(k, _)| (k, local_deviation(g, x, k)))
        .collect()
}

fn strongest(candidates: &[(usize, f64)]) -> Option<(usize, f64)> {
    candidates
        .iter()
        .copied()
        .fold(None, |best, c| match best {
            Some((_, d)) if d >= c.1 => best,
            _ => Some(c),
        })
}

// `strongest(vote_candidates(..))` without the intermediate vectors.
fn strongest_candidate(
    flags_by_observer: &[Vec<usize>],
    g: &Graph,
    x: &[f64],
    policy: VoterPolicy,
    coherent: bool,
) -> Option<(usize, f64)> {
    if policy != VoterPolicy::AttackerNeighborhood {
        return strongest(&vote_candidates(flags_by_observer, g, x, policy, coherent));
    }
    let mut best: Option<(usize, f64)> = None;
    for k in 0..g.node_count() {
        let voters = g.neighbors(k);
        let votes = voters.iter().filter(|&&i| flags_by_observer[i].contains(&k)).count();
        if voters.is_empty() || 2 * votes <= voters.len() || (coherent && !sign_coherent(g, x, k)) {
            continue;
        }
        let d = local_deviation(g, x, k);
        if !matches!(best, Some((_, b)) if b >= d) {
            best = Some((k, d));
        }
    }
    best
}

/// The node a majority accuses, if any. When several pass, the one that
/// deviates most from its neighbors' mean wins.
pub fn majority_verdict(
    flags_by_observer: &[Vec<usize>],
    g: &Graph,
    x: &[f64],
    policy: VoterPolicy,
) -> Option<usize> {
    strongest(&vote_candidates(flags_by_observer, g, x, policy, false)).map(|(k, _)| k)
}

/// Consensus update in difference form with suspicious neighbors down-weighted.
pub fn soft_update(x_i: f64, trusted: &[f64], suspicious: &[f64], gain: f64, a: f64) -> f64 {
    let pull = |vals: &[f64]| vals.iter().map(|x_j| x_j - x_i).sum::<f64>();
    x_i + gain * pull(trusted) + gain / a * pull(suspicious)
}

/// One λ / flag snapshot for debugging dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSample {
    pub t: usize,
    pub channel: Channel,
    pub node: usize,
    pub lambda: f64,
    pub flagged: Vec<usize>,
}

#[derive(Debug, Clone)]
struct ChannelTracker {
    state: OutlierState,
    delayed_flags: Vec<Vec<usize>>,
    // (winning candidate, its voter deviation) for the last window + 1 iterations
    recent: VecDeque<Option<(usize, f64)>>,
}

impl ChannelTracker {
    fn new(g: &Graph, x: &[f64], beta: f64) -> Self {
        let state = init_thresholds(x, g, beta);
        Self {
            delayed_flags: vec![Vec::new(); g.node_count()],
            state,
            recent: VecDeque::new(),
        }
    }
}

/// Adaptive-threshold detector for both channels, usable as a phase mitigation.
///
/// With `soft` enabled it also replaces the honest update by [`soft_update`]
/// using each node's current flags.
#[derive(Debug, Clone)]
pub struct OutlierDetector {
    cfg: OutlierConfig,
    soft: bool,
    channels: Vec<ChannelTracker>,
    trace: Vec<ThresholdSample>,
    // initial-topology labels of the live nodes
    labels: Vec<usize>,
    /// Iteration whose state seeded the current thresholds.
    seeded_at: usize,
}

impl OutlierDetector {
    pub fn new(cfg: OutlierConfig) -> Self {
        Self {
            cfg,
            soft: false,
            channels: Vec::new(),
            trace: Vec::new(),
            labels: Vec::new(),
            seeded_at: 0,
        }
    }

    pub fn soft(cfg: OutlierConfig) -> Self {
        Self {
            soft: true,
            ..Self::new(cfg)
        }
    }

    pub fn config(&self) -> &OutlierConfig {
        &self.cfg
    }

    /// Current thresholds on `channel`, indexed like the live graph.
    pub fn lambdas(&self, channel: Channel) -> &[f64] {
        &self.tracker(channel).state.lambda
    }

    pub fn flags(&self, channel: Channel) -> &[Vec<usize>] {
        &self.tracker(channel).state.flags
    }

    /// λ / flag history, labels in terms of the initial topology.
    pub fn trace(&self) -> &[ThresholdSample] {
        &self.trace
    }

    fn tracker(&self, channel: Channel) -> &ChannelTracker {
        &self.channels[channel as usize]
    }

    /// Updates thresholds and flags for `x(t)` and returns the candidate that
    /// is confirmed at this iteration, with its local deviation.
    fn inspect_channel(&mut self, view: &PhaseView<'_>, channel: Channel) -> Option<(usize, f64)> {
        let g = view.graph;
        let x = view.channel(channel);
        let cfg = &self.cfg;
        let tracker = &mut self.channels[channel as usize];
        let first = view.t() == self.seeded_at;
        let st = &mut tracker.state;
        for i in 0..g.node_count() {
            let sum = deviation_sum(g, x, i);
            if !first {
                st.lambda[i] = update_threshold(st.lambda[i], st.prev_deviation_sum[i], sum);
            }
            st.prev_deviation_sum[i] = sum;
            // same rule as flag_suspicious, filled in place
            let cut = st.lambda[i] * (1.0 - FLAG_SLACK);
            core::mem::swap(&mut st.flags[i], &mut tracker.delayed_flags[i]);
            let fresh = &mut st.flags[i];
            fresh.clear();
            fresh.extend(g.neighbors(i).iter().copied().filter(|&j| (x[j] - x[i]).abs() >= cut));
        }
        if cfg.trace {
            for i in 0..g.node_count() {
                self.trace.push(ThresholdSample {
                    t: view.t(),
                    channel,
                    node: self.labels[i],
                    lambda: st.lambda[i],
                    flagged: st.flags[i].iter().map(|&j| self.labels[j]).collect(),
                });
            }
        }

        let tally = if cfg.delayed_exchange && !first {
            &tracker.delayed_flags
        } else {
            &st.flags
        };
        let best = strongest_candidate(tally, g, x, cfg.policy, cfg.coherent);
        let entry = best.map(|(k, _)| (k, voter_deviation(g, x, k)));
        tracker.recent.push_back(entry);
        if tracker.recent.len() > cfg.window + 1 {
            tracker.recent.pop_front();
        }

        let (k, dev_now) = entry?;
        let score = best?.1;
        if tracker.recent.len() < cfg.window + 1 {
            return None;
        }
        let steady = tracker
            .recent
            .iter()
            .all(|e| matches!(e, Some((c, _)) if *c == k));
        let (_, dev_then) = tracker.recent.front().copied().flatten()?;
        (steady && dev_now >= (1.0 - cfg.decay_tolerance) * dev_then).then_some((k, score))
    }
}

impl MitigationHook for OutlierDetector {
    fn reset(&mut self, view: &PhaseView<'_>) {
        self.labels = view.graph.labels().to_vec();
        self.seeded_at = view.t();
        self.channels = Channel::BOTH
            .iter()
            .map(|&c| ChannelTracker::new(view.graph, view.channel(c), self.cfg.beta))
            .collect();
    }

    fn inspect(&mut self, view: &PhaseView<'_>) -> Option<usize> {
        let on_attack = self.inspect_channel(view, Channel::Attack);
        let on_normal = self.inspect_channel(view, Channel::Normal);
        match (on_attack, on_normal) {
            (Some(a), Some(b)) => Some(if b.1 > a.1 { b.0 } else { a.0 }),
            (a, b) => a.or(b).map(|(k, _)| k),
        }
    }

    fn honest_update(&mut self, view: &PhaseView<'_>, channel: Channel, out: &mut [f64]) -> bool {
        if !self.soft {
            return false;
        }
        let g = view.graph;
        let x = view.channel(channel);
        let gain = self
            .cfg
            .gain
            .unwrap_or(1.0 / (g.max_degree() + 1) as f64);
        let flags = &self.tracker(channel).state.flags;
        let mut trusted = Vec::new();
        let mut suspicious = Vec::new();
        for (i, o) in out.iter_mut().enumerate() {
            trusted.clear();
            suspicious.clear();
            for &j in g.neighbors(i) {
                if flags[i].contains(&j) {
                    suspicious.push(x[j]);
                } else {
                    trusted.push(x[j]);
                }
            }
            *o = soft_update(x[i], &trusted, &suspicious, gain, self.cfg.a);
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::AttackModel;
    use crate::consensus::{build_max_degree_weights, run_phase, NoClock, PhaseConfig};
    use crate::topology::{build_petersen, build_ring, build_star, build_torus, Graph, NodeId};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::vec::Vec;

    fn uniform_states(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-55.0..-20.0)).collect()
    }

    #[test]
    fn thresholds_scale_with_local_spread() {
        let g = build_ring(4).unwrap();
        let st = init_thresholds(&[0.0, 1.0, 2.0, 3.0], &g, 2.0);
        assert_eq!(st.lambda[0], 4.0);
        let st = init_thresholds(&[-7.0; 4], &g, 2.0);
        assert_eq!(st.lambda, [2.0; 4]);
        let pair = crate::topology::build_path(2).unwrap();
        let st = init_thresholds(&[0.0, 5.0], &pair, 1.0);
        assert_eq!(st.lambda, [5.0, 5.0]);
    }

    #[test]
    fn threshold_update_ratio_and_guard() {
        assert_eq!(update_threshold(0.8, 4.0, 2.0), 0.4);
        assert_eq!(update_threshold(0.8, 0.0, 2.0), 0.8);
    }

    #[test]
    fn flags_are_inclusive() {
        let nb = [(1, 0.1), (2, 5.0)];
        assert_eq!(flag_suspicious(0.0, &nb, 1.0), [2]);
        assert_eq!(flag_suspicious(0.0, &nb, 0.0), [1, 2]);
        assert!(flag_suspicious(0.0, &nb, 10.0).is_empty());
    }

    #[test]
    fn neighborhood_majority() {
        // star hub 0 with leaves 1,2,3; leaf 1 is accused by its only voter
        let g = build_star(4).unwrap();
        let x = [0.0, 3.0, 0.0, 0.0];
        let mut flags = vec![Vec::new(); 4];
        flags[0] = vec![1];
        assert_eq!(majority_verdict(&flags, &g, &x, VoterPolicy::AttackerNeighborhood), Some(1));

        // hub with neighbors {1,2,3}: two of three flag it
        let x = [3.0, 0.0, 0.0, 0.0];
        let mut flags = vec![Vec::new(); 4];
        flags[1] = vec![0];
        flags[2] = vec![0];
        assert_eq!(majority_verdict(&flags, &g, &x, VoterPolicy::AttackerNeighborhood), Some(0));
        flags[2].clear();
        assert_eq!(majority_verdict(&flags, &g, &x, VoterPolicy::AttackerNeighborhood), None);
    }

    #[test]
    fn common_neighbor_rule_on_triangle_free_graph() {
        let g = build_ring(6).unwrap();
        let x = [0.0, 0.0, 2.0, 0.0, 0.0, 0.0];
        let mut flags = vec![Vec::new(); 6];
        flags[1] = vec![2];
        assert_eq!(majority_verdict(&flags, &g, &x, VoterPolicy::CommonNeighborsPlusSelf), Some(2));
        assert_eq!(majority_verdict(&flags, &g, &x, VoterPolicy::AttackerNeighborhood), None);
    }

    #[test]
    fn largest_deviation_breaks_ties() {
        // ring(8): nodes 2 and 6 both fully accused; 6 deviates by 0.6, 2 by 0.4
        let g = build_ring(8).unwrap();
        let mut x = [0.0; 8];
        x[2] = 0.4;
        x[6] = 0.6;
        let mut flags = vec![Vec::new(); 8];
        flags[1] = vec![2];
        flags[3] = vec![2];
        flags[5] = vec![6];
        flags[7] = vec![6];
        let cands = vote_candidates(&flags, &g, &x, VoterPolicy::AttackerNeighborhood, true);
        assert_eq!(cands, [(2, 0.4), (6, 0.6)]);
        assert_eq!(majority_verdict(&flags, &g, &x, VoterPolicy::AttackerNeighborhood), Some(6));
    }

    #[test]
    fn coherence_rejects_mixed_signs() {
        let g = build_ring(5).unwrap();
        // node 2 sits between a higher and a lower neighbor
        let x = [0.0, -3.0, 0.0, 3.0, 0.0];
        let mut flags = vec![Vec::new(); 5];
        flags[1] = vec![2];
        flags[3] = vec![2];
        assert!(vote_candidates(&flags, &g, &x, VoterPolicy::AttackerNeighborhood, true).is_empty());
        assert_eq!(vote_candidates(&flags, &g, &x, VoterPolicy::AttackerNeighborhood, false).len(), 1);
    }

    #[test]
    fn soft_update_identities() {
        let g = build_petersen();
        let w = build_max_degree_weights(&g);
        let x = uniform_states(10, 11);
        let gain = 1.0 / 4.0;
        for i in 0..10 {
            let trusted: Vec<f64> = g.neighbors(i).iter().map(|&j| x[j]).collect();
            let expected = w.row_dot(i, &x);
            assert!((soft_update(x[i], &trusted, &[], gain, 2.0) - expected).abs() < 1e-12);
        }
        let moved = soft_update(1.0, &[], &[5.0, -3.0], 0.25, 1e15);
        assert!((moved - 1.0).abs() < 1e-12);
        assert_eq!(soft_update(-4.0, &[-4.0], &[], 0.3, 2.0), -4.0);
    }

    #[test]
    fn honest_thresholds_decay() {
        let g = build_ring(9).unwrap();
        let x0 = uniform_states(9, 12);
        let mut det = OutlierDetector::new(OutlierConfig::default());
        let cfg = PhaseConfig::default().with_epsilon(1e-8);
        let start = init_thresholds(&x0, &g, 1.0).lambda;
        let r = run_phase(&g, &x0, &x0, &cfg, None, Some(&mut det), &NoClock).unwrap();
        assert!(r.converged);
        assert!(r.detection().is_none());
        for (end, begin) in det.lambdas(Channel::Attack).iter().zip(&start) {
            assert!(*end < 1e-3 * begin);
        }
    }

    #[test]
    fn finds_additive_attacker() {
        let cases = [build_ring(9).unwrap(), build_torus(3, 3).unwrap(), build_petersen()];
        for g in &cases {
            let n = g.node_count();
            for seed in 0..10u64 {
                let x0 = uniform_states(n, seed);
                let target = NodeId((seed as usize * 7) % n);
                let model = AttackModel::additive(0.5, target);
                let mut det = OutlierDetector::new(OutlierConfig::default());
                let r = run_phase(g, &x0, &x0, &PhaseConfig::default(), Some(&model), Some(&mut det), &NoClock)
                    .unwrap();
                assert_eq!(r.removed(), Some(target), "seed {seed} n {n}");
                assert!(r.converged);
            }
        }
    }

    // Runs the detector and checks `check` after every inspection.
    struct Probe<F: FnMut(&OutlierDetector, &PhaseView<'_>)> {
        det: OutlierDetector,
        check: F,
    }

    impl<F: FnMut(&OutlierDetector, &PhaseView<'_>)> MitigationHook for Probe<F> {
        fn reset(&mut self, view: &PhaseView<'_>) {
            self.det.reset(view);
        }

        fn inspect(&mut self, view: &PhaseView<'_>) -> Option<usize> {
            let out = self.det.inspect(view);
            (self.check)(&self.det, view);
            out
        }
    }

    #[test]
    fn threshold_tracks_spread_across_removals() {
        // attacker 2 hangs off node 4 and has a pendant neighbor 9
        let edges = [
            (0, 3), (0, 5), (0, 7), (1, 6), (1, 7), (1, 8), (2, 4), (2, 9),
            (3, 6), (3, 8), (4, 7), (5, 6), (5, 7), (5, 8), (6, 8),
        ];
        let g = Graph::from_edges(10, &edges).unwrap();
        for seed in 0..20u64 {
            let x0 = uniform_states(10, seed);
            let model = AttackModel::additive(0.5, NodeId(2));
            let mut checked = 0;
            let mut probe = Probe {
                det: OutlierDetector::new(OutlierConfig::default()),
                check: |det: &OutlierDetector, view: &PhaseView<'_>| {
                    let g = view.graph;
                    let x = view.channel(Channel::Attack);
                    for i in 0..g.node_count() {
                        let spread = deviation_sum(g, x, i) / g.degree(i) as f64;
                        let lambda = det.lambdas(Channel::Attack)[i];
                        assert!((lambda - spread).abs() <= 1e-9 * spread.max(1.0), "seed {seed} t {} node {i}", view.t());
                    }
                    checked += 1;
                },
            };
            let r = run_phase(&g, &x0, &x0, &PhaseConfig::default(), Some(&model), Some(&mut probe), &NoClock).unwrap();
            assert!(r.removals.iter().any(|d| d.node == NodeId(2)), "seed {seed}");
            assert!(r.converged);
            assert!(checked > 0);
        }
    }

    #[test]
    fn pendant_node_always_flags_its_neighbor() {
        let g = build_star(5).unwrap();
        let x0 = uniform_states(5, 21);
        let mut probe = Probe {
            det: OutlierDetector::new(OutlierConfig::default()),
            check: |det: &OutlierDetector, _: &PhaseView<'_>| {
                for leaf in 1..5 {
                    assert_eq!(det.flags(Channel::Attack)[leaf], [0]);
                }
            },
        };
        run_phase(&g, &x0, &x0, &PhaseConfig::default(), None, Some(&mut probe), &NoClock).unwrap();
    }

    #[test]
    fn soft_mode_still_converges_honestly() {
        let g = build_torus(3, 3).unwrap();
        let x0 = uniform_states(9, 13);
        let mut det = OutlierDetector::soft(OutlierConfig::default());
        let r = run_phase(&g, &x0, &x0, &PhaseConfig::default(), None, Some(&mut det), &NoClock).unwrap();
        assert!(r.converged);
        let spread = r.final_attack.iter().fold(0.0f64, |m, v| m.max((v - r.final_attack_avg).abs()));
        assert!(spread < 1e-4);
    }

    #[test]
    fn trace_records_every_node_each_iteration() {
        let g = build_ring(9).unwrap();
        let x0 = uniform_states(9, 14);
        let mut det = OutlierDetector::new(OutlierConfig {
            trace: true,
            ..OutlierConfig::default()
        });
        let cfg = PhaseConfig::default().with_max_iter(5);
        let r = run_phase(&g, &x0, &x0, &cfg, None, Some(&mut det), &NoClock).unwrap();
        assert_eq!(det.trace().len(), (r.iterations + 1) * 9 * 2);
    }

    proptest! {
        #[test]
        fn raising_lambda_never_adds_flags(
            x_i in -55.0f64..-20.0,
            vals in proptest::collection::vec(-55.0f64..-20.0, 1..8),
            lo in 0.0f64..20.0,
            extra in 0.0f64..20.0,
        ) {
            let nb: Vec<(usize, f64)> = vals.into_iter().enumerate().collect();
            let loose = flag_suspicious(x_i, &nb, lo);
            let strict = flag_suspicious(x_i, &nb, lo + extra);
            prop_assert!(strict.iter().all(|j| loose.contains(j)));
        }

        #[test]
        fn thresholds_stay_non_negative(lambda in 0.0f64..100.0, a in 0.0f64..50.0, b in 0.0f64..50.0) {
            prop_assert!(update_threshold(lambda, a, b) >= 0.0);
        }
    }
}
