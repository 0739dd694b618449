//! The experiment protocol: many seeded phases, tallied into metrics.
//!
//! Phase `k` draws everything it needs from a ChaCha8 generator seeded with
//! the master seed and switched to stream `k`, in a fixed order: ground
//! truth, graph seed, initial likelihoods, attacker. Phases are therefore
//! independent of each other and of execution order.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nids_core::attacks::select_target_with;
use nids_core::classifier::Class;
use nids_core::consensus::{
    run_phase, Clock, MitigationHook, PhaseError, PhaseResult, TraceSample,
};
use nids_core::observer::{FaultDetector, ResidualSample};
use nids_core::outlier::{OutlierDetector, ThresholdSample};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AttackForm, ExperimentConfig, Mitigation, TopologySpec};
use crate::data::LikelihoodSource;
use crate::error::HarnessError;

/// Wall clock for phase timing.
#[derive(Debug, Clone, Copy)]
pub struct StdClock {
    origin: Instant,
}

impl Default for StdClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for StdClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// Generator for phase `phase` of a run seeded with `seed`.
pub fn phase_rng(seed: u64, phase: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(phase as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Alert,
    NoAlert,
}

/// Alert when the fused likelihood ratio `p_a / p_n` exceeds `alert_value`.
pub fn decide(avg_log_pa: f64, avg_log_pn: f64, alert_value: f64) -> Decision {
    if avg_log_pa - avg_log_pn > alert_value.ln() {
        Decision::Alert
    } else {
        Decision::NoAlert
    }
}

/// One row of the per-phase output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase_id: usize,
    pub ground_truth: Class,
    /// Empty when the phase aborted.
    pub decision: Option<Decision>,
    pub iterations: usize,
    pub detection_iteration: Option<usize>,
    pub removed_node: Option<usize>,
    pub wall_time_us: u64,
    pub attacker: Option<usize>,
    pub converged: bool,
    pub aborted: bool,
    pub removals: usize,
    /// The attacker was among the removed nodes, first or later.
    pub attacker_removed: bool,
    pub final_attack_avg: f64,
    pub final_normal_avg: f64,
    pub dataset_wrapped: bool,
}

/// Debug output of one phase: states, thresholds and residuals.
#[derive(Debug, Clone, Default)]
pub struct PhaseTrace {
    pub trajectory: Vec<TraceSample>,
    pub thresholds: Vec<ThresholdSample>,
    pub residuals: Vec<ResidualSample>,
}

enum Hook {
    Outlier(OutlierDetector),
    Fault(FaultDetector),
}

impl Hook {
    fn for_config(cfg: &ExperimentConfig, trace: bool) -> Option<Self> {
        match cfg.mitigation {
            Mitigation::None => None,
            Mitigation::Outlier | Mitigation::Soft => {
                let ocfg = nids_core::outlier::OutlierConfig {
                    trace,
                    ..cfg.outlier.clone()
                };
                Some(Self::Outlier(if cfg.mitigation == Mitigation::Soft {
                    OutlierDetector::soft(ocfg)
                } else {
                    OutlierDetector::new(ocfg)
                }))
            }
            Mitigation::Fault => Some(Self::Fault(FaultDetector::new(nids_core::observer::FaultConfig {
                trace,
                ..cfg.fault.clone()
            }))),
        }
    }

    fn as_dyn(&mut self) -> &mut dyn MitigationHook {
        match self {
            Self::Outlier(d) => d,
            Self::Fault(d) => d,
        }
    }
}

/// Everything a phase needs besides the config.
pub struct PhaseSetup {
    pub truth: Class,
    pub graph: nids_core::topology::Graph,
    pub x_attack: Vec<f64>,
    pub x_normal: Vec<f64>,
    pub attacker: Option<usize>,
    pub dataset_wrapped: bool,
}

/// Draws ground truth, topology, initial states and attacker for a phase.
pub fn prepare_phase(cfg: &ExperimentConfig, source: &LikelihoodSource, phase_id: usize) -> Result<PhaseSetup, HarnessError> {
    let mut rng = phase_rng(cfg.seed, phase_id);
    let truth = if rng.random_bool(cfg.attack_probability) {
        Class::Attack
    } else {
        Class::Normal
    };
    let graph = cfg.topology.build(rng.next_u64())?;
    let n = graph.node_count();
    let (pairs, dataset_wrapped) = source.assign(truth, phase_id, n, &mut rng);
    let target = select_target_with(&mut rng, n).0;
    Ok(PhaseSetup {
        truth,
        graph,
        x_attack: pairs.iter().map(|p| p.log_pa).collect(),
        x_normal: pairs.iter().map(|p| p.log_pn).collect(),
        attacker: cfg.attack.is_some().then_some(target),
        dataset_wrapped,
    })
}

fn execute(
    cfg: &ExperimentConfig,
    source: &LikelihoodSource,
    phase_id: usize,
    trace: Option<&mut PhaseTrace>,
) -> Result<PhaseRecord, HarnessError> {
    let setup = prepare_phase(cfg, source, phase_id)?;
    let model = cfg
        .attack
        .zip(setup.attacker)
        .map(|(a, t)| a.instantiate(nids_core::topology::NodeId(t)));
    let mut phase_cfg = cfg.phase_config();
    phase_cfg.record_trajectory = trace.is_some();
    let mut hook = Hook::for_config(cfg, trace.is_some());
    let clock = StdClock::default();
    let outcome = run_phase(
        &setup.graph,
        &setup.x_attack,
        &setup.x_normal,
        &phase_cfg,
        model.as_ref(),
        hook.as_mut().map(Hook::as_dyn),
        &clock,
    );
    if let Some(trace) = trace {
        match &hook {
            Some(Hook::Outlier(d)) => trace.thresholds = d.trace().to_vec(),
            Some(Hook::Fault(d)) => trace.residuals = d.trace().to_vec(),
            None => {}
        }
        if let Ok(r) = &outcome {
            trace.trajectory = r.trajectory.clone().unwrap_or_default();
        }
    }
    let base = PhaseRecord {
        phase_id,
        ground_truth: setup.truth,
        decision: None,
        iterations: 0,
        detection_iteration: None,
        removed_node: None,
        wall_time_us: clock.now().as_micros() as u64,
        attacker: setup.attacker,
        converged: false,
        aborted: true,
        removals: 0,
        attacker_removed: false,
        final_attack_avg: f64::NAN,
        final_normal_avg: f64::NAN,
        dataset_wrapped: setup.dataset_wrapped,
    };
    match outcome {
        Ok(r) => Ok(record_from(base, &r, cfg.alert_value)),
        Err(PhaseError::Disconnected { iteration, report }) => Ok(PhaseRecord {
            iterations: iteration,
            detection_iteration: Some(iteration),
            removed_node: Some(report.removed),
            removals: 1,
            attacker_removed: setup.attacker == Some(report.removed),
            ..base
        }),
        Err(source) => Err(HarnessError::Phase { phase: phase_id, source }),
    }
}

fn record_from(base: PhaseRecord, r: &PhaseResult, alert_value: f64) -> PhaseRecord {
    let detection = r.detection();
    PhaseRecord {
        decision: Some(decide(r.final_attack_avg, r.final_normal_avg, alert_value)),
        iterations: r.iterations,
        detection_iteration: detection.map(|d| d.iteration),
        removed_node: detection.map(|d| d.node.0),
        wall_time_us: r.elapsed.as_micros() as u64,
        converged: r.converged,
        aborted: false,
        removals: r.removals.len(),
        attacker_removed: base.attacker.is_some_and(|a| r.removals.iter().any(|d| d.node.0 == a)),
        final_attack_avg: r.final_attack_avg,
        final_normal_avg: r.final_normal_avg,
        ..base
    }
}

/// Runs phase `phase_id` of the experiment described by `cfg`.
pub fn run_phase_protocol(
    cfg: &ExperimentConfig,
    source: &LikelihoodSource,
    phase_id: usize,
) -> Result<PhaseRecord, HarnessError> {
    execute(cfg, source, phase_id, None)
}

/// [`run_phase_protocol`] with trajectory, threshold and residual recording.
pub fn run_phase_traced(
    cfg: &ExperimentConfig,
    source: &LikelihoodSource,
    phase_id: usize,
) -> Result<(PhaseRecord, PhaseTrace), HarnessError> {
    let mut trace = PhaseTrace::default();
    let record = execute(cfg, source, phase_id, Some(&mut trace))?;
    Ok((record, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub phases: usize,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy: f64,
    pub aborted: usize,
    pub non_converged: usize,
    /// Phases in which some mitigation removed a node.
    pub detections: usize,
    /// Detections whose first removal was the attacker.
    pub correct_detections: usize,
    pub misidentified: usize,
    /// Phases with an attacker in which it was removed at some point.
    pub attackers_removed: usize,
    pub detection_speed_histogram: BTreeMap<usize, usize>,
    pub convergence_speed_histogram: BTreeMap<usize, usize>,
    pub total_wall_time_us: u64,
    pub per_phase_wall_time_us: Vec<u64>,
    pub dataset_wrapped: bool,
}

impl Metrics {
    pub fn from_records(records: &[PhaseRecord]) -> Self {
        let mut m = Metrics {
            phases: records.len(),
            tp: 0,
            tn: 0,
            fp: 0,
            fn_: 0,
            accuracy: 0.0,
            aborted: 0,
            non_converged: 0,
            detections: 0,
            correct_detections: 0,
            misidentified: 0,
            attackers_removed: 0,
            detection_speed_histogram: BTreeMap::new(),
            convergence_speed_histogram: BTreeMap::new(),
            total_wall_time_us: 0,
            per_phase_wall_time_us: Vec::with_capacity(records.len()),
            dataset_wrapped: false,
        };
        for r in records {
            match (r.ground_truth, r.decision) {
                (Class::Attack, Some(Decision::Alert)) => m.tp += 1,
                (Class::Attack, Some(Decision::NoAlert)) => m.fn_ += 1,
                (Class::Normal, Some(Decision::NoAlert)) => m.tn += 1,
                (Class::Normal, Some(Decision::Alert)) => m.fp += 1,
                (_, None) => m.aborted += 1,
            }
            if !r.aborted && !r.converged {
                m.non_converged += 1;
            }
            if let Some(t) = r.detection_iteration {
                m.detections += 1;
                *m.detection_speed_histogram.entry(t).or_default() += 1;
                if r.attacker.is_some() && r.removed_node == r.attacker {
                    m.correct_detections += 1;
                } else {
                    m.misidentified += 1;
                }
            }
            m.attackers_removed += usize::from(r.attacker_removed);
            *m.convergence_speed_histogram.entry(r.iterations).or_default() += 1;
            m.total_wall_time_us += r.wall_time_us;
            m.per_phase_wall_time_us.push(r.wall_time_us);
            m.dataset_wrapped |= r.dataset_wrapped;
        }
        m.accuracy = accuracy(m.tp, m.tn, m.fp, m.fn_);
        m
    }
}

/// `(TP + TN) / (TP + TN + FP + FN)`, zero when nothing was decided.
pub fn accuracy(tp: usize, tn: usize, fp: usize, fn_: usize) -> f64 {
    let total = tp + tn + fp + fn_;
    if total == 0 {
        0.0
    } else {
        (tp + tn) as f64 / total as f64
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub metrics: Metrics,
    pub records: Vec<PhaseRecord>,
    /// Wall time of the whole run, including setup.
    pub elapsed: Duration,
}

/// Runs `cfg.phases` seeded phases; aborted phases are recorded, but more
/// than 5% of them fails the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let started = Instant::now();
    let source = LikelihoodSource::from_config(&cfg.data)?;
    run_experiment_with(cfg, &source, started)
}

pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    source: &LikelihoodSource,
    started: Instant,
) -> Result<ExperimentResult, HarnessError> {
    let records: Vec<PhaseRecord> = if cfg.parallel {
        (0..cfg.phases)
            .into_par_iter()
            .map(|k| run_phase_protocol(cfg, source, k))
            .collect::<Result<_, _>>()?
    } else {
        (0..cfg.phases)
            .map(|k| run_phase_protocol(cfg, source, k))
            .collect::<Result<_, _>>()?
    };
    let metrics = Metrics::from_records(&records);
    if metrics.aborted * 20 > metrics.phases {
        return Err(HarnessError::TooManyAborts {
            aborted: metrics.aborted,
            phases: metrics.phases,
        });
    }
    Ok(ExperimentResult {
        metrics,
        records,
        elapsed: started.elapsed(),
    })
}

/// Median of a non-empty sample (mean of the middle pair for even sizes).
pub fn median(values: &[usize]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid] as f64
    } else {
        (v[mid - 1] + v[mid]) as f64 / 2.0
    })
}

pub fn histogram(values: impl IntoIterator<Item = usize>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v).or_default() += 1;
    }
    h
}

/// Paired honest and constant-attack phases on the same seeds.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceComparison {
    pub honest: BTreeMap<usize, usize>,
    pub attacked: BTreeMap<usize, usize>,
    pub honest_median: f64,
    pub attacked_median: f64,
    pub honest_converged: usize,
    pub attacked_converged: usize,
    /// Largest distance of any attacked-phase final state from the constant.
    pub max_limit_error: f64,
}

pub fn compare_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceComparison, HarnessError> {
    cfg.validate()?;
    let attack = match cfg.attack {
        Some(a) if a.form == AttackForm::Constant => a,
        _ => return Err(HarnessError::Config("compare_convergence needs a constant attack".into())),
    };
    let source = LikelihoodSource::from_config(&cfg.data)?;
    let phase_cfg = cfg.phase_config();
    let runs: Vec<(PhaseResult, PhaseResult)> = (0..cfg.phases)
        .into_par_iter()
        .map(|k| {
            let setup = prepare_phase(cfg, &source, k)?;
            let target = setup.attacker.expect("attack configured, so a target was drawn");
            let model = attack.instantiate(nids_core::topology::NodeId(target));
            let run = |m| {
                run_phase(&setup.graph, &setup.x_attack, &setup.x_normal, &phase_cfg, m, None, &StdClock::default())
                    .map_err(|source| HarnessError::Phase { phase: k, source })
            };
            Ok((run(None)?, run(Some(&model))?))
        })
        .collect::<Result<_, HarnessError>>()?;
    let honest: Vec<usize> = runs.iter().map(|(h, _)| h.iterations).collect();
    let attacked: Vec<usize> = runs.iter().map(|(_, a)| a.iterations).collect();
    let max_limit_error = runs
        .iter()
        .flat_map(|(_, a)| a.final_attack.iter().chain(&a.final_normal))
        .map(|v| (v - attack.magnitude).abs())
        .fold(0.0, f64::max);
    Ok(ConvergenceComparison {
        honest_median: median(&honest).unwrap_or(0.0),
        attacked_median: median(&attacked).unwrap_or(0.0),
        honest_converged: runs.iter().filter(|(h, _)| h.converged).count(),
        attacked_converged: runs.iter().filter(|(_, a)| a.converged).count(),
        honest: histogram(honest),
        attacked: histogram(attacked),
        max_limit_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub topology: String,
    pub mitigation: Mitigation,
    pub phases: usize,
    pub total_us: u64,
    pub mean_us: f64,
    pub mean_iterations: f64,
    pub detections: usize,
}

/// Cost of each mitigation on each topology.
///
/// Every mitigation runs the same seeded phases without an attacker, one
/// after another on the calling thread, so all of them perform identical
/// consensus work and the timings differ only by the detection code.
pub fn bench(base: &ExperimentConfig, topologies: &[TopologySpec], mitigations: &[Mitigation]) -> Result<Vec<BenchRow>, HarnessError> {
    let mut rows = Vec::new();
    for topo in topologies {
        for &mitigation in mitigations {
            let cfg = ExperimentConfig {
                topology: topo.clone(),
                mitigation,
                attack: None,
                parallel: false,
                ..base.clone()
            };
            let result = run_experiment(&cfg)?;
            let m = &result.metrics;
            rows.push(BenchRow {
                topology: topo.name(),
                mitigation,
                phases: m.phases,
                total_us: m.total_wall_time_us,
                mean_us: m.total_wall_time_us as f64 / m.phases as f64,
                mean_iterations: result.records.iter().map(|r| r.iterations as f64).sum::<f64>() / m.phases as f64,
                detections: m.detections,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::AttackTemplate;

    fn small(mitigation: Mitigation, attack: Option<AttackTemplate>) -> ExperimentConfig {
        ExperimentConfig {
            topology: TopologySpec::Petersen,
            mitigation,
            attack,
            phases: 40,
            seed: 5,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(-30.0, -35.0, 1.0), Decision::Alert);
        assert_eq!(decide(-35.0, -30.0, 1.0), Decision::NoAlert);
        assert_eq!(decide(-30.0, -30.0, 1.0), Decision::NoAlert);
        assert_eq!(decide(-30.0, -32.0, 10.0), Decision::NoAlert);
    }

    #[test]
    fn honest_synthetic_runs_are_always_right() {
        let result = run_experiment(&small(Mitigation::None, None)).unwrap();
        let m = &result.metrics;
        assert_eq!(m.tp + m.tn + m.fp + m.fn_, 40);
        assert_eq!((m.fp, m.fn_), (0, 0));
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn unprotected_attack_turns_normal_phases_into_alerts() {
        let cfg = ExperimentConfig {
            max_iter: 2_000,
            ..small(Mitigation::None, Some(AttackTemplate::additive(0.5)))
        };
        let m = run_experiment(&cfg).unwrap().metrics;
        assert_eq!(m.tn, 0);
        assert!(m.fp > 0);
    }

    #[test]
    fn fault_mitigation_on_petersen() {
        let m = run_experiment(&small(Mitigation::Fault, Some(AttackTemplate::additive(0.5))))
            .unwrap()
            .metrics;
        assert_eq!(m.detections, 40);
        assert_eq!(m.correct_detections, 40);
        assert_eq!(m.fp, 0);
    }

    #[test]
    fn phases_do_not_depend_on_execution_order() {
        let cfg = small(Mitigation::Outlier, Some(AttackTemplate::additive(0.5)));
        let source = LikelihoodSource::from_config(&cfg.data).unwrap();
        let alone = run_phase_protocol(&cfg, &source, 17).unwrap();
        let batch = run_experiment(&cfg).unwrap();
        let mut from_batch = batch.records[17].clone();
        from_batch.wall_time_us = alone.wall_time_us;
        assert_eq!(from_batch, alone);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3, 1, 2]), Some(2.0));
        assert_eq!(median(&[4, 1, 2, 3]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
