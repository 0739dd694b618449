//! Output files.
//!
//! A run writes `phases.csv` or `phases.json` with one record per phase
//! and `summary.json` holding the metrics, the config and the seed.
//! Per-phase columns, in order: `phase_id, ground_truth, decision,
//! iterations, detection_iteration, removed_node, wall_time_us, attacker,
//! converged, aborted, removals, attacker_removed, final_attack_avg, final_normal_avg,
//! dataset_wrapped`. Empty CSV cells mean "none".

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nids_core::consensus::TraceSample;
use nids_core::observer::ResidualSample;
use nids_core::outlier::ThresholdSample;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::HarnessError;
use crate::harness::{ExperimentResult, Metrics, PhaseRecord, PhaseTrace};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub metrics: Metrics,
    pub config: ExperimentConfig,
    pub elapsed_us: u64,
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(HarnessError::io(path))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), HarnessError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(HarnessError::io(path))
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(HarnessError::io(path))
}

pub fn read_phases_csv(path: &Path) -> Result<Vec<PhaseRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// Writes the per-phase file and `summary.json` into `dir`; returns their paths.
pub fn export(
    result: &ExperimentResult,
    cfg: &ExperimentConfig,
    format: OutputFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let phases = match format {
        OutputFormat::Csv => {
            let p = dir.join("phases.csv");
            write_csv(&result.records, &p)?;
            p
        }
        OutputFormat::Json => {
            let p = dir.join("phases.json");
            write_json(&result.records, &p)?;
            p
        }
    };
    let summary = Summary {
        seed: cfg.seed,
        metrics: result.metrics.clone(),
        config: cfg.clone(),
        elapsed_us: result.elapsed.as_micros() as u64,
    };
    let summary_path = dir.join("summary.json");
    write_json(&summary, &summary_path)?;
    Ok(vec![phases, summary_path])
}

#[derive(Serialize)]
struct StateRow<'a> {
    t: usize,
    node: usize,
    channel: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct ThresholdRow<'a> {
    t: usize,
    node: usize,
    channel: &'a str,
    lambda: f64,
    flagged: String,
}

#[derive(Serialize)]
struct ResidualRow<'a> {
    t: usize,
    channel: &'a str,
    observer: usize,
    subject: usize,
    value: f64,
}

/// `t, node, channel, value` for every live node at every iteration.
pub fn write_trajectory(samples: &[TraceSample], path: &Path) -> Result<(), HarnessError> {
    let rows: Vec<StateRow> = samples
        .iter()
        .flat_map(|s| {
            let attack = s.labels.iter().zip(&s.attack).map(move |(&node, &value)| StateRow {
                t: s.t,
                node,
                channel: "attack",
                value,
            });
            let normal = s.labels.iter().zip(&s.normal).map(move |(&node, &value)| StateRow {
                t: s.t,
                node,
                channel: "normal",
                value,
            });
            attack.chain(normal)
        })
        .collect();
    write_csv(&rows, path)
}

/// `t, node, channel, lambda, flagged` with flagged neighbors joined by `;`.
pub fn write_thresholds(samples: &[ThresholdSample], path: &Path) -> Result<(), HarnessError> {
    let rows: Vec<ThresholdRow> = samples
        .iter()
        .map(|s| ThresholdRow {
            t: s.t,
            node: s.node,
            channel: s.channel.as_str(),
            lambda: s.lambda,
            flagged: s.flagged.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
        })
        .collect();
    write_csv(&rows, path)
}

/// `t, channel, observer, subject, value` for every observed entry.
pub fn write_residuals(samples: &[ResidualSample], path: &Path) -> Result<(), HarnessError> {
    let rows: Vec<ResidualRow> = samples
        .iter()
        .map(|s| ResidualRow {
            t: s.t,
            channel: s.channel.as_str(),
            observer: s.observer,
            subject: s.subject,
            value: s.value,
        })
        .collect();
    write_csv(&rows, path)
}

/// Writes whichever traces are non-empty into `dir`.
pub fn write_trace(trace: &PhaseTrace, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    let p = dir.join("trajectory.csv");
    write_trajectory(&trace.trajectory, &p)?;
    written.push(p);
    if !trace.thresholds.is_empty() {
        let p = dir.join("thresholds.csv");
        write_thresholds(&trace.thresholds, &p)?;
        written.push(p);
    }
    if !trace.residuals.is_empty() {
        let p = dir.join("residuals.csv");
        write_residuals(&trace.residuals, &p)?;
        written.push(p);
    }
    Ok(written)
}

/// Two histograms side by side: `iterations, <left>, <right>`.
pub fn write_histograms(
    left: (&str, &BTreeMap<usize, usize>),
    right: (&str, &BTreeMap<usize, usize>),
    path: &Path,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["iterations", left.0, right.0]).map_err(csv_err(path))?;
    let keys: std::collections::BTreeSet<usize> = left.1.keys().chain(right.1.keys()).copied().collect();
    for k in keys {
        let l = left.1.get(&k).copied().unwrap_or(0);
        let r = right.1.get(&k).copied().unwrap_or(0);
        w.write_record([k.to_string(), l.to_string(), r.to_string()]).map_err(csv_err(path))?;
    }
    w.flush().map_err(HarnessError::io(path))
}
