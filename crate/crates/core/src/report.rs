//! CSV and JSON artifacts. Every CSV starts with a header row and every JSON
//! document carries `schema_version` and the experiment fingerprint.
//!
//! Trace CSV columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `job_index` | 1-based position in the stream |
//! | `phase` | workload phase, 0 before the first change event |
//! | `job_type` | component that produced the job, or `blend` |
//! | `proposed_family`, `proposed_cores` | candidate configuration |
//! | `exec_time` | seconds |
//! | `cost` | dollars |
//! | `objective` | `exec_time + lambda * cost` |
//! | `accepted` | `true` if the candidate became the held configuration |
//! | `accepted_family`, `accepted_cores` | held configuration after the job |
//! | `temperature` | τ used for the decision |
//! | `move_kind` | `improve`, `uphill_accepted`, `rejected` or `self_loop` |
//!
//! Floats are written in shortest round-trip form.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::experiment::Experiment;
use crate::simulator::{
    explore_exploit_counts, jobs_until_global_min, InitialMeasurement, JobsUntil, MoveCounts, PhaseSummary,
    ReplicationStats, RunTrace,
};
use crate::annealing::AnnealerState;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const TRACE_COLUMNS: [&str; 13] = [
    "job_index",
    "phase",
    "job_type",
    "proposed_family",
    "proposed_cores",
    "exec_time",
    "cost",
    "objective",
    "accepted",
    "accepted_family",
    "accepted_cores",
    "temperature",
    "move_kind",
];

pub fn write_trace_csv<W: Write>(trace: &RunTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in &trace.records {
        w.write_record([
            r.job_index.to_string(),
            r.phase.to_string(),
            r.job_type.clone(),
            r.proposed.family.to_string(),
            r.proposed.cores.to_string(),
            r.exec_time.to_string(),
            r.cost.to_string(),
            r.objective.to_string(),
            r.accepted.to_string(),
            r.accepted_config.family.to_string(),
            r.accepted_config.cores.to_string(),
            r.temperature.to_string(),
            r.move_kind.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// JSON sidecar of a single run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub fingerprint: String,
    pub experiment: String,
    pub seed: u64,
    pub job_count: u64,
    pub lambda: f64,
    pub initial: InitialMeasurement,
    pub final_state: AnnealerState,
    pub jobs_until_global_min: Option<JobsUntil>,
    pub moves: MoveCounts,
    pub reheats: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub phases: Vec<PhaseSummary>,
}

impl RunSummary {
    /// `jobs_until_global_min` is left empty when the minimizer is not unique.
    pub fn new(trace: &RunTrace, exp: &Experiment) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            fingerprint: trace.fingerprint.clone(),
            experiment: exp.name.clone(),
            seed: trace.seed,
            job_count: exp.job_count,
            lambda: exp.lambda,
            initial: trace.initial.clone(),
            final_state: trace.final_state,
            jobs_until_global_min: jobs_until_global_min(trace, exp).ok(),
            moves: explore_exploit_counts(trace),
            reheats: trace.reheats.clone(),
            phases: Vec::new(),
        }
    }

    pub fn with_phases(mut self, phases: Vec<PhaseSummary>) -> Self {
        self.phases = phases;
        self
    }
}

/// Replication statistics of one temperature.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub tau: f64,
    pub stats: Vec<ReplicationStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub fingerprint: String,
    pub experiment: String,
    pub master_seed: u64,
    pub replications: usize,
    pub points: Vec<SweepPoint>,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "tau",
    "metric",
    "n",
    "mean",
    "stddev",
    "ci_halfwidth",
    "min",
    "max",
    "censored",
    "excluded",
];

/// Long format: one row per (temperature, metric).
pub fn write_sweep_csv<W: Write>(report: &SweepReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_COLUMNS)?;
    for p in &report.points {
        for s in &p.stats {
            w.write_record([
                p.tau.to_string(),
                s.metric.clone(),
                s.values.len().to_string(),
                s.mean.to_string(),
                s.stddev.to_string(),
                s.ci_halfwidth.to_string(),
                s.min.to_string(),
                s.max.to_string(),
                s.censored.to_string(),
                s.excluded.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}
