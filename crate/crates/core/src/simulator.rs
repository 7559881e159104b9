//! Job-stream driver: for every arriving job, propose a configuration, run the
//! job on it (sample an execution time), price it, score it and let the
//! annealer accept or reject.
//!
//! Random draws per job, in order: one proposal draw; one job-type draw in
//! [`BlendMode::Sample`]; noise draws for the candidate (one per sampled
//! component); noise draws for the re-measured baseline when enabled; one
//! acceptance draw unless the proposal is a self-loop.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealing::{objective, propose, AnnealerState, MoveKind};
use crate::catalog::{job_cost, Configuration};
use crate::error::{Error, Result};
use crate::experiment::{BlendMode, Experiment, NotFoundPolicy};
use crate::workload::{sample_exec_time, BlendSpec};

/// Job-type label used for records of expected-mode blends with several components.
pub const BLEND_JOB_TYPE: &str = "blend";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_index: u64,
    /// Workload phase that produced this job (0 before the first change event).
    pub phase: usize,
    pub job_type: String,
    pub proposed: Configuration,
    pub exec_time: f64,
    pub cost: f64,
    /// Always `exec_time + lambda * cost`.
    pub objective: f64,
    pub accepted: bool,
    /// Configuration held after this job's decision.
    pub accepted_config: Configuration,
    pub temperature: f64,
    pub move_kind: MoveKind,
}

/// Measurement of the starting configuration taken before job 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialMeasurement {
    pub config: Configuration,
    pub job_type: String,
    pub exec_time: f64,
    pub cost: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub fingerprint: String,
    pub seed: u64,
    pub lambda: f64,
    pub initial: InitialMeasurement,
    pub records: Vec<JobRecord>,
    pub final_state: AnnealerState,
    /// Steps at which a reheat fired.
    pub reheats: Vec<u64>,
}

impl RunTrace {
    /// Sequence of accepted configurations, starting with the initial one.
    pub fn accepted_path(&self) -> impl Iterator<Item = Configuration> + '_ {
        std::iter::once(self.initial.config).chain(self.records.iter().map(|r| r.accepted_config))
    }
}

#[derive(Debug, Clone)]
struct Measurement {
    job_type: String,
    exec_time: f64,
    cost: f64,
    objective: f64,
}

#[derive(Debug, Clone, Copy)]
enum JobDraw {
    Expected,
    Component(usize),
}

fn draw_job(blend: &BlendSpec, mode: BlendMode, rng: &mut impl RngCore) -> JobDraw {
    match mode {
        BlendMode::Expected => JobDraw::Expected,
        BlendMode::Sample => JobDraw::Component(blend.pick(rng.random())),
    }
}

fn measure(
    exp: &Experiment,
    config: Configuration,
    blend: &BlendSpec,
    draw: JobDraw,
    rng: &mut impl RngCore,
) -> Result<Measurement> {
    let noise = exp.workload.noise();
    let components = blend.components();
    let (job_type, exec_time) = match draw {
        JobDraw::Expected => {
            let mut t = 0.0;
            for c in components {
                t += c.alpha * sample_exec_time(&c.curve, noise, config, rng)?;
            }
            let label = match components {
                [only] => only.job_type.clone(),
                _ => BLEND_JOB_TYPE.to_string(),
            };
            (label, t)
        }
        JobDraw::Component(i) => {
            let c = &components[i];
            (c.job_type.clone(), sample_exec_time(&c.curve, noise, config, rng)?)
        }
    };
    let cost = job_cost(config, exec_time, &exp.catalog)?;
    Ok(Measurement {
        job_type,
        exec_time,
        cost,
        objective: objective(exec_time, cost, exp.lambda)?,
    })
}

/// Noiseless expected-mode objective of every configuration in phase `phase`,
/// indexed like the search space.
pub fn objective_landscape(exp: &Experiment, phase: usize) -> Result<Vec<f64>> {
    let blend = exp
        .workload
        .phase(phase)
        .ok_or_else(|| Error::domain("phase", format!("no workload phase {phase}")))?;
    exp.space
        .iter()
        .map(|c| {
            let t = blend.mean_exec_time(c)?;
            objective(t, job_cost(c, t, &exp.catalog)?, exp.lambda)
        })
        .collect()
}

/// Unique minimizer of the phase's noiseless objective, found by exhaustive scan.
pub fn global_minimizer(exp: &Experiment, phase: usize) -> Result<Configuration> {
    let ys = objective_landscape(exp, phase)?;
    let best = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let ties: Vec<usize> = (0..ys.len())
        .filter(|&i| (ys[i] - best).abs() <= 1e-12 * best.abs().max(1.0))
        .collect();
    if ties.len() != 1 {
        return Err(Error::AmbiguousMinimizer {
            count: ties.len(),
            value: best,
        });
    }
    Ok(exp.space.config_at(ties[0]).expect("index within space"))
}

/// Validates `exp` and runs one seeded job stream.
pub fn run_stream(exp: &Experiment, seed: u64) -> Result<RunTrace> {
    exp.validate()?;
    run_validated(exp, seed, exp.fingerprint())
}

fn run_validated(exp: &Experiment, seed: u64, fingerprint: String) -> Result<RunTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = &exp.space;

    let x0 = match exp.start {
        Some(s) => s,
        None => space
            .config_at(rng.random_range(0..space.len() as u64) as usize)
            .expect("index within space"),
    };
    let (_, blend) = exp.workload.active(1);
    let draw = draw_job(blend, exp.blend_mode, &mut rng);
    let m0 = measure(exp, x0, blend, draw, &mut rng)?;

    let mut state = AnnealerState::new(x0, m0.objective, exp.schedule.temperature(0, None))?;
    let mut monitor = exp.schedule.monitor();
    let mut reheats = Vec::new();
    let mut records = Vec::with_capacity(exp.job_count as usize);

    for n in 1..=exp.job_count {
        let reheat_from = monitor.as_ref().and_then(|m| m.fired_at());
        let tau = exp.schedule.temperature(state.step_count, reheat_from);
        state.set_temperature(tau)?;

        let proposal = propose(&state, space, &mut rng);
        let (phase, blend) = exp.workload.active(n);
        let draw = draw_job(blend, exp.blend_mode, &mut rng);
        let m = measure(exp, proposal.candidate, blend, draw, &mut rng)?;
        if exp.remeasure_baseline && !proposal.self_loop {
            state.accepted_objective = measure(exp, state.accepted_config, blend, draw, &mut rng)?.objective;
        }
        let outcome = state.step(&proposal, m.objective, exp.rule, &mut rng)?;

        if let Some(mon) = monitor.as_mut() {
            if mon.observe(state.step_count, state.accepted_objective) {
                reheats.push(state.step_count);
            }
        }
        records.push(JobRecord {
            job_index: n,
            phase,
            job_type: m.job_type,
            proposed: proposal.candidate,
            exec_time: m.exec_time,
            cost: m.cost,
            objective: m.objective,
            accepted: outcome.accepted(),
            accepted_config: state.accepted_config,
            temperature: tau,
            move_kind: outcome.kind,
        });
    }

    Ok(RunTrace {
        fingerprint,
        seed,
        lambda: exp.lambda,
        initial: InitialMeasurement {
            config: x0,
            job_type: m0.job_type,
            exec_time: m0.exec_time,
            cost: m0.cost,
            objective: m0.objective,
        },
        records,
        final_state: state,
        reheats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobsUntil {
    /// Index of the first job after which the minimizer was held; 0 when the
    /// stream started on it.
    Found(u64),
    NotFound,
}

/// First job (restricted to `phase` when given) whose accepted configuration
/// equals `target`.
pub fn jobs_until(trace: &RunTrace, target: Configuration, phase: Option<usize>) -> JobsUntil {
    if phase.unwrap_or(0) == 0 && trace.initial.config == target {
        return JobsUntil::Found(0);
    }
    trace
        .records
        .iter()
        .filter(|r| phase.is_none_or(|p| r.phase == p))
        .find(|r| r.accepted_config == target)
        .map_or(JobsUntil::NotFound, |r| JobsUntil::Found(r.job_index))
}

/// Jobs until the initial workload's global minimizer is first held.
pub fn jobs_until_global_min(trace: &RunTrace, exp: &Experiment) -> Result<JobsUntil> {
    let target = global_minimizer(exp, 0)?;
    Ok(jobs_until(trace, target, Some(0)))
}

/// Per-phase view of a stream with change events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: usize,
    pub first_job: u64,
    pub last_job: u64,
    /// Noiseless minimizer of the phase's workload.
    pub minimizer: Configuration,
    pub minimum_objective: f64,
    /// Lowest measured objective among the phase's jobs.
    pub best_objective: f64,
    pub best_config: Configuration,
    /// Jobs into the phase until the minimizer is held; 0 if held on entry.
    pub jobs_to_minimizer: JobsUntil,
}

pub fn phase_summaries(trace: &RunTrace, exp: &Experiment) -> Result<Vec<PhaseSummary>> {
    let landscape_min = |p: usize| -> Result<(Configuration, f64)> {
        let x = global_minimizer(exp, p)?;
        let ys = objective_landscape(exp, p)?;
        Ok((x, ys[exp.space.index_of(x).expect("minimizer within space")]))
    };
    let mut out = Vec::new();
    for p in 0..exp.workload.phase_count() {
        let jobs: Vec<&JobRecord> = trace.records.iter().filter(|r| r.phase == p).collect();
        let (Some(first), Some(last)) = (jobs.first(), jobs.last()) else {
            continue;
        };
        let (minimizer, minimum_objective) = landscape_min(p)?;
        let held_on_entry = if first.job_index == 1 {
            trace.initial.config
        } else {
            trace.records[first.job_index as usize - 2].accepted_config
        };
        let jobs_to_minimizer = if held_on_entry == minimizer {
            JobsUntil::Found(0)
        } else {
            jobs.iter()
                .find(|r| r.accepted_config == minimizer)
                .map_or(JobsUntil::NotFound, |r| JobsUntil::Found(r.job_index - first.job_index + 1))
        };
        let best = jobs
            .iter()
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
            .expect("phase has jobs");
        out.push(PhaseSummary {
            phase: p,
            first_job: first.job_index,
            last_job: last.job_index,
            minimizer,
            minimum_objective,
            best_objective: best.objective,
            best_config: best.proposed,
            jobs_to_minimizer,
        });
    }
    Ok(out)
}

/// Phase summaries of `n` independent streams, in replication order.
pub fn replicate_phases(exp: &Experiment, n_replications: usize, master_seed: u64) -> Result<Vec<Vec<PhaseSummary>>> {
    exp.validate()?;
    let fingerprint = exp.fingerprint();
    (0..n_replications as u64)
        .into_par_iter()
        .map(|i| {
            let trace = run_validated(exp, replication_seed(master_seed, i), fingerprint.clone())?;
            phase_summaries(&trace, exp)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounts {
    pub improve: u64,
    pub uphill_accepted: u64,
    pub rejected: u64,
    pub self_loop: u64,
}

impl MoveCounts {
    pub fn total(&self) -> u64 {
        self.improve + self.uphill_accepted + self.rejected + self.self_loop
    }

    pub fn get(&self, kind: MoveKind) -> u64 {
        match kind {
            MoveKind::Improve => self.improve,
            MoveKind::UphillAccepted => self.uphill_accepted,
            MoveKind::Rejected => self.rejected,
            MoveKind::SelfLoop => self.self_loop,
        }
    }
}

pub fn explore_exploit_counts(trace: &RunTrace) -> MoveCounts {
    trace.records.iter().fold(MoveCounts::default(), |mut acc, r| {
        match r.move_kind {
            MoveKind::Improve => acc.improve += 1,
            MoveKind::UphillAccepted => acc.uphill_accepted += 1,
            MoveKind::Rejected => acc.rejected += 1,
            MoveKind::SelfLoop => acc.self_loop += 1,
        }
        acc
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    JobsUntilGlobalMin,
    Moves(MoveKind),
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::JobsUntilGlobalMin,
        Metric::Moves(MoveKind::Improve),
        Metric::Moves(MoveKind::UphillAccepted),
        Metric::Moves(MoveKind::Rejected),
        Metric::Moves(MoveKind::SelfLoop),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::JobsUntilGlobalMin => "jobs_until_global_min",
            Metric::Moves(k) => k.as_str(),
        }
    }
}

/// Sample statistics over replications. The confidence half-width is two
/// sample standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationStats {
    pub metric: String,
    pub values: Vec<f64>,
    pub mean: f64,
    pub stddev: f64,
    pub ci_halfwidth: f64,
    pub min: f64,
    pub max: f64,
    /// Runs that never reached the target and were counted as `job_count`.
    pub censored: usize,
    /// Runs that never reached the target and were left out.
    pub excluded: usize,
}

impl ReplicationStats {
    /// Two-pass mean and sample (n - 1) standard deviation.
    pub fn from_values(metric: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let metric = metric.into();
        if values.len() < 2 {
            return Err(Error::domain(
                "values",
                format!("`{metric}` needs at least 2 values for a sample deviation, got {}", values.len()),
            ));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let stddev = var.sqrt();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            metric,
            mean: mean.clamp(min, max),
            stddev,
            ci_halfwidth: 2.0 * stddev,
            min,
            max,
            values,
            censored: 0,
            excluded: 0,
        })
    }
}

/// Seed of replication `index` under `master_seed` (SplitMix64 finalizer).
pub fn replication_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `n` independent streams concurrently and summarizes each metric.
pub fn replicate_many(
    exp: &Experiment,
    metrics: &[Metric],
    n_replications: usize,
    master_seed: u64,
) -> Result<Vec<ReplicationStats>> {
    if n_replications < 2 {
        return Err(Error::domain("replications", "need at least 2 replications"));
    }
    exp.validate()?;
    let target = if metrics.contains(&Metric::JobsUntilGlobalMin) {
        Some(global_minimizer(exp, 0)?)
    } else {
        None
    };
    let fingerprint = exp.fingerprint();

    // Each replication yields one optional value per metric; `None` is "not found".
    let rows: Vec<Vec<Option<f64>>> = (0..n_replications as u64)
        .into_par_iter()
        .map(|i| {
            let trace = run_validated(exp, replication_seed(master_seed, i), fingerprint.clone())?;
            let counts = explore_exploit_counts(&trace);
            Ok(metrics
                .iter()
                .map(|m| match m {
                    Metric::JobsUntilGlobalMin => {
                        match jobs_until(&trace, target.expect("target computed"), Some(0)) {
                            JobsUntil::Found(k) => Some(k as f64),
                            JobsUntil::NotFound => None,
                        }
                    }
                    Metric::Moves(k) => Some(counts.get(*k) as f64),
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    metrics
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let mut values = Vec::with_capacity(rows.len());
            let mut missing = 0;
            for row in &rows {
                match row[j] {
                    Some(v) => values.push(v),
                    None => {
                        missing += 1;
                        if exp.not_found == NotFoundPolicy::TreatAsJobCount {
                            values.push(exp.job_count as f64);
                        }
                    }
                }
            }
            let mut stats = ReplicationStats::from_values(m.name(), values)?;
            match exp.not_found {
                NotFoundPolicy::TreatAsJobCount => stats.censored = missing,
                NotFoundPolicy::ExcludeAndReport => stats.excluded = missing,
            }
            Ok(stats)
        })
        .collect()
}

pub fn replicate(
    exp: &Experiment,
    metric: Metric,
    n_replications: usize,
    master_seed: u64,
) -> Result<ReplicationStats> {
    Ok(replicate_many(exp, &[metric], n_replications, master_seed)?.remove(0))
}
