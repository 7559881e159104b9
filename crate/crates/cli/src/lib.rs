//! Commands behind the `sa-procure` binary. Each returns the human-readable
//! summary it wants printed and the files it wrote.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sa_procure::annealing::TemperatureSchedule;
use sa_procure::catalog::Catalog;
use sa_procure::error::{Error, Result, Violation};
use sa_procure::experiment::{load_experiment, read_file, Experiment};
use sa_procure::oracle::stationarity_check;
use sa_procure::presets;
use sa_procure::report::{
    to_json_pretty, write_sweep_csv, write_trace_csv, RunSummary, SweepPoint, SweepReport, REPORT_SCHEMA_VERSION,
};
use sa_procure::simulator::{
    phase_summaries, replicate_many, replicate_phases, run_stream, JobsUntil, Metric, PhaseSummary,
};
use serde::Serialize;

/// Default number of replications for `sweep`.
pub const DEFAULT_REPLICATIONS: usize = 100;

/// An experiment file on disk or a compiled-in preset (`preset:<name>`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Spec {
    Preset(String),
    File(PathBuf),
}

impl FromStr for Spec {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.strip_prefix("preset:") {
            Some(name) => Spec::Preset(name.to_string()),
            None => Spec::File(PathBuf::from(s)),
        })
    }
}

impl Spec {
    pub fn load(&self) -> Result<Experiment> {
        match self {
            Spec::Preset(name) => presets::preset(name),
            Spec::File(path) => load_experiment(path),
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        write_atomic(&path, bytes)?;
        self.files.push(path);
        Ok(())
    }
}

/// Writes through a temporary sibling so a failed command never leaves a
/// truncated artifact under the final name.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn show_jobs(j: JobsUntil) -> String {
    match j {
        JobsUntil::Found(k) => k.to_string(),
        JobsUntil::NotFound => "not reached".into(),
    }
}

pub fn cmd_run(spec: &Spec, seed: Option<u64>, out_dir: &Path) -> Result<Outcome> {
    let exp = spec.load()?;
    let seed = seed.unwrap_or(exp.default_seed);
    let trace = run_stream(&exp, seed)?;
    let summary = RunSummary::new(&trace, &exp);

    let mut out = Outcome::default();
    let stem = format!("{}-s{seed}", exp.name);
    out.write(
        out_dir.join(format!("{stem}.trace.csv")),
        &csv_bytes(|b| write_trace_csv(&trace, b))?,
    )?;
    out.write(
        out_dir.join(format!("{stem}.summary.json")),
        to_json_pretty(&summary)?.as_bytes(),
    )?;

    let fin = &trace.final_state;
    let family = &exp.catalog.families()[fin.accepted_config.family].name;
    let s = &mut out.summary;
    writeln!(s, "experiment  {} ({} jobs, seed {seed})", exp.name, exp.job_count).unwrap();
    writeln!(s, "final       {family} x {} cores", fin.accepted_config.cores).unwrap();
    writeln!(s, "objective   {}", fin.accepted_objective).unwrap();
    if let Some(j) = summary.jobs_until_global_min {
        writeln!(s, "global min  {}", show_jobs(j)).unwrap();
    }
    let m = summary.moves;
    writeln!(
        s,
        "moves       improve {} / uphill {} / rejected {} / self-loop {}",
        m.improve, m.uphill_accepted, m.rejected, m.self_loop
    )
    .unwrap();
    Ok(out)
}

pub fn cmd_sweep(
    spec: &Spec,
    temperatures: &[f64],
    replications: usize,
    master_seed: Option<u64>,
    out_dir: &Path,
) -> Result<Outcome> {
    if temperatures.is_empty() {
        return Err(Error::domain("temperatures", "give at least one temperature"));
    }
    let exp = spec.load()?;
    let master_seed = master_seed.unwrap_or(exp.default_seed);
    let mut points = Vec::with_capacity(temperatures.len());
    for &tau in temperatures {
        let e = exp.clone().with_schedule(TemperatureSchedule::fixed(tau)?);
        points.push(SweepPoint {
            tau,
            stats: replicate_many(&e, &Metric::ALL, replications, master_seed)?,
        });
    }
    let report = SweepReport {
        schema_version: REPORT_SCHEMA_VERSION,
        fingerprint: exp.fingerprint(),
        experiment: exp.name.clone(),
        master_seed,
        replications,
        points,
    };

    let mut out = Outcome::default();
    out.write(
        out_dir.join(format!("{}.sweep.csv", exp.name)),
        &csv_bytes(|b| write_sweep_csv(&report, b))?,
    )?;
    out.write(
        out_dir.join(format!("{}.sweep.json", exp.name)),
        to_json_pretty(&report)?.as_bytes(),
    )?;

    let s = &mut out.summary;
    writeln!(s, "experiment  {} ({replications} replications, master seed {master_seed})", exp.name).unwrap();
    writeln!(s, "{:>8}  {:>26}  {:>20}", "tau", "jobs until global min", "uphill accepted").unwrap();
    for p in &report.points {
        let by = |name: &str| p.stats.iter().find(|s| s.metric == name).expect("metric present");
        let j = by(Metric::JobsUntilGlobalMin.name());
        let u = by(sa_procure::MoveKind::UphillAccepted.as_str());
        let censored = if j.censored > 0 {
            format!(" ({} censored)", j.censored)
        } else {
            String::new()
        };
        writeln!(
            s,
            "{:>8}  {:>12.1} ± {:<11.1}  {:>9.1} ± {:<8.1}{censored}",
            p.tau, j.mean, j.ci_halfwidth, u.mean, u.ci_halfwidth
        )
        .unwrap();
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct AdaptReplications<'a> {
    schema_version: u32,
    fingerprint: String,
    experiment: &'a str,
    master_seed: u64,
    replications: usize,
    phases: Vec<PhaseTally>,
}

#[derive(Debug, Serialize)]
struct PhaseTally {
    phase: usize,
    reached: usize,
    jobs_to_minimizer: Vec<Option<u64>>,
}

pub fn cmd_adapt(spec: &Spec, seed: Option<u64>, replications: Option<usize>, out_dir: &Path) -> Result<Outcome> {
    let exp = spec.load()?;
    if exp.workload.events().is_empty() {
        return Err(Error::Refused(format!(
            "experiment `{}` has no change events; add an [[events]] entry with at_job_index to its workload file, \
             or use `run` for a stationary workload",
            exp.name
        )));
    }
    let seed = seed.unwrap_or(exp.default_seed);
    let trace = run_stream(&exp, seed)?;
    let phases = phase_summaries(&trace, &exp)?;
    let summary = RunSummary::new(&trace, &exp).with_phases(phases.clone());

    let mut out = Outcome::default();
    let stem = format!("{}-s{seed}", exp.name);
    out.write(
        out_dir.join(format!("{stem}.adapt.trace.csv")),
        &csv_bytes(|b| write_trace_csv(&trace, b))?,
    )?;
    out.write(
        out_dir.join(format!("{stem}.adapt.json")),
        to_json_pretty(&summary)?.as_bytes(),
    )?;
    writeln!(out.summary, "experiment  {} (seed {seed})", exp.name).unwrap();
    for p in &phases {
        write_phase(&mut out.summary, &exp.catalog, p);
    }

    if let Some(n) = replications {
        let runs = replicate_phases(&exp, n, seed)?;
        let tallies: Vec<PhaseTally> = (0..exp.workload.phase_count())
            .map(|phase| {
                let jobs: Vec<Option<u64>> = runs
                    .iter()
                    .map(|r| match r.iter().find(|p| p.phase == phase).map(|p| p.jobs_to_minimizer) {
                        Some(JobsUntil::Found(k)) => Some(k),
                        _ => None,
                    })
                    .collect();
                PhaseTally {
                    phase,
                    reached: jobs.iter().flatten().count(),
                    jobs_to_minimizer: jobs,
                }
            })
            .collect();
        let mut rows = String::from("replication,phase,jobs_to_minimizer\n");
        for t in &tallies {
            for (i, j) in t.jobs_to_minimizer.iter().enumerate() {
                let j = j.map(|k| k.to_string()).unwrap_or_default();
                writeln!(rows, "{i},{},{j}", t.phase).unwrap();
            }
        }
        out.write(out_dir.join(format!("{}.adapt-replications.csv", exp.name)), rows.as_bytes())?;
        let report = AdaptReplications {
            schema_version: REPORT_SCHEMA_VERSION,
            fingerprint: exp.fingerprint(),
            experiment: &exp.name,
            master_seed: seed,
            replications: n,
            phases: tallies,
        };
        out.write(
            out_dir.join(format!("{}.adapt-replications.json", exp.name)),
            to_json_pretty(&report)?.as_bytes(),
        )?;
        for t in &report.phases {
            writeln!(out.summary, "phase {}     minimizer reached in {}/{n} replications", t.phase, t.reached).unwrap();
        }
    }
    Ok(out)
}

fn write_phase(s: &mut String, catalog: &Catalog, p: &PhaseSummary) {
    let name = |f: usize| &catalog.families()[f].name;
    writeln!(
        s,
        "phase {}     jobs {}..={}: minimizer {} x {} (Y = {}), best seen {} at {} x {}, reached after {} jobs",
        p.phase,
        p.first_job,
        p.last_job,
        name(p.minimizer.family),
        p.minimizer.cores,
        p.minimum_objective,
        p.best_objective,
        name(p.best_config.family),
        p.best_config.cores,
        show_jobs(p.jobs_to_minimizer)
    )
    .unwrap();
}

#[derive(Debug, Serialize)]
struct OracleOutput<'a> {
    schema_version: u32,
    fingerprint: String,
    experiment: &'a str,
    #[serde(flatten)]
    report: &'a sa_procure::oracle::StationarityReport,
}

pub fn cmd_oracle(spec: &Spec, tau: f64, steps: u64, seed: Option<u64>, out_dir: &Path) -> Result<Outcome> {
    let exp = spec.load()?;
    let seed = seed.unwrap_or(exp.default_seed);
    let report = stationarity_check(&exp, tau, steps, seed)?;

    let mut out = Outcome::default();
    let mut rows = String::from("family,cores,objective,gibbs,matrix_stationary,empirical\n");
    for (i, c) in report.states.iter().enumerate() {
        writeln!(
            rows,
            "{},{},{},{},{},{}",
            c.family, c.cores, report.objective[i], report.gibbs[i], report.matrix_stationary[i], report.empirical[i]
        )
        .unwrap();
    }
    let stem = format!("{}-tau{tau}", exp.name);
    out.write(out_dir.join(format!("{stem}.oracle.csv")), rows.as_bytes())?;
    let doc = OracleOutput {
        schema_version: REPORT_SCHEMA_VERSION,
        fingerprint: exp.fingerprint(),
        experiment: &exp.name,
        report: &report,
    };
    out.write(out_dir.join(format!("{stem}.oracle.json")), to_json_pretty(&doc)?.as_bytes())?;

    let s = &mut out.summary;
    writeln!(s, "experiment        {} ({} states, tau {tau})", exp.name, report.states.len()).unwrap();
    writeln!(s, "TV(matrix, gibbs)    {:.3e}", report.tv_matrix_vs_gibbs).unwrap();
    writeln!(s, "TV(empirical, gibbs) {:.3e} over {steps} steps", report.tv_empirical_vs_gibbs).unwrap();
    Ok(out)
}

/// Lists a catalog's families; with no argument, lists every preset.
pub fn cmd_catalog_list(catalog: Option<&str>) -> Result<Outcome> {
    let mut out = Outcome::default();
    let s = &mut out.summary;
    let Some(arg) = catalog else {
        writeln!(s, "preset catalogs:    {}", presets::CATALOGS.join(", ")).unwrap();
        writeln!(s, "preset experiments: {}", presets::PRESETS.join(", ")).unwrap();
        writeln!(s, "use `catalog-list preset:<catalog>` or `catalog-list <file>` for details").unwrap();
        return Ok(out);
    };
    let cat = match arg.strip_prefix("preset:") {
        Some(name) => presets::preset_catalog(name)?,
        None => {
            let path = Path::new(arg);
            Catalog::from_toml_str(&read_file(path)?).map_err(|message| Error::Parse {
                path: path.to_path_buf(),
                message,
            })?
        }
    };
    writeln!(s, "{:>3}  {:<28} {:>12} {:>14}", "#", "family", "$/core-hour", "GiB/core").unwrap();
    for f in cat.families() {
        let mark = if f.hypothetical { "  (hypothetical)" } else { "" };
        writeln!(
            s,
            "{:>3}  {:<28} {:>12.5} {:>14.3}{mark}",
            f.ordinal, f.name, f.price_per_core_hour, f.memory_per_core
        )
        .unwrap();
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    schema_version: u32,
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a Path>,
    violations: Vec<Violation>,
}

/// One-line JSON description of an error, for stderr.
pub fn error_json(e: &Error) -> String {
    let path = match e {
        Error::Io { path, .. } | Error::Parse { path, .. } => Some(path.as_path()),
        _ => None,
    };
    serde_json::to_string(&ErrorReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: e.kind(),
        message: e.to_string(),
        path,
        violations: e.violations(),
    })
    .expect("error report serializes")
}

/// Same shape as [`error_json`] for command-line usage errors.
pub fn usage_error_json(message: &str) -> String {
    serde_json::to_string(&ErrorReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: "usage",
        message: message.trim_end().to_string(),
        path: None,
        violations: Vec::new(),
    })
    .expect("error report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_prefix() {
        assert_eq!("preset:bimodal".parse::<Spec>().unwrap(), Spec::Preset("bimodal".into()));
        assert_eq!("a/b.toml".parse::<Spec>().unwrap(), Spec::File("a/b.toml".into()));
    }

    #[test]
    fn error_json_carries_violations() {
        let e = Error::Validation(vec![Violation::new("lambda", "must be >= 0")]);
        let v: serde_json::Value = serde_json::from_str(&error_json(&e)).unwrap();
        assert_eq!(v["kind"], "validation");
        assert_eq!(v["violations"][0]["field"], "lambda");
    }
}
