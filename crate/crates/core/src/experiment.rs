//! Experiment definitions: what is searched, under which workload, with which
//! schedule, and how the stream is run. Loaded from a TOML file that points at
//! a catalog file and a workload file:
//!
//! ```toml
//! schema_version = 1
//! name = "bimodal"
//! catalog = "../catalogs/illustrative-ec2.toml"
//! workload = "../workloads/bimodal.toml"
//! lambda = 0.0
//! job_count = 2000
//! seed = 7
//! not_found = "treat_as_job_count"
//!
//! [space]
//! cores_min = 1
//! cores_max = 20
//! families = [0, 0]          # optional inclusive ordinal range
//!
//! [schedule]
//! kind = "fixed"
//! tau = 25.0
//!
//! [mode]                     # optional
//! blend = "expected"         # or "sample"
//! greedy = false
//! remeasure_baseline = false
//!
//! [start]                    # optional; uniform random start otherwise
//! family = 0
//! cores = 1
//! ```
//!
//! Relative paths are resolved against the directory of the experiment file.

use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annealing::{AcceptanceRule, TemperatureSchedule};
use crate::catalog::{build_search_space, Catalog, Configuration, SearchSpace};
use crate::error::{Error, Result, Violation};
use crate::workload::WorkloadStream;

pub const EXPERIMENT_SCHEMA_VERSION: u32 = 1;

/// How a blended workload turns into one objective value per job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendMode {
    /// Every job is the weighted mix of all job types.
    #[default]
    Expected,
    /// Every job is one job type drawn with probability `alpha`.
    Sample,
}

/// What replication statistics do with runs that never reach the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NotFoundPolicy {
    /// Count the run as `job_count` and flag it as censored.
    #[default]
    TreatAsJobCount,
    ExcludeAndReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Experiment {
    pub name: String,
    pub catalog: Catalog,
    pub space: SearchSpace,
    pub workload: WorkloadStream,
    pub lambda: f64,
    pub schedule: TemperatureSchedule,
    pub job_count: u64,
    pub blend_mode: BlendMode,
    pub rule: AcceptanceRule,
    /// Re-measure the accepted configuration every job instead of reusing
    /// the objective recorded when it was accepted.
    pub remeasure_baseline: bool,
    pub start: Option<Configuration>,
    pub not_found: NotFoundPolicy,
    /// Seed used when the caller does not supply one. Not part of the fingerprint.
    #[serde(skip)]
    pub default_seed: u64,
}

impl Experiment {
    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            v.push(Violation::new("lambda", format!("must be finite and >= 0, got {}", self.lambda)));
        }
        if let Err(e) = self.schedule.validate() {
            v.extend(e.violations());
        }
        let (_, fam_hi) = self.space.family_range();
        if fam_hi >= self.catalog.len() {
            v.push(Violation::new(
                "space.families",
                format!("ordinal {fam_hi} is outside the catalog (0..{})", self.catalog.len()),
            ));
        }
        if let Some(s) = self.start {
            if !self.space.contains(s) {
                v.push(Violation::new("start", format!("{s} is outside the search space")));
            }
        }
        for (i, e) in self.workload.events().iter().enumerate() {
            if e.at_job_index > self.job_count {
                v.push(Violation::new(
                    format!("workload.events[{i}].at_job_index"),
                    format!("{} is beyond job_count {}", e.at_job_index, self.job_count),
                ));
            }
        }
        v.extend(self.workload.validate_over(&self.space));
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// SHA-256 over the canonical JSON encoding of every input.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("experiment serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn with_schedule(mut self, schedule: TemperatureSchedule) -> Self {
        self.schedule = schedule;
        self
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    schema_version: u32,
    name: String,
    catalog: PathBuf,
    workload: PathBuf,
    #[serde(default)]
    lambda: f64,
    job_count: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    not_found: NotFoundPolicy,
    space: SpaceFile,
    schedule: TemperatureSchedule,
    #[serde(default)]
    mode: ModeFile,
    #[serde(default)]
    start: Option<Configuration>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    cores_min: u32,
    cores_max: u32,
    #[serde(default)]
    families: Option<[usize; 2]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeFile {
    #[serde(default)]
    blend: BlendMode,
    #[serde(default)]
    greedy: bool,
    #[serde(default)]
    remeasure_baseline: bool,
}

/// Lexically normalizes `a/b/../c` to `a/c` without touching the filesystem.
pub(crate) fn normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other),
        }
    }
    out
}

/// Reads a file, mapping failures to an error that names the path.
pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and validates an experiment file from disk.
pub fn load_experiment(path: &Path) -> Result<Experiment> {
    let text = read_file(path)?;
    parse_experiment(&text, path, &mut |p: &Path| read_file(p))
}

/// Parses an experiment whose file lives at `origin`; referenced files are
/// fetched through `read`, which receives paths joined onto `origin`'s directory.
pub fn parse_experiment(
    text: &str,
    origin: &Path,
    read: &mut dyn FnMut(&Path) -> Result<String>,
) -> Result<Experiment> {
    let file: ExperimentFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut v = Vec::new();
    if file.schema_version != EXPERIMENT_SCHEMA_VERSION {
        v.push(Violation::new(
            "schema_version",
            format!(
                "unsupported schema_version {} (expected {EXPERIMENT_SCHEMA_VERSION})",
                file.schema_version
            ),
        ));
    }
    let dir = origin.parent().unwrap_or_else(|| Path::new(""));

    let catalog_path = normalize(&dir.join(&file.catalog));
    let catalog = read(&catalog_path).and_then(|text| {
        Catalog::from_toml_str(&text).map_err(|message| Error::Parse {
            path: catalog_path.clone(),
            message,
        })
    });

    let workload_path = normalize(&dir.join(&file.workload));
    let workload_dir = workload_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let workload = read(&workload_path).and_then(|text| {
        WorkloadStream::from_toml_str(&text, &mut |grid: &str| read(&normalize(&workload_dir.join(grid))))
            .map_err(|e| match e {
                Error::Parse { message, .. } => Error::Parse {
                    path: workload_path.clone(),
                    message,
                },
                other => other,
            })
    });

    // An unreadable file is reported on its own; other problems are collected.
    let (catalog, workload) = match (catalog, workload) {
        (Ok(c), Ok(w)) => (c, w),
        (c, w) => {
            let errors = [("catalog", c.err()), ("workload", w.err())];
            for (field, e) in errors {
                match e {
                    Some(e @ Error::Io { .. }) => return Err(e),
                    Some(Error::Domain { field: f, reason }) => {
                        v.push(Violation::new(format!("{field}.{f}"), reason))
                    }
                    Some(e) => v.push(Violation::new(field, e.to_string())),
                    None => {}
                }
            }
            return Err(Error::Validation(v));
        }
    };

    let space = build_search_space(&catalog, file.space.cores_min, file.space.cores_max)
        .and_then(|s| match file.space.families {
            Some([lo, hi]) => s.restrict_families(lo, hi),
            None => Ok(s),
        });
    let space = match space {
        Ok(s) => s,
        Err(e) => {
            v.extend(e.violations().into_iter().map(|x| Violation::new(format!("space.{}", x.field), x.reason)));
            return Err(Error::Validation(v));
        }
    };

    let exp = Experiment {
        name: file.name,
        catalog,
        space,
        workload,
        lambda: file.lambda,
        schedule: file.schedule,
        job_count: file.job_count,
        blend_mode: file.mode.blend,
        rule: if file.mode.greedy {
            AcceptanceRule::Greedy
        } else {
            AcceptanceRule::HeatBath
        },
        remeasure_baseline: file.mode.remeasure_baseline,
        start: file.start,
        not_found: file.not_found,
        default_seed: file.seed,
    };
    match exp.validate() {
        Ok(()) if v.is_empty() => Ok(exp),
        Ok(()) => Err(Error::Validation(v)),
        Err(e) => {
            v.extend(e.violations());
            Err(Error::Validation(v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_paths() {
        assert_eq!(normalize(Path::new("experiments/../catalogs/a.toml")), PathBuf::from("catalogs/a.toml"));
        assert_eq!(normalize(Path::new("./a/./b")), PathBuf::from("a/b"));
        assert_eq!(normalize(Path::new("../x")), PathBuf::from("../x"));
    }
}
