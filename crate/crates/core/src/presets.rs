//! Experiments compiled into the library. All prices and curves are
//! illustrative.

use std::path::Path;

use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::experiment::{normalize, parse_experiment, Experiment};

macro_rules! preset_files {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!("../presets/", $path)))),*]
    };
}

static FILES: &[(&str, &str)] = preset_files![
    "catalogs/illustrative-ec2.toml",
    "catalogs/illustrative-interpolated.toml",
    "workloads/bimodal.toml",
    "workloads/bimodal-shift.toml",
    "workloads/hibench-blend.toml",
    "workloads/hibench-shift.toml",
    "workloads/dnn-epoch.toml",
    "experiments/bimodal.toml",
    "experiments/bimodal-shift.toml",
    "experiments/hibench-blend.toml",
    "experiments/hibench-shift.toml",
    "experiments/dnn-epoch.toml",
];

/// Experiment presets by name.
pub const PRESETS: &[&str] = &["bimodal", "bimodal-shift", "hibench-blend", "hibench-shift", "dnn-epoch"];

/// Catalog presets by name.
pub const CATALOGS: &[&str] = &["illustrative-ec2", "illustrative-interpolated"];

fn file(path: &Path) -> Result<String> {
    let key = normalize(path);
    FILES
        .iter()
        .find(|(p, _)| Path::new(p) == key)
        .map(|(_, text)| text.to_string())
        .ok_or_else(|| Error::Io {
            path: key,
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such preset file"),
        })
}

fn unknown(kind: &str, name: &str, known: &[&str]) -> Error {
    Error::domain(kind, format!("unknown preset `{name}`; available: {}", known.join(", ")))
}

pub fn preset(name: &str) -> Result<Experiment> {
    if !PRESETS.contains(&name) {
        return Err(unknown("preset", name, PRESETS));
    }
    let origin = format!("experiments/{name}.toml");
    let text = file(Path::new(&origin))?;
    parse_experiment(&text, Path::new(&origin), &mut file)
}

pub fn preset_catalog(name: &str) -> Result<Catalog> {
    if !CATALOGS.contains(&name) {
        return Err(unknown("catalog", name, CATALOGS));
    }
    let path = format!("catalogs/{name}.toml");
    Catalog::from_toml_str(&file(Path::new(&path))?).map_err(|message| Error::Parse {
        path: path.into(),
        message,
    })
}

/// Raw text of a preset file, e.g. `"workloads/bimodal.toml"`.
pub fn preset_source(path: &str) -> Option<&'static str> {
    FILES.iter().find(|(p, _)| *p == path).map(|(_, t)| *t)
}
