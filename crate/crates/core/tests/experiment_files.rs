use std::fs;
use std::path::Path;

use sa_procure::presets::{preset, preset_source};
use sa_procure::simulator::{global_minimizer, run_stream};
use sa_procure::{load_experiment, Configuration, Error};

fn write(dir: &Path, rel: &str, text: &str) {
    let p = dir.join(rel);
    fs::create_dir_all(p.parent().unwrap()).unwrap();
    fs::write(p, text).unwrap();
}

const CATALOG: &str = r#"
schema_version = 1
[[families]]
name = "small"
price_per_core_hour = 0.04
memory_per_core = 2.0
[[families]]
name = "large"
price_per_core_hour = 0.06
memory_per_core = 8.0
"#;

const WORKLOAD: &str = r#"
schema_version = 1
job_type = "grid"
[curve]
kind = "tabulated_2d"
grid_csv = "grid.csv"
"#;

fn experiment(catalog: &str, extra: &str) -> String {
    format!(
        r#"
schema_version = 1
name = "files"
catalog = "{catalog}"
workload = "../work/load.toml"
lambda = 100.0
job_count = 40
seed = 3
{extra}
[space]
cores_min = 1
cores_max = 3

[schedule]
kind = "fixed"
tau = 5.0
"#
    )
}

fn grid() -> String {
    let mut s = String::from("family_ordinal,cores,mean_seconds\n");
    for f in 0..2 {
        for c in 1..=3 {
            s += &format!("{f},{c},{}\n", 100.0 / c as f64 + 7.0 * f as f64);
        }
    }
    s
}

#[test]
fn relative_paths_and_grid_csv_resolve() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cat/c.toml", CATALOG);
    write(dir.path(), "work/load.toml", WORKLOAD);
    write(dir.path(), "work/grid.csv", &grid());
    write(dir.path(), "exp/e.toml", &experiment("../cat/c.toml", ""));

    let exp = load_experiment(&dir.path().join("exp/e.toml")).unwrap();
    assert_eq!(exp.space.len(), 6);
    assert_eq!(exp.default_seed, 3);
    let trace = run_stream(&exp, exp.default_seed).unwrap();
    assert_eq!(trace.records.len(), 40);
}

#[test]
fn missing_catalog_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "work/load.toml", WORKLOAD);
    write(dir.path(), "work/grid.csv", &grid());
    write(dir.path(), "exp/e.toml", &experiment("../cat/missing.toml", ""));
    let err = load_experiment(&dir.path().join("exp/e.toml")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("missing.toml"), "{err}");
}

#[test]
fn validation_reports_every_bad_field() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cat/c.toml", CATALOG);
    write(dir.path(), "work/load.toml", WORKLOAD);
    write(dir.path(), "work/grid.csv", &grid());
    let text = experiment("../cat/c.toml", "")
        .replace("lambda = 100.0", "lambda = -1.0")
        .replace("tau = 5.0", "tau = 0.0")
        .replace("cores_max = 3", "cores_max = 4");
    write(dir.path(), "exp/e.toml", &text);
    let err = load_experiment(&dir.path().join("exp/e.toml")).unwrap_err();
    let fields: Vec<String> = err.violations().into_iter().map(|v| v.field).collect();
    assert!(fields.iter().any(|f| f == "lambda"), "{fields:?}");
    assert!(fields.iter().any(|f| f.contains("tau")), "{fields:?}");
    // The grid has no value at 4 cores.
    assert!(fields.iter().any(|f| f.contains("workload")), "{fields:?}");
}

#[test]
fn unknown_keys_and_versions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cat/c.toml", CATALOG);
    write(dir.path(), "work/load.toml", WORKLOAD);
    write(dir.path(), "work/grid.csv", &grid());
    write(dir.path(), "exp/a.toml", &experiment("../cat/c.toml", "colour = \"red\""));
    assert!(matches!(load_experiment(&dir.path().join("exp/a.toml")), Err(Error::Parse { .. })));

    write(
        dir.path(),
        "exp/b.toml",
        &experiment("../cat/c.toml", "").replace("schema_version = 1", "schema_version = 2"),
    );
    let err = load_experiment(&dir.path().join("exp/b.toml")).unwrap_err();
    assert!(err.to_string().contains("schema_version"), "{err}");
}

#[test]
fn event_beyond_the_stream_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cat/c.toml", CATALOG);
    write(dir.path(), "work/grid.csv", &grid());
    write(
        dir.path(),
        "work/load.toml",
        &format!("{WORKLOAD}\n[[events]]\nat_job_index = 41\n[events.curve]\nkind = \"tabulated_2d\"\ngrid_csv = \"grid.csv\"\n"),
    );
    write(dir.path(), "exp/e.toml", &experiment("../cat/c.toml", ""));
    let err = load_experiment(&dir.path().join("exp/e.toml")).unwrap_err();
    assert!(err.violations().iter().any(|v| v.field.contains("at_job_index")), "{err}");
}

#[test]
fn preset_files_load_from_disk_too() {
    // The compiled-in presets and the files shipped next to them agree.
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    for name in sa_procure::presets::PRESETS {
        let rel = format!("experiments/{name}.toml");
        assert_eq!(fs::read_to_string(root.join(&rel)).unwrap(), preset_source(&rel).unwrap());
        let from_disk = load_experiment(&root.join(&rel)).unwrap();
        assert_eq!(from_disk, preset(name).unwrap());
    }
}

#[test]
fn preset_minimizers() {
    let bimodal = preset("bimodal").unwrap();
    assert_eq!(global_minimizer(&bimodal, 0).unwrap(), Configuration::new(0, 15));
    let shift = preset("bimodal-shift").unwrap();
    assert_eq!(global_minimizer(&shift, 0).unwrap(), Configuration::new(0, 31));
    assert_eq!(global_minimizer(&shift, 1).unwrap(), Configuration::new(0, 19));
}
