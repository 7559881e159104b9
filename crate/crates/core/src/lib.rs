//! Simulated-annealing selection of cloud instance configurations for a
//! stream of jobs.
//!
//! Each arriving job is run on a configuration proposed next to the one
//! currently held. The job's execution time and price give an objective
//! `Y = t + λc`, and a heat-bath rule decides whether the proposal replaces
//! the held configuration. At a fixed temperature the held configuration is
//! distributed as `exp(-Y/τ)`, so the stream settles on cheap, fast
//! configurations while still escaping local minima and tracking workload
//! changes.
//!
//! ```
//! use sa_procure::{presets, simulator};
//!
//! let exp = presets::preset("bimodal").unwrap();
//! let trace = simulator::run_stream(&exp, 1).unwrap();
//! assert_eq!(trace.records.len() as u64, exp.job_count);
//! ```

pub mod annealing;
pub mod catalog;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod presets;
pub mod report;
pub mod simulator;
pub mod workload;

pub use annealing::{AcceptanceRule, AnnealerState, MoveKind, TemperatureSchedule};
pub use catalog::{Catalog, Configuration, SearchSpace};
pub use error::{Error, Result, Violation};
pub use experiment::{load_experiment, BlendMode, Experiment, NotFoundPolicy};
pub use simulator::{run_stream, JobRecord, JobsUntil, Metric, ReplicationStats, RunTrace};
pub use workload::{BlendSpec, CharacteristicCurve, NoiseModel, WorkloadStream};
