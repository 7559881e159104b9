#![allow(dead_code)]

use sa_procure::annealing::{AcceptanceRule, TemperatureSchedule};
use sa_procure::catalog::{build_search_space, Catalog, FamilySpec};
use sa_procure::workload::{BlendSpec, CharacteristicCurve, Mode, NoiseModel, WorkloadStream};
use sa_procure::{BlendMode, Experiment, NotFoundPolicy};

pub fn catalog(families: usize) -> Catalog {
    Catalog::new(
        (0..families)
            .map(|i| FamilySpec {
                name: format!("f{i}"),
                price_per_core_hour: 0.03 + 0.01 * i as f64,
                memory_per_core: 2.0 * (i + 1) as f64,
            })
            .collect(),
        0,
    )
    .unwrap()
}

pub fn bimodal(baseline: f64, local: f64, global: f64) -> CharacteristicCurve {
    CharacteristicCurve::bimodal(
        baseline,
        [
            Mode { center: local, depth: 60.0, width: 2.0 },
            Mode { center: global, depth: 100.0, width: 2.0 },
        ],
    )
    .unwrap()
}

pub fn speedup(base: f64, serial: f64, families: usize) -> CharacteristicCurve {
    CharacteristicCurve::speedup(base, serial, (0..families).map(|i| 1.0 + 0.1 * i as f64).collect()).unwrap()
}

pub fn experiment(
    families: usize,
    cores: (u32, u32),
    workload: WorkloadStream,
    lambda: f64,
    schedule: TemperatureSchedule,
    job_count: u64,
) -> Experiment {
    let catalog = catalog(families);
    let space = build_search_space(&catalog, cores.0, cores.1).unwrap();
    Experiment {
        name: "test".into(),
        catalog,
        space,
        workload,
        lambda,
        schedule,
        job_count,
        blend_mode: BlendMode::Expected,
        rule: AcceptanceRule::HeatBath,
        remeasure_baseline: false,
        start: None,
        not_found: NotFoundPolicy::TreatAsJobCount,
        default_seed: 0,
    }
}

pub fn single(curve: CharacteristicCurve) -> WorkloadStream {
    WorkloadStream::new(BlendSpec::single("job", curve), Vec::new(), NoiseModel::None).unwrap()
}
