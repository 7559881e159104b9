//! Synthetic workload models.
//!
//! A [`CharacteristicCurve`] maps a configuration to a mean execution time in
//! seconds. A [`BlendSpec`] mixes several job types with weights on the
//! simplex, and a [`WorkloadStream`] adds multiplicative noise plus change
//! events that swap the blend at fixed job indices.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::catalog::{Configuration, SearchSpace};
use crate::error::{Error, Result, Violation};

pub const WORKLOAD_SCHEMA_VERSION: u32 = 1;

/// Weights must sum to one within this tolerance.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// One Gaussian dip of a bimodal curve, over total core count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub center: f64,
    pub depth: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedPoint {
    pub family: usize,
    pub cores: u32,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CharacteristicCurve {
    /// `baseline - sum_i depth_i * exp(-((cores - center_i) / width_i)^2 / 2)`,
    /// independent of family.
    #[serde(rename = "bimodal_1d")]
    Bimodal1d { baseline: f64, modes: [Mode; 2] },
    /// Explicit mean seconds per configuration, sorted by configuration.
    #[serde(rename = "tabulated_2d")]
    Tabulated2d { points: Vec<TabulatedPoint> },
    /// Amdahl-style decay: `base_time * m_f * (s + (1 - s) / cores)` where
    /// `m_f` is the multiplier of the configuration's family (1 when omitted).
    ParametricSpeedup {
        base_time: f64,
        serial_fraction: f64,
        family_multipliers: Vec<f64>,
    },
}

impl CharacteristicCurve {
    pub fn bimodal(baseline: f64, modes: [Mode; 2]) -> Result<Self> {
        if !baseline.is_finite() {
            return Err(Error::domain("baseline", "must be finite"));
        }
        for (i, m) in modes.iter().enumerate() {
            if !m.center.is_finite() {
                return Err(Error::domain(format!("modes[{i}].center"), "must be finite"));
            }
            if !(m.depth.is_finite() && m.depth > 0.0) {
                return Err(Error::domain(format!("modes[{i}].depth"), "must be > 0"));
            }
            if !(m.width.is_finite() && m.width > 0.0) {
                return Err(Error::domain(format!("modes[{i}].width"), "must be > 0"));
            }
        }
        // Keeps the mean strictly positive for every core count.
        if baseline <= modes[0].depth + modes[1].depth {
            return Err(Error::domain(
                "baseline",
                "must exceed the sum of mode depths so execution time stays positive",
            ));
        }
        Ok(Self::Bimodal1d { baseline, modes })
    }

    pub fn tabulated(mut points: Vec<TabulatedPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("points", "tabulated curve has no points"));
        }
        points.sort_by_key(|p| (p.family, p.cores));
        for w in points.windows(2) {
            if (w[0].family, w[0].cores) == (w[1].family, w[1].cores) {
                return Err(Error::domain(
                    "points",
                    format!("duplicate entry for family {} cores {}", w[0].family, w[0].cores),
                ));
            }
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.mean_seconds.is_finite() && p.mean_seconds > 0.0))
        {
            return Err(Error::domain(
                "points.mean_seconds",
                format!(
                    "family {} cores {}: must be > 0, got {}",
                    p.family, p.cores, p.mean_seconds
                ),
            ));
        }
        Ok(Self::Tabulated2d { points })
    }

    pub fn speedup(base_time: f64, serial_fraction: f64, family_multipliers: Vec<f64>) -> Result<Self> {
        if !(base_time.is_finite() && base_time > 0.0) {
            return Err(Error::domain("base_time", "must be > 0"));
        }
        if !(0.0..=1.0).contains(&serial_fraction) {
            return Err(Error::domain("serial_fraction", "must lie in [0, 1]"));
        }
        if let Some(i) = family_multipliers
            .iter()
            .position(|m| !(m.is_finite() && *m > 0.0))
        {
            return Err(Error::domain(format!("family_multipliers[{i}]"), "must be > 0"));
        }
        Ok(Self::ParametricSpeedup {
            base_time,
            serial_fraction,
            family_multipliers,
        })
    }

    /// Parses a CSV grid with header `family_ordinal,cores,mean_seconds`.
    pub fn tabulated_from_csv(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            family_ordinal: usize,
            cores: u32,
            mean_seconds: f64,
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let points = rdr
            .deserialize::<Row>()
            .map(|r| {
                r.map(|r| TabulatedPoint {
                    family: r.family_ordinal,
                    cores: r.cores,
                    mean_seconds: r.mean_seconds,
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::tabulated(points)
    }

    /// Checks that the curve is defined and strictly positive on every point of `space`.
    pub fn validate_over(&self, space: &SearchSpace, field: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        for c in space.iter() {
            match mean_exec_time(self, c) {
                Ok(t) if t > 0.0 && t.is_finite() => {}
                Ok(t) => out.push(Violation::new(
                    field,
                    format!("mean execution time {t} at {c} is not positive"),
                )),
                Err(e) => {
                    out.push(Violation::new(field, format!("undefined at {c}: {e}")));
                    break;
                }
            }
        }
        out
    }
}

/// Mean execution time (seconds) of one job of this type on `config`.
pub fn mean_exec_time(curve: &CharacteristicCurve, config: Configuration) -> Result<f64> {
    if config.cores == 0 {
        return Err(Error::domain("cores", "core count must be at least 1"));
    }
    let cores = f64::from(config.cores);
    match curve {
        CharacteristicCurve::Bimodal1d { baseline, modes } => Ok(modes.iter().fold(*baseline, |acc, m| {
            let z = (cores - m.center) / m.width;
            acc - m.depth * (-0.5 * z * z).exp()
        })),
        CharacteristicCurve::Tabulated2d { points } => points
            .binary_search_by_key(&(config.family, config.cores), |p| (p.family, p.cores))
            .map(|i| points[i].mean_seconds)
            .map_err(|_| Error::domain("config", format!("{config} is not in the tabulated grid"))),
        CharacteristicCurve::ParametricSpeedup {
            base_time,
            serial_fraction,
            family_multipliers,
        } => {
            let m = if family_multipliers.is_empty() {
                1.0
            } else {
                *family_multipliers.get(config.family).ok_or_else(|| {
                    Error::domain(
                        "family_ordinal",
                        format!(
                            "{} has no multiplier ({} given)",
                            config.family,
                            family_multipliers.len()
                        ),
                    )
                })?
            };
            Ok(base_time * m * (serial_fraction + (1.0 - serial_fraction) / cores))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    #[default]
    None,
    /// Execution time is the mean times `exp(sigma * Z)`, `Z ~ N(0, 1)`.
    MultiplicativeLognormal { sigma: f64 },
}

impl NoiseModel {
    pub fn is_noiseless(&self) -> bool {
        match self {
            NoiseModel::None => true,
            NoiseModel::MultiplicativeLognormal { sigma } => *sigma == 0.0,
        }
    }

    /// Random draws consumed by one sample.
    pub fn draws_per_sample(&self) -> usize {
        match self {
            NoiseModel::None => 0,
            NoiseModel::MultiplicativeLognormal { .. } => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::MultiplicativeLognormal { sigma } if sigma.is_finite() && *sigma >= 0.0 => Ok(()),
            NoiseModel::MultiplicativeLognormal { sigma } => Err(Error::domain(
                "noise.sigma",
                format!("must be finite and >= 0, got {sigma}"),
            )),
        }
    }
}

/// Uniform draw on the open interval (0, 1) from a single `u64`.
pub(crate) fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// One stochastic realization of a job's execution time.
///
/// Lognormal noise consumes exactly one `u64` from `rng` (inverse-CDF
/// sampling), even when `sigma` is zero, so replays stay aligned. `None`
/// consumes nothing.
pub fn sample_exec_time(
    curve: &CharacteristicCurve,
    noise: &NoiseModel,
    config: Configuration,
    rng: &mut impl RngCore,
) -> Result<f64> {
    let mean = mean_exec_time(curve, config)?;
    match noise {
        NoiseModel::None => Ok(mean),
        NoiseModel::MultiplicativeLognormal { sigma } => {
            let u = open_unit(rng);
            if *sigma == 0.0 {
                return Ok(mean);
            }
            let z = Normal::standard().inverse_cdf(u);
            Ok(mean * (sigma * z).exp())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlendComponent {
    pub job_type: String,
    pub curve: CharacteristicCurve,
    pub alpha: f64,
}

/// Weighted mix of job types; weights are strictly positive and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlendSpec {
    components: Vec<BlendComponent>,
}

impl BlendSpec {
    pub fn new(components: Vec<BlendComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::domain("components", "blend needs at least one component"));
        }
        check_weights(components.iter().map(|c| c.alpha))?;
        Ok(Self { components })
    }

    /// A blend of a single job type with weight 1.
    pub fn single(job_type: impl Into<String>, curve: CharacteristicCurve) -> Self {
        Self {
            components: vec![BlendComponent {
                job_type: job_type.into(),
                curve,
                alpha: 1.0,
            }],
        }
    }

    pub fn components(&self) -> &[BlendComponent] {
        &self.components
    }

    /// Index of the component selected by a uniform draw `u` in [0, 1).
    pub(crate) fn pick(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.alpha;
            if u < acc {
                return i;
            }
        }
        self.components.len() - 1
    }

    /// Exact weighted mean execution time.
    pub fn mean_exec_time(&self, config: Configuration) -> Result<f64> {
        self.components.iter().try_fold(0.0, |acc, c| {
            Ok(acc + c.alpha * mean_exec_time(&c.curve, config)?)
        })
    }
}

fn check_weights(alphas: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for (i, a) in alphas.enumerate() {
        if !(a.is_finite() && a > 0.0 && a <= 1.0) {
            return Err(Error::domain(
                format!("alpha[{i}]"),
                format!("weight must lie in (0, 1], got {a}"),
            ));
        }
        sum += a;
    }
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::domain(
            "alpha",
            format!("weights sum to {sum}, expected 1 within {SIMPLEX_TOLERANCE:e}"),
        ));
    }
    Ok(())
}

/// `sum_i alpha_i * Y_i` over `(alpha, Y)` pairs.
pub fn blend_objective(per_component: &[(f64, f64)]) -> Result<f64> {
    if per_component.is_empty() {
        return Err(Error::domain("components", "empty blend"));
    }
    check_weights(per_component.iter().map(|(a, _)| *a))?;
    Ok(per_component.iter().map(|(a, y)| a * y).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeEvent {
    /// First job (1-based, inclusive) that runs under `replacement`.
    pub at_job_index: u64,
    pub replacement: BlendSpec,
}

/// Initial blend, noise model and ordered change events.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadStream {
    initial: BlendSpec,
    events: Vec<ChangeEvent>,
    noise: NoiseModel,
}

impl WorkloadStream {
    pub fn new(initial: BlendSpec, events: Vec<ChangeEvent>, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        for (i, e) in events.iter().enumerate() {
            if e.at_job_index < 1 {
                return Err(Error::domain(format!("events[{i}].at_job_index"), "must be >= 1"));
            }
            if i > 0 && e.at_job_index <= events[i - 1].at_job_index {
                return Err(Error::domain(
                    format!("events[{i}].at_job_index"),
                    "change indices must be strictly increasing",
                ));
            }
        }
        Ok(Self {
            initial,
            events,
            noise,
        })
    }

    pub fn initial(&self) -> &BlendSpec {
        &self.initial
    }

    pub fn events(&self) -> &[ChangeEvent] {
        &self.events
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn phase_count(&self) -> usize {
        self.events.len() + 1
    }

    /// Blend of phase `p` (0 is the initial blend, `p` the blend installed by event `p - 1`).
    pub fn phase(&self, p: usize) -> Option<&BlendSpec> {
        match p {
            0 => Some(&self.initial),
            p => self.events.get(p - 1).map(|e| &e.replacement),
        }
    }

    /// Phase index and blend in force at `job_index`.
    pub fn active(&self, job_index: u64) -> (usize, &BlendSpec) {
        let phase = self.events.partition_point(|e| e.at_job_index <= job_index);
        (phase, self.phase(phase).expect("phase within bounds"))
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        Ok(self)
    }

    pub fn validate_over(&self, space: &SearchSpace) -> Vec<Violation> {
        let mut out = Vec::new();
        for p in 0..self.phase_count() {
            let blend = self.phase(p).expect("phase within bounds");
            for c in blend.components() {
                let field = if p == 0 {
                    format!("workload.components[{}]", c.job_type)
                } else {
                    format!("workload.events[{}].components[{}]", p - 1, c.job_type)
                };
                out.extend(c.curve.validate_over(space, &field));
            }
        }
        out
    }

    /// Parses the TOML workload format. `read_grid` resolves `grid_csv`
    /// references of tabulated curves to CSV text.
    pub fn from_toml_str(
        text: &str,
        read_grid: &mut dyn FnMut(&str) -> Result<String>,
    ) -> Result<Self> {
        let file: WorkloadFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<workload>".into(),
            message: e.to_string(),
        })?;
        if file.schema_version != WORKLOAD_SCHEMA_VERSION {
            return Err(Error::domain(
                "schema_version",
                format!(
                    "unsupported workload schema_version {} (expected {WORKLOAD_SCHEMA_VERSION})",
                    file.schema_version
                ),
            ));
        }
        let initial = file.blend.into_blend("workload", read_grid)?;
        let events = file
            .events
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                Ok(ChangeEvent {
                    at_job_index: e.at_job_index,
                    replacement: e.blend.into_blend(&format!("events[{i}]"), read_grid)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        WorkloadStream::new(initial, events, file.noise)
    }
}

/// Blend in force at `job_index`.
pub fn active_workload(stream: &WorkloadStream, job_index: u64) -> &BlendSpec {
    stream.active(job_index).1
}

#[derive(Debug, Deserialize)]
struct WorkloadFile {
    schema_version: u32,
    #[serde(default)]
    noise: NoiseModel,
    #[serde(flatten)]
    blend: BlendFile,
    #[serde(default)]
    events: Vec<EventFile>,
}

#[derive(Debug, Deserialize)]
struct EventFile {
    at_job_index: u64,
    #[serde(flatten)]
    blend: BlendFile,
}

/// Either a single `curve` or a list of weighted `components`.
#[derive(Debug, Deserialize)]
struct BlendFile {
    #[serde(default)]
    job_type: Option<String>,
    #[serde(default)]
    curve: Option<CurveFile>,
    #[serde(default)]
    components: Vec<ComponentFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentFile {
    job_type: String,
    alpha: f64,
    curve: CurveFile,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum CurveFile {
    #[serde(rename = "bimodal_1d")]
    Bimodal1d {
        baseline: f64,
        modes: [Mode; 2],
    },
    #[serde(rename = "tabulated_2d")]
    Tabulated2d {
        #[serde(default)]
        points: Vec<TabulatedPoint>,
        #[serde(default)]
        grid_csv: Option<String>,
    },
    ParametricSpeedup {
        base_time: f64,
        serial_fraction: f64,
        #[serde(default)]
        family_multipliers: Vec<f64>,
    },
}

impl CurveFile {
    fn into_curve(self, read_grid: &mut dyn FnMut(&str) -> Result<String>) -> Result<CharacteristicCurve> {
        match self {
            CurveFile::Bimodal1d { baseline, modes } => CharacteristicCurve::bimodal(baseline, modes),
            CurveFile::Tabulated2d { points, grid_csv } => match (points.is_empty(), grid_csv) {
                (true, Some(path)) => CharacteristicCurve::tabulated_from_csv(&read_grid(&path)?),
                (false, None) => CharacteristicCurve::tabulated(points),
                _ => Err(Error::domain(
                    "curve",
                    "tabulated curve needs exactly one of `points` or `grid_csv`",
                )),
            },
            CurveFile::ParametricSpeedup {
                base_time,
                serial_fraction,
                family_multipliers,
            } => CharacteristicCurve::speedup(base_time, serial_fraction, family_multipliers),
        }
    }
}

impl BlendFile {
    fn into_blend(
        self,
        at: &str,
        read_grid: &mut dyn FnMut(&str) -> Result<String>,
    ) -> Result<BlendSpec> {
        let prefix = |e: Error| match e {
            Error::Domain { field, reason } => Error::domain(format!("{at}.{field}"), reason),
            other => other,
        };
        match (self.curve, self.components.is_empty()) {
            (Some(curve), true) => Ok(BlendSpec::single(
                self.job_type.unwrap_or_else(|| "job".into()),
                curve.into_curve(read_grid).map_err(prefix)?,
            )),
            (None, false) => {
                let components = self
                    .components
                    .into_iter()
                    .map(|c| {
                        Ok(BlendComponent {
                            job_type: c.job_type,
                            alpha: c.alpha,
                            curve: c.curve.into_curve(read_grid)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(prefix)?;
                BlendSpec::new(components).map_err(prefix)
            }
            _ => Err(Error::domain(
                at,
                "give exactly one of `curve` or a non-empty `components` list",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_search_space, Catalog, FamilySpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bimodal() -> CharacteristicCurve {
        CharacteristicCurve::bimodal(
            200.0,
            [
                Mode { center: 5.0, depth: 60.0, width: 2.0 },
                Mode { center: 15.0, depth: 100.0, width: 2.0 },
            ],
        )
        .unwrap()
    }

    fn line_space(lo: u32, hi: u32) -> SearchSpace {
        let cat = Catalog::new(
            vec![FamilySpec {
                name: "a".into(),
                price_per_core_hour: 0.05,
                memory_per_core: 4.0,
            }],
            0,
        )
        .unwrap();
        build_search_space(&cat, lo, hi).unwrap()
    }

    #[test]
    fn bimodal_has_one_global_and_one_local_minimizer() {
        let space = line_space(1, 20);
        let curve = bimodal();
        let vals: Vec<f64> = space.iter().map(|c| mean_exec_time(&curve, c).unwrap()).collect();
        let local: Vec<usize> = (0..vals.len())
            .filter(|&i| {
                (i == 0 || vals[i - 1] > vals[i]) && (i + 1 == vals.len() || vals[i + 1] > vals[i])
            })
            .collect();
        assert_eq!(local, vec![4, 14]);
        let best = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        assert_eq!(best, 14);
        assert!(vals.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn tabulated_lookup_is_exact() {
        let curve = CharacteristicCurve::tabulated_from_csv(
            "family_ordinal,cores,mean_seconds\n0,1,12.5\n0,2,7.25\n1,1,9.0\n",
        )
        .unwrap();
        assert_eq!(mean_exec_time(&curve, Configuration::new(0, 2)).unwrap(), 7.25);
        assert_eq!(mean_exec_time(&curve, Configuration::new(1, 1)).unwrap(), 9.0);
        assert!(mean_exec_time(&curve, Configuration::new(1, 2)).is_err());
    }

    #[test]
    fn tabulated_rejects_holes_and_duplicates() {
        let curve = CharacteristicCurve::tabulated_from_csv(
            "family_ordinal,cores,mean_seconds\n0,1,1.0\n0,3,1.0\n",
        )
        .unwrap();
        assert!(!curve.validate_over(&line_space(1, 3), "c").is_empty());
        assert!(CharacteristicCurve::tabulated_from_csv(
            "family_ordinal,cores,mean_seconds\n0,1,1.0\n0,1,2.0\n"
        )
        .is_err());
        assert!(CharacteristicCurve::tabulated_from_csv(
            "family_ordinal,cores,mean_seconds\n0,1,0.0\n"
        )
        .is_err());
    }

    #[test]
    fn amdahl_example() {
        let curve = CharacteristicCurve::speedup(100.0, 0.1, vec![]).unwrap();
        assert!((mean_exec_time(&curve, Configuration::new(0, 1)).unwrap() - 100.0).abs() < 1e-12);
        // 100 * (0.1 + 0.9 / 10) = 19
        assert!((mean_exec_time(&curve, Configuration::new(0, 10)).unwrap() - 19.0).abs() < 1e-12);
        let per_family = CharacteristicCurve::speedup(100.0, 0.1, vec![1.0, 0.5]).unwrap();
        assert!((mean_exec_time(&per_family, Configuration::new(1, 10)).unwrap() - 9.5).abs() < 1e-12);
        assert!(mean_exec_time(&per_family, Configuration::new(2, 10)).is_err());
    }

    #[test]
    fn curve_constructors_validate() {
        let m = Mode { center: 5.0, depth: 60.0, width: 2.0 };
        assert!(CharacteristicCurve::bimodal(100.0, [m, m]).is_err());
        assert!(CharacteristicCurve::bimodal(200.0, [m, Mode { width: 0.0, ..m }]).is_err());
        assert!(CharacteristicCurve::speedup(100.0, 1.5, vec![]).is_err());
        assert!(CharacteristicCurve::speedup(0.0, 0.5, vec![]).is_err());
        assert!(CharacteristicCurve::speedup(1.0, 0.5, vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn noiseless_sample_equals_mean_and_consumes_nothing() {
        let curve = bimodal();
        let c = Configuration::new(0, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut twin = rng.clone();
        let t = sample_exec_time(&curve, &NoiseModel::None, c, &mut rng).unwrap();
        assert_eq!(t, mean_exec_time(&curve, c).unwrap());
        assert_eq!(rng.next_u64(), twin.next_u64());
    }

    #[test]
    fn zero_sigma_reproduces_mean_and_consumes_one_draw() {
        let curve = bimodal();
        let c = Configuration::new(0, 7);
        let noise = NoiseModel::MultiplicativeLognormal { sigma: 0.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut twin = rng.clone();
        let t = sample_exec_time(&curve, &noise, c, &mut rng).unwrap();
        assert_eq!(t, mean_exec_time(&curve, c).unwrap());
        twin.next_u64();
        assert_eq!(rng.next_u64(), twin.next_u64());
    }

    #[test]
    fn seeded_samples_replay() {
        let curve = bimodal();
        let noise = NoiseModel::MultiplicativeLognormal { sigma: 0.2 };
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5)
                .map(|_| sample_exec_time(&curve, &noise, Configuration::new(0, 3), &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn lognormal_empirical_mean_within_one_percent() {
        let curve = CharacteristicCurve::speedup(100.0, 0.1, vec![]).unwrap();
        let c = Configuration::new(0, 4);
        let mean = mean_exec_time(&curve, c).unwrap();
        let noise = NoiseModel::MultiplicativeLognormal { sigma: 0.1 };
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let total: f64 = (0..n)
            .map(|_| sample_exec_time(&curve, &noise, c, &mut rng).unwrap())
            .sum();
        let emp = total / n as f64;
        assert!((emp / mean - 1.0).abs() < 0.01, "empirical {emp} vs mean {mean}");
    }

    #[test]
    fn blend_objective_examples() {
        assert_eq!(blend_objective(&[(1.0, 42.0)]).unwrap(), 42.0);
        assert!((blend_objective(&[(0.5, 10.0), (0.5, 20.0)]).unwrap() - 15.0).abs() < 1e-12);
        // 0.2*10 + 0.3*20 + 0.5*30 = 2 + 6 + 15
        assert!((blend_objective(&[(0.2, 10.0), (0.3, 20.0), (0.5, 30.0)]).unwrap() - 23.0).abs() < 1e-12);
        assert!(blend_objective(&[(0.5, 1.0), (0.6, 1.0)]).is_err());
        assert!(blend_objective(&[(1.2, 1.0), (-0.2, 1.0)]).is_err());
        assert!(blend_objective(&[]).is_err());
    }

    fn blend_of(tag: &str) -> BlendSpec {
        BlendSpec::single(tag, CharacteristicCurve::speedup(10.0, 0.5, vec![]).unwrap())
    }

    #[test]
    fn active_workload_boundaries() {
        let none = WorkloadStream::new(blend_of("a"), vec![], NoiseModel::None).unwrap();
        for i in [1, 50, 10_000] {
            assert_eq!(active_workload(&none, i).components()[0].job_type, "a");
        }

        let one = WorkloadStream::new(
            blend_of("a"),
            vec![ChangeEvent { at_job_index: 100, replacement: blend_of("b") }],
            NoiseModel::None,
        )
        .unwrap();
        assert_eq!(active_workload(&one, 99).components()[0].job_type, "a");
        assert_eq!(active_workload(&one, 100).components()[0].job_type, "b");
    }

    #[test]
    fn two_events_match_linear_scan() {
        let stream = WorkloadStream::new(
            blend_of("a"),
            vec![
                ChangeEvent { at_job_index: 10, replacement: blend_of("b") },
                ChangeEvent { at_job_index: 25, replacement: blend_of("c") },
            ],
            NoiseModel::None,
        )
        .unwrap();
        for i in 1..40u64 {
            let mut expected = "a";
            for (tag, at) in [("b", 10), ("c", 25)] {
                if at <= i {
                    expected = tag;
                }
            }
            assert_eq!(active_workload(&stream, i).components()[0].job_type, expected);
            // idempotent at fixed index
            assert_eq!(stream.active(i), stream.active(i));
        }
    }

    #[test]
    fn events_must_increase() {
        let ev = |at| ChangeEvent { at_job_index: at, replacement: blend_of("b") };
        assert!(WorkloadStream::new(blend_of("a"), vec![ev(5), ev(5)], NoiseModel::None).is_err());
        assert!(WorkloadStream::new(blend_of("a"), vec![ev(0)], NoiseModel::None).is_err());
    }

    #[test]
    fn blend_pick_follows_cumulative_weights() {
        let c = CharacteristicCurve::speedup(10.0, 0.5, vec![]).unwrap();
        let blend = BlendSpec::new(vec![
            BlendComponent { job_type: "a".into(), curve: c.clone(), alpha: 0.25 },
            BlendComponent { job_type: "b".into(), curve: c, alpha: 0.75 },
        ])
        .unwrap();
        assert_eq!(blend.pick(0.0), 0);
        assert_eq!(blend.pick(0.2499), 0);
        assert_eq!(blend.pick(0.25), 1);
        assert_eq!(blend.pick(0.9999), 1);
    }

    #[test]
    fn workload_toml() {
        let text = r#"
schema_version = 1
noise = { kind = "multiplicative_lognormal", sigma = 0.05 }

[[components]]
job_type = "wordcount"
alpha = 0.4
curve = { kind = "parametric_speedup", base_time = 300.0, serial_fraction = 0.05 }

[[components]]
job_type = "grid"
alpha = 0.6
curve = { kind = "tabulated_2d", grid_csv = "grid.csv" }

[[events]]
at_job_index = 10
curve = { kind = "bimodal_1d", baseline = 200.0, modes = [
  { center = 5.0, depth = 60.0, width = 2.0 },
  { center = 15.0, depth = 100.0, width = 2.0 },
] }
"#;
        let mut asked = Vec::new();
        let stream = WorkloadStream::from_toml_str(text, &mut |p: &str| {
            asked.push(p.to_string());
            Ok("family_ordinal,cores,mean_seconds\n0,1,3.0\n0,2,2.0\n".to_string())
        })
        .unwrap();
        assert_eq!(asked, vec!["grid.csv"]);
        assert_eq!(stream.initial().components().len(), 2);
        assert_eq!(stream.events().len(), 1);
        assert_eq!(stream.events()[0].replacement.components()[0].alpha, 1.0);
        assert_eq!(*stream.noise(), NoiseModel::MultiplicativeLognormal { sigma: 0.05 });

        let bad = text.replace("alpha = 0.6", "alpha = 0.7");
        let err = WorkloadStream::from_toml_str(&bad, &mut |_: &str| Ok("family_ordinal,cores,mean_seconds\n0,1,3.0\n0,2,2.0\n".to_string())).unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }
}
