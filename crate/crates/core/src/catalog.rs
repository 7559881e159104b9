//! IaaS service offering: instance families priced per core-hour, hypothetical
//! families interpolated between real ones, and the lattice of configurations
//! the annealer searches.
//!
//! Currency is dollars, durations are seconds and rates are dollars per hour.
//! The ordinal order of families is the order the search space walks along the
//! family axis, so reordering a catalog changes which configurations are
//! neighbors and can create or remove local minima.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CATALOG_SCHEMA_VERSION: u32 = 1;

const SECONDS_PER_HOUR: f64 = 3600.0;

/// A real instance family as written in a catalog file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    pub price_per_core_hour: f64,
    pub memory_per_core: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFamily {
    pub name: String,
    /// Dollars per core per hour.
    pub price_per_core_hour: f64,
    /// GiB of memory per core.
    pub memory_per_core: f64,
    pub ordinal: usize,
    /// Inserted by interpolation rather than listed in the catalog file.
    pub hypothetical: bool,
}

/// Ordered set of instance families. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Catalog {
    families: Vec<InstanceFamily>,
    interpolation_granularity: u32,
}

impl Catalog {
    /// Builds a catalog from real families, inserting `interpolation_granularity`
    /// hypothetical families between every adjacent pair. Hypothetical prices and
    /// memory sizes are linear interpolations at fractions `k / (g + 1)`.
    pub fn new(real: Vec<FamilySpec>, interpolation_granularity: u32) -> Result<Self> {
        if real.is_empty() {
            return Err(Error::domain("families", "catalog must list at least one family"));
        }
        for (i, f) in real.iter().enumerate() {
            if f.name.trim().is_empty() {
                return Err(Error::domain(format!("families[{i}].name"), "empty name"));
            }
            if !(f.price_per_core_hour.is_finite() && f.price_per_core_hour >= 0.0) {
                return Err(Error::domain(
                    format!("families[{i}].price_per_core_hour"),
                    format!("must be finite and >= 0, got {}", f.price_per_core_hour),
                ));
            }
            if !(f.memory_per_core.is_finite() && f.memory_per_core > 0.0) {
                return Err(Error::domain(
                    format!("families[{i}].memory_per_core"),
                    format!("must be finite and > 0, got {}", f.memory_per_core),
                ));
            }
            if real[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::domain(
                    format!("families[{i}].name"),
                    format!("duplicate family name `{}`", f.name),
                ));
            }
        }

        let g = interpolation_granularity as usize;
        let mut families = Vec::with_capacity(real.len() + g * (real.len() - 1));
        let mut push = |name: String, price: f64, memory: f64, hypothetical: bool| {
            let ordinal = families.len();
            families.push(InstanceFamily {
                name,
                price_per_core_hour: price,
                memory_per_core: memory,
                ordinal,
                hypothetical,
            });
        };
        for (i, lo) in real.iter().enumerate() {
            push(lo.name.clone(), lo.price_per_core_hour, lo.memory_per_core, false);
            let Some(hi) = real.get(i + 1) else { break };
            for k in 1..=g {
                let frac = k as f64 / (g + 1) as f64;
                push(
                    format!("{}~{}[{}/{}]", lo.name, hi.name, k, g + 1),
                    lerp(lo.price_per_core_hour, hi.price_per_core_hour, frac),
                    lerp(lo.memory_per_core, hi.memory_per_core, frac),
                    true,
                );
            }
        }

        Ok(Self {
            families,
            interpolation_granularity,
        })
    }

    pub fn families(&self) -> &[InstanceFamily] {
        &self.families
    }

    pub fn family(&self, ordinal: usize) -> Option<&InstanceFamily> {
        self.families.get(ordinal)
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn interpolation_granularity(&self) -> u32 {
        self.interpolation_granularity
    }

    /// Parses the TOML catalog format:
    ///
    /// ```toml
    /// schema_version = 1
    /// interpolation_granularity = 0
    ///
    /// [[families]]
    /// name = "general"
    /// price_per_core_hour = 0.048
    /// memory_per_core = 4.0
    /// ```
    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| e.to_string())?;
        if file.schema_version != CATALOG_SCHEMA_VERSION {
            return Err(format!(
                "unsupported catalog schema_version {} (expected {CATALOG_SCHEMA_VERSION})",
                file.schema_version
            ));
        }
        Catalog::new(file.families, file.interpolation_granularity).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    schema_version: u32,
    #[serde(default)]
    interpolation_granularity: u32,
    families: Vec<FamilySpec>,
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// A point of the search space: an instance family and a total core count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub family: usize,
    pub cores: u32,
}

impl Configuration {
    pub fn new(family: usize, cores: u32) -> Self {
        Self { family, cores }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(family {}, {} cores)", self.family, self.cores)
    }
}

/// Hourly price of a configuration.
pub fn cost_rate(config: Configuration, catalog: &Catalog) -> Result<f64> {
    let family = catalog.family(config.family).ok_or_else(|| {
        Error::domain(
            "family_ordinal",
            format!("{} is outside the catalog (0..{})", config.family, catalog.len()),
        )
    })?;
    if config.cores == 0 {
        return Err(Error::domain("cores", "core count must be at least 1"));
    }
    Ok(f64::from(config.cores) * family.price_per_core_hour)
}

/// Cost of holding `config` for `duration_secs` seconds.
pub fn job_cost(config: Configuration, duration_secs: f64, catalog: &Catalog) -> Result<f64> {
    if !(duration_secs.is_finite() && duration_secs >= 0.0) {
        return Err(Error::domain(
            "duration",
            format!("must be finite and >= 0, got {duration_secs}"),
        ));
    }
    Ok(cost_rate(config, catalog)? * duration_secs / SECONDS_PER_HOUR)
}

/// The `family × cores` lattice searched by the annealer.
///
/// Configurations are indexed family-major in ordinal order. When the space
/// spans a single family the annealer only moves along the cores axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    family_lo: usize,
    family_hi: usize,
    cores_min: u32,
    cores_max: u32,
}

impl SearchSpace {
    pub fn family_range(&self) -> (usize, usize) {
        (self.family_lo, self.family_hi)
    }

    pub fn cores_range(&self) -> (u32, u32) {
        (self.cores_min, self.cores_max)
    }

    pub fn family_count(&self) -> usize {
        self.family_hi - self.family_lo + 1
    }

    pub fn core_count(&self) -> usize {
        (self.cores_max - self.cores_min) as usize + 1
    }

    pub fn len(&self) -> usize {
        self.family_count() * self.core_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when only the cores axis is searched.
    pub fn is_one_dimensional(&self) -> bool {
        self.family_lo == self.family_hi
    }

    pub fn contains(&self, c: Configuration) -> bool {
        (self.family_lo..=self.family_hi).contains(&c.family)
            && (self.cores_min..=self.cores_max).contains(&c.cores)
    }

    pub fn index_of(&self, c: Configuration) -> Option<usize> {
        self.contains(c).then(|| {
            (c.family - self.family_lo) * self.core_count() + (c.cores - self.cores_min) as usize
        })
    }

    pub fn config_at(&self, index: usize) -> Option<Configuration> {
        (index < self.len()).then(|| {
            let n = self.core_count();
            Configuration::new(self.family_lo + index / n, self.cores_min + (index % n) as u32)
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        (0..self.len()).filter_map(|i| self.config_at(i))
    }

    /// Narrows the family axis to the contiguous ordinal range `lo..=hi`.
    pub fn restrict_families(self, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi || lo < self.family_lo || hi > self.family_hi {
            return Err(Error::domain(
                "space.families",
                format!(
                    "range {lo}..={hi} is not within {}..={}",
                    self.family_lo, self.family_hi
                ),
            ));
        }
        Ok(Self {
            family_lo: lo,
            family_hi: hi,
            ..self
        })
    }
}

/// Lattice over every family of `catalog` and cores `cores_min..=cores_max`.
pub fn build_search_space(catalog: &Catalog, cores_min: u32, cores_max: u32) -> Result<SearchSpace> {
    if catalog.is_empty() {
        return Err(Error::domain("catalog", "empty catalog"));
    }
    if cores_min < 1 {
        return Err(Error::domain("cores_min", "must be at least 1"));
    }
    if cores_max < cores_min {
        return Err(Error::domain(
            "cores_max",
            format!("{cores_max} is below cores_min {cores_min}"),
        ));
    }
    Ok(SearchSpace {
        family_lo: 0,
        family_hi: catalog.len() - 1,
        cores_min,
        cores_max,
    })
}
