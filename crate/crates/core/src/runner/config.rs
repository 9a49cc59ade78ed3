//! Declarative sweep configuration (a single JSON document).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::{Boundary, Parity, Sector};
use crate::error::{Error, Result};
use crate::eth::{DEFAULT_PAIR_WINDOW, DEFAULT_RUNNING_LENGTH};
use crate::groundstate::{GRID_MAX, GRID_MIN};
use crate::multifractal::Moment;
use crate::spectral::{BinScheme, Window, DEFAULT_BINS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Analysis {
    Rstat,
    Gfd,
    Dos,
    Eth,
    Groundstate,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Rstat => "rstat",
            Analysis::Gfd => "gfd",
            Analysis::Dos => "dos",
            Analysis::Eth => "eth",
            Analysis::Groundstate => "groundstate",
        }
    }

    /// Needs the full spectrum of a symmetry sector.
    pub fn uses_spectrum(self) -> bool {
        !matches!(self, Analysis::Groundstate)
    }

    pub fn needs_vectors(self) -> bool {
        matches!(self, Analysis::Gfd | Analysis::Eth)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    /// Read existing entries, write new ones.
    #[default]
    Use,
    /// Recompute everything and overwrite entries.
    Refresh,
    Off,
}

/// Sector used for spectral analyses. `momentum` applies to PBC only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSelection {
    #[serde(default = "default_momentum")]
    pub momentum: Option<usize>,
    /// `+1` or `-1`; `null` when the momentum sector has no parity.
    #[serde(default = "default_parity", with = "parity_sign")]
    pub parity: Option<Parity>,
}

fn default_momentum() -> Option<usize> {
    Some(0)
}

fn default_parity() -> Option<Parity> {
    Some(Parity::Odd)
}

impl Default for SectorSelection {
    fn default() -> Self {
        Self {
            momentum: default_momentum(),
            parity: default_parity(),
        }
    }
}

mod parity_sign {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use crate::basis::Parity;

    pub fn serialize<S: Serializer>(p: &Option<Parity>, s: S) -> Result<S::Ok, S::Error> {
        match p {
            Some(p) => s.serialize_i8(p.sign()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Parity>, D::Error> {
        match Option::<i64>::deserialize(d)? {
            None => Ok(None),
            Some(v) => Parity::from_sign(v).map(Some).map_err(de::Error::custom),
        }
    }
}

impl SectorSelection {
    pub fn resolve(&self, sites: usize, excitations: usize, boundary: Boundary) -> Result<Sector> {
        let momentum = match boundary {
            Boundary::Pbc => self.momentum,
            Boundary::Hwbc => None,
        };
        Sector::new(sites, excitations, boundary, momentum, self.parity)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EthOptions {
    #[serde(default = "default_pair_window")]
    pub pair_window: f64,
    #[serde(default = "default_running_length")]
    pub running_length: usize,
}

fn default_pair_window() -> f64 {
    DEFAULT_PAIR_WINDOW
}

fn default_running_length() -> usize {
    DEFAULT_RUNNING_LENGTH
}

impl Default for EthOptions {
    fn default() -> Self {
        Self {
            pair_window: DEFAULT_PAIR_WINDOW,
            running_length: DEFAULT_RUNNING_LENGTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Geometric {
        min: f64,
        max: f64,
        points_per_decade: usize,
    },
    Explicit(Vec<f64>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Geometric {
            min: GRID_MIN,
            max: GRID_MAX,
            points_per_decade: 10,
        }
    }
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        match self {
            GridSpec::Geometric {
                min,
                max,
                points_per_decade,
            } => crate::groundstate::geometric_grid(*min, *max, *points_per_decade),
            GridSpec::Explicit(v) => {
                if let Some(i) = (1..v.len()).find(|&i| !(v[i] > v[i - 1])) {
                    return Err(Error::NonMonotoneGrid(i));
                }
                if v.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    return Err(Error::Config("grid values must be finite and >= 0".into()));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateOptions {
    #[serde(default)]
    pub grid: GridSpec,
    /// Extra linear points around the coarse derivative maximum.
    #[serde(default = "default_refine")]
    pub refine_points: usize,
    /// Moment whose derivative maximum drives the refinement.
    #[serde(default = "default_refine_moment")]
    pub refine_moment: Moment,
    #[serde(default = "default_lanczos_tol")]
    pub tolerance: f64,
    #[serde(default = "default_max_matvecs")]
    pub max_matvecs: usize,
}

fn default_refine() -> usize {
    8
}

fn default_refine_moment() -> Moment {
    Moment::ONE
}

fn default_lanczos_tol() -> f64 {
    crate::eigen::LanczosOptions::default().tolerance
}

fn default_max_matvecs() -> usize {
    crate::eigen::LanczosOptions::default().max_matvecs
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            refine_points: default_refine(),
            refine_moment: default_refine_moment(),
            tolerance: default_lanczos_tol(),
            max_matvecs: default_max_matvecs(),
        }
    }
}

impl GroundStateOptions {
    pub fn lanczos(&self) -> crate::eigen::LanczosOptions {
        crate::eigen::LanczosOptions {
            tolerance: self.tolerance,
            max_matvecs: self.max_matvecs,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Chain lengths `L`.
    pub sizes: Vec<usize>,
    /// Filling `ν = N / L`; `N = ν L` must be an integer for every size.
    #[serde(default = "default_filling")]
    pub filling: f64,
    /// Detunings `Δ/g`.
    pub deltas: Vec<f64>,
    /// Tunneling values `t/g` for spectral analyses.
    #[serde(default)]
    pub hoppings: Vec<f64>,
    #[serde(default = "default_boundaries")]
    pub boundaries: Vec<Boundary>,
    #[serde(default)]
    pub sector: SectorSelection,
    pub analyses: Vec<Analysis>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub bin_scheme: BinScheme,
    #[serde(default)]
    pub window: Window,
    /// Moments for eigenstate GFDs.
    #[serde(default = "default_moments")]
    pub moments: Vec<Moment>,
    #[serde(default)]
    pub eth: EthOptions,
    #[serde(default)]
    pub ground_state: GroundStateOptions,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache: CachePolicy,
    /// Overrides the environment variable and the default location.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_dense_threshold")]
    pub dense_threshold: usize,
}

fn default_filling() -> f64 {
    1.0
}

fn default_boundaries() -> Vec<Boundary> {
    vec![Boundary::Pbc]
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

fn default_moments() -> Vec<Moment> {
    vec![Moment::ONE]
}

fn default_dense_threshold() -> usize {
    crate::eigen::DEFAULT_DENSE_THRESHOLD
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; a relative `output_dir` is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if cfg.output_dir.is_relative() {
            if let Some(parent) = path.parent() {
                cfg.output_dir = parent.join(&cfg.output_dir);
            }
        }
        Ok(cfg)
    }

    pub fn has(&self, analysis: Analysis) -> bool {
        self.analyses.contains(&analysis)
    }

    pub fn excitations(&self, sites: usize) -> Result<usize> {
        let n = self.filling * sites as f64;
        if (n - n.round()).abs() > 1e-9 || n < 0.0 {
            return Err(Error::Config(format!(
                "filling {} gives a non-integer excitation number at L = {sites}",
                self.filling
            )));
        }
        Ok(n.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return fail("sizes must be a nonempty list of positive lengths".into());
        }
        if self.deltas.is_empty() || self.deltas.iter().any(|d| !d.is_finite()) {
            return fail("deltas must be a nonempty list of finite values".into());
        }
        if self.analyses.is_empty() {
            return fail("no analyses requested".into());
        }
        if self.boundaries.is_empty() {
            return fail("boundaries must not be empty".into());
        }
        let spectral = self.analyses.iter().any(|a| a.uses_spectrum());
        if spectral && self.hoppings.is_empty() {
            return fail("spectral analyses need at least one hopping value".into());
        }
        if self.hoppings.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return fail("hoppings must be finite and >= 0".into());
        }
        if self.bins == 0 {
            return fail("bins must be positive".into());
        }
        if self.moments.is_empty() {
            return fail("moments must not be empty".into());
        }
        for m in &self.moments {
            if let Moment::Order(q) = m {
                if !(*q > 0.0 && q.is_finite()) {
                    return fail(format!("moment {q} outside (0, inf]"));
                }
            }
        }
        if !(self.eth.pair_window > 0.0) || self.eth.running_length == 0 {
            return fail("eth.pair_window and eth.running_length must be positive".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be positive".into());
        }
        if let Window::Epsilon { lo, hi } = self.window {
            if !(lo < hi) {
                return fail(format!("empty epsilon window [{lo}, {hi})"));
            }
        }
        if let Window::Indices { start, end } = self.window {
            if start >= end {
                return fail(format!("empty index window {start}..{end}"));
            }
        }
        for &l in &self.sizes {
            let n = self.excitations(l)?;
            if spectral {
                for &b in &self.boundaries {
                    self.sector.resolve(l, n, b).map_err(|e| Error::Config(e.to_string()))?;
                }
            }
        }
        if self.has(Analysis::Groundstate) {
            let grid = self.ground_state.grid.points()?;
            if grid.len() < 3 {
                return fail("ground-state grid needs at least three points".into());
            }
            if let Moment::Order(q) = self.ground_state.refine_moment {
                if q != 1.0 && q != 2.0 {
                    return fail("ground_state.refine_moment must be 1, 2 or \"inf\"".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "sizes": [6],
        "deltas": [0.0],
        "hoppings": [1.0],
        "analyses": ["rstat"],
        "output_dir": "out"
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.bins, 100);
        assert_eq!(c.filling, 1.0);
        assert_eq!(c.boundaries, vec![Boundary::Pbc]);
        assert_eq!(c.sector, SectorSelection::default());
        assert_eq!(c.window, Window::MiddleThird);
        assert_eq!(c.cache, CachePolicy::Use);
        assert_eq!(c.moments, vec![Moment::ONE]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"bins_\": 1,", "").replace("\"sizes\"", "\"colour\": 1, \"sizes\"");
        assert!(matches!(RunConfig::from_json(&text), Err(Error::Config(m)) if m.contains("colour")));
        let nested = MINIMAL.replace("\"sizes\"", "\"eth\": {\"width\": 2}, \"sizes\"");
        assert!(RunConfig::from_json(&nested).is_err());
    }

    #[test]
    fn schema_and_values_are_checked() {
        assert!(RunConfig::from_json(&MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2")).is_err());
        assert!(RunConfig::from_json(&MINIMAL.replace("[6]", "[]")).is_err());
        assert!(RunConfig::from_json(&MINIMAL.replace("[\"rstat\"]", "[\"magic\"]")).is_err());
        // filling 1/2 on L = 5
        let odd = MINIMAL.replace("[6]", "[5]").replace("\"deltas\"", "\"filling\": 0.5, \"deltas\"");
        assert!(RunConfig::from_json(&odd).is_err());
        // parity is not defined for Q = 1 at L = 6
        let bad_sector = MINIMAL.replace("\"deltas\"", "\"sector\": {\"momentum\": 1, \"parity\": -1}, \"deltas\"");
        assert!(RunConfig::from_json(&bad_sector).is_err());
        let ok_sector = MINIMAL.replace("\"deltas\"", "\"sector\": {\"momentum\": 1, \"parity\": null}, \"deltas\"");
        assert!(RunConfig::from_json(&ok_sector).is_ok());
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        let text = serde_json::to_string_pretty(&c).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn grids() {
        let explicit = GridSpec::Explicit(vec![0.1, 0.2, 0.2]);
        assert!(matches!(explicit.points(), Err(Error::NonMonotoneGrid(2))));
        assert_eq!(GridSpec::default().points().unwrap().len(), 51);
    }
}
