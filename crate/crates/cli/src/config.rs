//! Run configurations. Each subcommand reads one JSON document carrying
//! `schema_version` and the parameters of that command; unknown fields are
//! rejected. Relative paths inside a config resolve against the directory
//! of the config file.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use steinweiss_core::diagnostics::synthetic;
use steinweiss_core::diagnostics::{SwOptions, Verdict};
use steinweiss_core::grid::GridDescriptor;
use steinweiss_core::solver::MaximizeOptions;
use steinweiss_core::{SpaceKind, SpaceSpec, SteinWeissParams};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

fn default_r_min() -> f64 {
    1e-3
}

fn default_r_max() -> f64 {
    1e3
}

fn default_true() -> bool {
    true
}

fn default_rotations() -> usize {
    8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub radial_levels: usize,
    pub angular_resolution: usize,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
}

impl GridSettings {
    pub fn descriptor(&self, spec: SpaceSpec) -> GridDescriptor {
        GridDescriptor {
            spec,
            radial_levels: self.radial_levels,
            angular_resolution: self.angular_resolution,
            r_min: self.r_min,
            r_max: self.r_max,
        }
    }
}

/// Starting iterate of a maximization. Random starts draw from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    Bump,
    Random,
    /// First frame of a grid-function container, in the maximizing form.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyDiagonalConfig {
    pub schema_version: u32,
    /// Euclidean or Heisenberg; the weights vanish on the diagonal.
    pub space: SpaceKind,
    pub lambda: f64,
    pub grid: GridSettings,
    #[serde(default)]
    pub maximize: MaximizeOptions,
    #[serde(default = "random_init")]
    pub init: InitConfig,
    /// Relative tolerance on both the value at the extremal and the maximum.
    #[serde(default = "default_diagonal_tol")]
    pub tolerance: f64,
    /// Bound on the relative L^2 misfit between the maximizer and the
    /// best dilate of the closed-form extremal; unchecked when absent.
    #[serde(default)]
    pub profile_tolerance: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn random_init() -> InitConfig {
    InitConfig::Random
}

fn bump_init() -> InitConfig {
    InitConfig::Bump
}

fn default_diagonal_tol() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximizeConfig {
    pub schema_version: u32,
    pub params: SteinWeissParams,
    pub grid: GridSettings,
    #[serde(default)]
    pub maximize: MaximizeOptions,
    #[serde(default = "bump_init")]
    pub init: InitConfig,
    #[serde(default)]
    pub seed: u64,
    /// Run the symmetry checks on Euclidean and product spaces.
    #[serde(default = "default_true")]
    pub symmetry: bool,
    #[serde(default = "default_rotations")]
    pub rotations: usize,
    /// Center translation tested with the `|z|` weight on H^n.
    #[serde(default = "default_shift")]
    pub translation_shift: f64,
}

fn default_shift() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSystemConfig {
    pub schema_version: u32,
    pub params: SteinWeissParams,
    pub grid: GridSettings,
    /// Manifest of a finished `maximize` run on the same parameters and
    /// grid; without it a maximization is run first.
    #[serde(default)]
    pub seed_from_manifest: Option<PathBuf>,
    #[serde(default)]
    pub maximize: MaximizeOptions,
    #[serde(default = "bump_init")]
    pub init: InitConfig,
    #[serde(default = "default_system_tol")]
    pub tol: f64,
    #[serde(default = "default_system_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub symmetry: bool,
    #[serde(default = "default_rotations")]
    pub rotations: usize,
    #[serde(default)]
    pub asymmetry_tolerance: Option<f64>,
    #[serde(default)]
    pub monotonicity_tolerance: Option<f64>,
}

fn default_system_tol() -> f64 {
    1e-6
}

fn default_system_iter() -> usize {
    5000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub schema_version: u32,
    /// Container of node masses, one frame per sequence element; the
    /// bundled synthetic sequences are classified when absent.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    /// Undo dilations frame by frame before classifying.
    #[serde(default)]
    pub renormalize: bool,
    #[serde(default)]
    pub expected: Option<Verdict>,
    #[serde(default)]
    pub expected_k: Option<f64>,
    #[serde(default = "default_k_tol")]
    pub k_tolerance: f64,
}

fn default_epsilon() -> f64 {
    synthetic::EPSILON
}

fn default_radii() -> Vec<f64> {
    synthetic::RADII.to_vec()
}

fn default_k_tol() -> f64 {
    0.02
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            input: None,
            epsilon: default_epsilon(),
            radii: default_radii(),
            renormalize: false,
            expected: None,
            expected_k: None,
            k_tolerance: default_k_tol(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSwConfig {
    pub schema_version: u32,
    pub params: SteinWeissParams,
    pub sw: SwOptions,
    /// Allowed relative gap between condition (1) and its reduction.
    #[serde(default = "default_c1_tol")]
    pub condition1_tolerance: f64,
}

fn default_c1_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    pub schema_version: u32,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Wall-time budget in seconds.
    #[serde(default = "default_budget")]
    pub time_budget: f64,
}

fn default_samples() -> usize {
    1000
}

fn default_budget() -> f64 {
    10.0
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { schema_version: SCHEMA_VERSION, samples: default_samples(), seed: 0, time_budget: default_budget() }
    }
}

/// Behaviour shared by all configs.
pub trait RunConfig: Serialize + DeserializeOwned {
    fn seed(&self) -> u64;
    fn set_seed(&mut self, seed: u64);
    /// Rewrites relative paths against `base`.
    fn resolve_paths(&mut self, _base: &Path) {}
    /// Checks that do not need any computation.
    fn validate(&self) -> CliResult<()> {
        Ok(())
    }
}

fn resolve(path: &mut PathBuf, base: &Path) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

fn resolve_init(init: &mut InitConfig, base: &Path) {
    if let InitConfig::File { path } = init {
        resolve(path, base);
    }
}

/// Rejects spaces whose weight kind does not fit, then the exponents.
pub fn validate_params(params: &SteinWeissParams) -> CliResult<()> {
    SpaceSpec::new(params.spec.kind, params.spec.weight_kind)?;
    params.validate()?;
    Ok(())
}

impl RunConfig for VerifyDiagonalConfig {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn resolve_paths(&mut self, base: &Path) {
        resolve_init(&mut self.init, base);
    }

    fn validate(&self) -> CliResult<()> {
        if matches!(self.space, SpaceKind::Product { .. }) {
            return Err(CliError::Config("the diagonal case is defined on R^n and H^n only".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Config("tolerance must be positive".into()));
        }
        Ok(())
    }
}

impl RunConfig for MaximizeConfig {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn resolve_paths(&mut self, base: &Path) {
        resolve_init(&mut self.init, base);
    }

    fn validate(&self) -> CliResult<()> {
        validate_params(&self.params)
    }
}

impl RunConfig for SolveSystemConfig {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }

    fn resolve_paths(&mut self, base: &Path) {
        resolve_init(&mut self.init, base);
        if let Some(p) = self.seed_from_manifest.as_mut() {
            resolve(p, base);
        }
    }

    fn validate(&self) -> CliResult<()> {
        validate_params(&self.params)?;
        if !(self.tol > 0.0) {
            return Err(CliError::Config("tol must be positive".into()));
        }
        Ok(())
    }
}

impl RunConfig for ClassifyConfig {
    fn seed(&self) -> u64 {
        0
    }

    fn set_seed(&mut self, _seed: u64) {}

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = self.input.as_mut() {
            resolve(p, base);
        }
    }
}

impl RunConfig for CheckSwConfig {
    fn seed(&self) -> u64 {
        self.sw.seed
    }

    fn set_seed(&mut self, seed: u64) {
        self.sw.seed = seed;
    }

    fn validate(&self) -> CliResult<()> {
        validate_params(&self.params)
    }
}

impl RunConfig for SelftestConfig {
    fn seed(&self) -> u64 {
        self.seed
    }

    fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
    }
}

/// Parses a config document, checking the schema version first so that a
/// version mismatch is reported as such rather than as a field error.
pub fn parse_config<T: RunConfig>(text: &str) -> CliResult<T> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(CliError::Config(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(CliError::Config("missing schema_version".into())),
    }
    let config: T = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config<T: RunConfig>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut config: T = parse_config(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    config.resolve_paths(&base);
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let ok = r#"{"schema_version": 1, "samples": 10}"#;
        assert_eq!(parse_config::<SelftestConfig>(ok).unwrap().samples, 10);
        let unknown = r#"{"schema_version": 1, "samples": 10, "colour": "red"}"#;
        assert!(matches!(parse_config::<SelftestConfig>(unknown), Err(CliError::Config(_))));
        let version = r#"{"schema_version": 2}"#;
        assert!(parse_config::<SelftestConfig>(version).unwrap_err().to_string().contains("schema_version"));
        assert!(parse_config::<SelftestConfig>("{}").is_err());
    }

    #[test]
    fn admissibility_is_checked_on_load() {
        let text = r#"{
            "schema_version": 1,
            "params": {"spec": {"kind": {"kind": "euclidean", "n": 2}, "weight_kind": "full_norm"},
                       "alpha": 0.0, "beta": 0.0, "lambda": 2.0, "p": 2.0, "q_prime": 2.0},
            "grid": {"radial_levels": 8, "angular_resolution": 8}
        }"#;
        match parse_config::<MaximizeConfig>(text) {
            Err(CliError::Core(steinweiss_core::Error::Inadmissible(v))) => assert!(!v.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_weight_kind_is_rejected() {
        let text = r#"{
            "schema_version": 1,
            "params": {"spec": {"kind": {"kind": "euclidean", "n": 2}, "weight_kind": "horizontal"},
                       "alpha": 0.0, "beta": 0.0, "lambda": 1.0, "p": 1.3333333333333333, "q_prime": 1.3333333333333333},
            "grid": {"radial_levels": 8, "angular_resolution": 8}
        }"#;
        assert!(parse_config::<MaximizeConfig>(text).is_err());
    }
}
