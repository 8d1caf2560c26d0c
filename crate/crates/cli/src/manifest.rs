//! Result manifests and the iterate log.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use steinweiss_core::grid::{half_mass_radius, tail_mass, GridDescriptor};
use steinweiss_core::solver::{IterationRecord, MaximizerState};
use steinweiss_core::SteinWeissOperator;

use crate::error::{CliError, CliResult, ErrorRecord, EXIT_NON_CONVERGENCE, EXIT_OK, EXIT_TOLERANCE, EXIT_VALIDATION};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ITERATES_FILE: &str = "iterates.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ValidationFailure,
    ToleranceBreach,
    NonConvergence,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => EXIT_OK,
            Status::ValidationFailure => EXIT_VALIDATION,
            Status::ToleranceBreach => EXIT_TOLERANCE,
            Status::NonConvergence => EXIT_NON_CONVERGENCE,
        }
    }

    /// A breached tolerance outranks a missed convergence criterion.
    pub fn from_checks(within_tolerance: bool, converged: bool) -> Self {
        if !within_tolerance {
            Status::ToleranceBreach
        } else if !converged {
            Status::NonConvergence
        } else {
            Status::Ok
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterateSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub initial_functional: f64,
    pub final_functional: f64,
    /// Largest drop between consecutive entries of the functional history.
    pub max_decrease: f64,
    pub renormalizations: usize,
    pub rejected_renormalizations: usize,
    pub extrapolations: usize,
    pub final_half_mass_radius: f64,
}

impl IterateSummary {
    pub fn of(state: &MaximizerState) -> Self {
        let h = &state.functional_history;
        let max_decrease = h.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        Self {
            iterations: h.len().saturating_sub(1),
            converged: state.converged,
            final_residual: state.residual,
            initial_functional: h.first().copied().unwrap_or(f64::NAN),
            final_functional: h.last().copied().unwrap_or(f64::NAN),
            max_decrease,
            renormalizations: state.renormalizations,
            rejected_renormalizations: state.rejected_renormalizations,
            extrapolations: state.extrapolations,
            final_half_mass_radius: state.half_mass_radii.last().copied().unwrap_or(f64::NAN),
        }
    }
}

/// Mass of both maximizer slots in the two edge shells of the annulus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncationReport {
    pub grid: GridDescriptor,
    pub g_tail_mass: f64,
    pub f_tail_mass: f64,
    /// The half-mass point of `g` fell into the innermost shell.
    pub half_mass_degenerate: bool,
}

impl TruncationReport {
    pub fn of(state: &MaximizerState, op: &SteinWeissOperator) -> Self {
        let params = op.params();
        Self {
            grid: op.grid().descriptor(),
            g_tail_mass: tail_mass(&state.g, params.p, params.beta),
            f_tail_mass: tail_mass(&state.f, params.q_prime, 0.0),
            half_mass_degenerate: half_mass_radius(&state.g, params.p, params.beta).map(|h| h.degenerate).unwrap_or(true),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub status: Status,
    pub exit_code: i32,
    pub seed: u64,
    pub workers: usize,
    pub wall_time_seconds: f64,
    /// The effective config, after command-line overrides.
    pub config: serde_json::Value,
    pub constant_estimate: Option<f64>,
    pub flags: Vec<String>,
    pub iterate_summary: Option<IterateSummary>,
    pub truncation: Option<TruncationReport>,
    /// Command-specific numbers.
    pub result: serde_json::Value,
    /// Files written next to the manifest.
    pub artifacts: Vec<String>,
    pub error: Option<ErrorRecord>,
}

impl ResultManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            status: Status::Ok,
            exit_code: EXIT_OK,
            seed,
            workers: rayon::current_num_threads(),
            wall_time_seconds: 0.0,
            config,
            constant_estimate: None,
            flags: Vec::new(),
            iterate_summary: None,
            truncation: None,
            result: serde_json::Value::Null,
            artifacts: Vec::new(),
            error: None,
        }
    }

    pub fn set_status(&mut self, status: Status) {
        self.status = status;
        self.exit_code = status.exit_code();
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// One row per iteration: iteration, J, residual, half-mass radius, tail mass.
pub fn write_iterates(path: &Path, records: &[IterationRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}
