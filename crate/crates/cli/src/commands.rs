//! The subcommands. Each one loads its config, runs the corresponding core
//! operations, writes its artifacts into the output directory and fills in
//! a [`ResultManifest`].

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use steinweiss_core::diagnostics::synthetic::{bundled_sequences, FRAMES};
use steinweiss_core::diagnostics::{
    concentration_classify, geometry_suite, sawyer_wheeden_check, symmetry_check, translation_check, ConcentrationReport,
    MeasureSequence, SymmetryOptions, SymmetryReport, Verdict,
};
use steinweiss_core::extremal::{diagonal_sharp_constant, extremal_kind_for, ClosedFormExtremal, Provenance};
use steinweiss_core::grid::{GridFunction, QuadratureGrid};
use steinweiss_core::io::{load_frames, save_frames};
use steinweiss_core::solver::{maximize, seed_from_pair, solve_system, Init, MaximizeOptions, MaximizerState};
use steinweiss_core::{SpaceKind, SpaceSpec, SteinWeissOperator, SteinWeissParams, WeightKind};

use crate::config::{
    load_config, validate_params, CheckSwConfig, ClassifyConfig, GridSettings, InitConfig, MaximizeConfig, RunConfig,
    SelftestConfig, SolveSystemConfig, VerifyDiagonalConfig,
};
use crate::error::{CliError, CliResult, EXIT_NON_CONVERGENCE};
use crate::manifest::{write_iterates, IterateSummary, ResultManifest, Status, TruncationReport, ITERATES_FILE, MANIFEST_FILE};

/// Maximizer pair `(g, f)`, `g` in the maximizing form.
pub const MAXIMIZER_FILE: &str = "maximizer.sgf";
/// Solution pair `(u, v)` of the integral system.
pub const SYSTEM_FILE: &str = "system.sgf";
pub const SYSTEM_RESIDUALS_FILE: &str = "system_residuals.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    VerifyDiagonal,
    Maximize,
    SolveSystem,
    Classify,
    CheckSw,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyDiagonal => "verify-diagonal",
            Command::Maximize => "maximize",
            Command::SolveSystem => "solve-system",
            Command::Classify => "classify",
            Command::CheckSw => "check-sw",
            Command::Selftest => "selftest",
        }
    }
}

/// Where a run reads its config and writes its results.
#[derive(Debug, Clone)]
pub struct RunRequest<'a> {
    pub config: Option<&'a Path>,
    pub out: &'a Path,
    pub seed: Option<u64>,
}

/// Runs one command to completion. Failures are recorded in the returned
/// manifest, which is also written to the output directory when possible.
pub fn run(command: Command, request: &RunRequest) -> ResultManifest {
    match command {
        Command::VerifyDiagonal => drive(command, request, None, verify_diagonal),
        Command::Maximize => drive(command, request, None, cmd_maximize),
        Command::SolveSystem => drive(command, request, None, cmd_solve_system),
        Command::Classify => drive(command, request, Some(ClassifyConfig::default()), classify),
        Command::CheckSw => drive(command, request, None, check_sw),
        Command::Selftest => drive(command, request, Some(SelftestConfig::default()), selftest),
    }
}

fn drive<T: RunConfig>(
    command: Command,
    request: &RunRequest,
    default: Option<T>,
    body: fn(&T, &Path, &mut ResultManifest) -> CliResult<()>,
) -> ResultManifest {
    let start = Instant::now();
    let created = std::fs::create_dir_all(request.out).map_err(|e| CliError::io(request.out, e));
    let loaded = created.and_then(|_| match (request.config, default) {
        (Some(path), _) => load_config::<T>(path),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(CliError::Config(format!("{} needs --config", command.name()))),
    });
    let mut manifest = ResultManifest::new(command.name(), request.seed.unwrap_or(0), serde_json::Value::Null);
    let outcome = loaded.and_then(|mut config| {
        if let Some(seed) = request.seed {
            config.set_seed(seed);
        }
        manifest.seed = config.seed();
        manifest.config = serde_json::to_value(&config)?;
        body(&config, request.out, &mut manifest)
    });
    if let Err(e) = outcome {
        let record = e.record();
        manifest.set_status(if record.exit_code == EXIT_NON_CONVERGENCE {
            Status::NonConvergence
        } else {
            Status::ValidationFailure
        });
        manifest.error = Some(record);
    }
    manifest.wall_time_seconds = start.elapsed().as_secs_f64();
    if request.out.is_dir() {
        if let Err(e) = manifest.write(request.out) {
            eprintln!("could not write {MANIFEST_FILE}: {e}");
        }
    }
    manifest
}

fn build_operator(params: SteinWeissParams, grid: &GridSettings) -> CliResult<SteinWeissOperator> {
    let grid = grid.descriptor(params.spec).build()?;
    Ok(SteinWeissOperator::new(params, grid)?)
}

/// Copy of `f` on `grid`, which must have the same descriptor.
fn rehome(f: &GridFunction, grid: &Arc<QuadratureGrid>) -> CliResult<GridFunction> {
    if f.grid().descriptor() != grid.descriptor() {
        return Err(CliError::Config("stored grid function lives on a different grid".into()));
    }
    Ok(GridFunction::new(grid.clone(), f.values().to_vec())?)
}

fn start_of(init: &InitConfig, seed: u64, op: &SteinWeissOperator) -> CliResult<Init> {
    Ok(match init {
        InitConfig::Bump => Init::Bump,
        InitConfig::Random => Init::Random { seed },
        InitConfig::File { path } => {
            let frames = load_frames(path)?;
            let first = frames.first().ok_or_else(|| CliError::Config(format!("{} holds no frames", path.display())))?;
            Init::Function(rehome(first, op.grid())?)
        }
    })
}

/// Runs a maximization and writes the iterate log and the pair.
fn run_maximizer(op: &SteinWeissOperator, init: Init, options: &MaximizeOptions, out: &Path, manifest: &mut ResultManifest) -> CliResult<MaximizerState> {
    let state = maximize(op, init, options)?;
    write_iterates(&out.join(ITERATES_FILE), &state.records)?;
    save_frames(&out.join(MAXIMIZER_FILE), &[state.g.clone(), state.f.clone()])?;
    manifest.artifacts.extend([ITERATES_FILE.to_string(), MAXIMIZER_FILE.to_string()]);
    manifest.constant_estimate = Some(state.constant_estimate);
    manifest.flags.extend(state.flags.iter().cloned());
    manifest.iterate_summary = Some(IterateSummary::of(&state));
    manifest.truncation = Some(TruncationReport::of(&state, op));
    Ok(state)
}

fn relative(a: f64, reference: f64) -> f64 {
    (a - reference).abs() / reference.abs()
}

fn verify_diagonal(cfg: &VerifyDiagonalConfig, out: &Path, manifest: &mut ResultManifest) -> CliResult<()> {
    let spec = SpaceSpec::new(cfg.space, WeightKind::FullNorm)?;
    let params = SteinWeissParams::diagonal(spec, cfg.lambda);
    validate_params(&params)?;
    let n = match cfg.space {
        SpaceKind::Euclidean { n } | SpaceKind::Heisenberg { n } => n,
        SpaceKind::Product { .. } => unreachable!("rejected by config validation"),
    };
    let kind = extremal_kind_for(&spec).expect("diagonal spaces carry a closed-form extremal");
    let sharp = diagonal_sharp_constant(kind, n, cfg.lambda)?;
    let op = build_operator(params, &cfg.grid)?;
    let extremal = ClosedFormExtremal::new(kind, n, cfg.lambda)?;
    let h = extremal.sample(op.grid())?;
    let at_extremal = op.ratio(&h, &h)?;

    let state = run_maximizer(&op, start_of(&cfg.init, cfg.seed, &op)?, &cfg.maximize, out, manifest)?;
    let fit = extremal.profile_fit(&state.functional_form(&op))?;

    let err_extremal = relative(at_extremal, sharp.value);
    let err_maximize = relative(state.constant_estimate, sharp.value);
    let profile_ok = cfg.profile_tolerance.map_or(true, |t| fit.relative_l2_error <= t);
    if sharp.printed_flag == Provenance::Suspect {
        manifest.flags.push("SUSPECT".into());
    }
    manifest.result = json!({
        "params": params,
        "reference": sharp,
        "functional_at_extremal": at_extremal,
        "maximize_estimate": state.constant_estimate,
        "relative_error_at_extremal": err_extremal,
        "relative_error_maximize": err_maximize,
        "profile_fit": fit,
        "tolerance": cfg.tolerance,
        "profile_tolerance": cfg.profile_tolerance,
    });
    let within = err_extremal <= cfg.tolerance && err_maximize <= cfg.tolerance && profile_ok;
    manifest.set_status(Status::from_checks(within, state.converged));
    Ok(())
}

fn symmetry_of(f: &GridFunction, rotations: usize, seed: u64) -> CliResult<Option<SymmetryReport>> {
    if f.grid().spec().is_heisenberg() {
        return Ok(None);
    }
    Ok(Some(symmetry_check(f, &SymmetryOptions { rotations, seed })?))
}

fn cmd_maximize(cfg: &MaximizeConfig, out: &Path, manifest: &mut ResultManifest) -> CliResult<()> {
    let op = build_operator(cfg.params, &cfg.grid)?;
    let state = run_maximizer(&op, start_of(&cfg.init, cfg.seed, &op)?, &cfg.maximize, out, manifest)?;
    let big_g = state.functional_form(&op);
    let symmetry = if cfg.symmetry { symmetry_of(&big_g, cfg.rotations, cfg.seed)? } else { None };
    let translation = if cfg.params.spec.weight_kind == WeightKind::Horizontal {
        Some(translation_check(&op, &state.f, &big_g, cfg.translation_shift)?)
    } else {
        None
    };
    manifest.result = json!({
        "params": cfg.params,
        "admissibility": cfg.params.check(),
        "constant_estimate": state.constant_estimate,
        "symmetry": symmetry,
        "translation": translation,
    });
    manifest.set_status(Status::from_checks(true, state.converged));
    Ok(())
}

/// Loads the maximizer pair of a finished maximize run on the same problem.
fn pair_from_manifest(path: &Path, cfg: &SolveSystemConfig, op: &SteinWeissOperator) -> CliResult<(GridFunction, GridFunction)> {
    let source = ResultManifest::read(path)?;
    if source.command != Command::Maximize.name() {
        return Err(CliError::Config(format!("{} is a {} manifest, not a maximize manifest", path.display(), source.command)));
    }
    if source.error.is_some() {
        return Err(CliError::Config(format!("{} records a failed run", path.display())));
    }
    let config: MaximizeConfig = serde_json::from_value(source.config).map_err(|e| CliError::Config(e.to_string()))?;
    if config.params != cfg.params || config.grid != cfg.grid {
        return Err(CliError::Config("the maximize run used different parameters or a different grid".into()));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let frames = load_frames(&dir.join(MAXIMIZER_FILE))?;
    if frames.len() != 2 {
        return Err(CliError::Config(format!("{MAXIMIZER_FILE} should hold (g, f), found {} frames", frames.len())));
    }
    Ok((rehome(&frames[1], op.grid())?, rehome(&frames[0], op.grid())?))
}

#[derive(Serialize)]
struct ResidualRow {
    iteration: usize,
    residual_u: f64,
    residual_v: f64,
}

fn cmd_solve_system(cfg: &SolveSystemConfig, out: &Path, manifest: &mut ResultManifest) -> CliResult<()> {
    let op = build_operator(cfg.params, &cfg.grid)?;
    let (f, g, seeded_from) = match &cfg.seed_from_manifest {
        Some(path) => {
            let (f, g) = pair_from_manifest(path, cfg, &op)?;
            (f, g, path.display().to_string())
        }
        None => {
            let state = run_maximizer(&op, start_of(&cfg.init, cfg.seed, &op)?, &cfg.maximize, out, manifest)?;
            (state.f, state.g, "inline maximize".to_string())
        }
    };
    let sys = solve_system(&op, seed_from_pair(&op, &f, &g), cfg.tol, cfg.max_iter)?;
    save_frames(&out.join(SYSTEM_FILE), &[sys.u.clone(), sys.v.clone()])?;
    let mut w = csv::Writer::from_path(out.join(SYSTEM_RESIDUALS_FILE))?;
    for (iteration, &(residual_u, residual_v)) in sys.residual_history.iter().enumerate() {
        w.serialize(ResidualRow { iteration, residual_u, residual_v })?;
    }
    w.flush().map_err(|e| CliError::io(out.join(SYSTEM_RESIDUALS_FILE), e))?;
    manifest.artifacts.extend([SYSTEM_FILE.to_string(), SYSTEM_RESIDUALS_FILE.to_string()]);

    let (sym_u, sym_v) = if cfg.symmetry {
        (symmetry_of(&sys.u, cfg.rotations, cfg.seed)?, symmetry_of(&sys.v, cfg.rotations, cfg.seed)?)
    } else {
        (None, None)
    };
    let worst = |get: fn(&SymmetryReport) -> f64| [&sym_u, &sym_v].iter().filter_map(|s| s.as_ref().map(get)).fold(0.0, f64::max);
    let asymmetry = worst(|s| s.x_prime_asymmetry);
    let monotonicity = worst(|s| s.monotonicity_defect);
    let within = cfg.asymmetry_tolerance.map_or(true, |t| asymmetry <= t)
        && cfg.monotonicity_tolerance.map_or(true, |t| monotonicity <= t);
    manifest.result = json!({
        "params": cfg.params,
        "seeded_from": seeded_from,
        "p1": sys.p1,
        "p2": sys.p2,
        "multiplier_estimate": sys.multiplier_estimate,
        "scale": [sys.scale.0, sys.scale.1],
        "residuals": [sys.residuals.0, sys.residuals.1],
        "iterations": sys.iterations,
        "converged": sys.converged,
        "tol": cfg.tol,
        "symmetry_u": sym_u,
        "symmetry_v": sym_v,
        "x_prime_asymmetry": asymmetry,
        "monotonicity_defect": monotonicity,
    });
    manifest.set_status(Status::from_checks(within, sys.converged));
    Ok(())
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Compactness => "compactness",
        Verdict::Vanishing => "vanishing",
        Verdict::Dichotomy => "dichotomy",
        Verdict::Inconclusive => "inconclusive",
    }
}

/// Checks a report against an expected verdict and split mass.
fn judge(report: &ConcentrationReport, expected: Option<Verdict>, expected_k: Option<f64>, k_tol: f64) -> bool {
    let verdict_ok = expected.map_or(true, |v| v == report.verdict);
    let k_ok = match expected_k {
        None => true,
        Some(k) => report.dichotomy.as_ref().is_some_and(|d| (d.k - k).abs() <= k_tol),
    };
    verdict_ok && k_ok
}

fn classify(cfg: &ClassifyConfig, out: &Path, manifest: &mut ResultManifest) -> CliResult<()> {
    let mut entries = Vec::new();
    let mut all_ok = true;
    let mut classify_one = |name: String, seq: MeasureSequence, expected: Option<Verdict>, expected_k: Option<f64>| -> CliResult<()> {
        let seq = if cfg.renormalize { seq.renormalized()? } else { seq };
        let report = concentration_classify(&seq, cfg.epsilon, &cfg.radii)?;
        let ok = judge(&report, expected, expected_k, cfg.k_tolerance);
        all_ok &= ok;
        entries.push(json!({
            "name": name,
            "expected": expected,
            "expected_k": expected_k,
            "verdict": report.verdict,
            "k": report.dichotomy.as_ref().map(|d| d.k),
            "pass": ok,
            "report": report,
        }));
        Ok(())
    };
    match &cfg.input {
        Some(path) => {
            let seq = MeasureSequence::new(load_frames(path)?)?;
            classify_one(path.display().to_string(), seq, cfg.expected, cfg.expected_k)?;
        }
        None => {
            for (kind, seq) in bundled_sequences()? {
                let file = format!("sequence_{}.sgf", verdict_name(kind));
                save_frames(&out.join(&file), seq.frames())?;
                manifest.artifacts.push(file.clone());
                let k = (kind == Verdict::Dichotomy).then_some(0.5);
                classify_one(file, seq, Some(kind), k)?;
            }
        }
    }
    manifest.result = json!({
        "epsilon": cfg.epsilon,
        "radii": cfg.radii,
        "renormalize": cfg.renormalize,
        "bundled_frames": cfg.input.is_none().then_some(FRAMES),
        "sequences": entries,
    });
    manifest.set_status(Status::from_checks(all_ok, true));
    Ok(())
}

fn check_sw(cfg: &CheckSwConfig, _out: &Path, manifest: &mut ResultManifest) -> CliResult<()> {
    let report = sawyer_wheeden_check(&cfg.params, &cfg.sw)?;
    let within = report.condition1_pass && report.condition2_pass && report.condition1_max_deviation <= cfg.condition1_tolerance;
    manifest.flags.push(format!("Q-READING: {}", report.q_reading));
    manifest.result = json!({ "params": cfg.params, "report": report, "condition1_tolerance": cfg.condition1_tolerance });
    manifest.set_status(Status::from_checks(within, true));
    Ok(())
}

fn selftest(cfg: &SelftestConfig, _out: &Path, manifest: &mut ResultManifest) -> CliResult<()> {
    let start = Instant::now();
    let report = geometry_suite(cfg.samples, cfg.seed);
    let elapsed = start.elapsed().as_secs_f64();
    let within = report.passed && elapsed <= cfg.time_budget;
    manifest.result = json!({ "report": report, "elapsed_seconds": elapsed, "time_budget": cfg.time_budget });
    manifest.set_status(Status::from_checks(within, true));
    Ok(())
}
