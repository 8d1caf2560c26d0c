//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned
//! below. The process fails when any criterion fails, except for parts
//! listed as unattainable, which are still reported as FAIL.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use steinweiss_cli::{run, Command, ResultManifest, RunRequest};
use steinweiss_core::diagnostics::synthetic::bundled_sequences;
use steinweiss_core::diagnostics::{concentration_classify, geometry_suite, sawyer_wheeden_check, SwOptions, Verdict};
use steinweiss_core::grid::{build_grid, dilate_resample, GridFunction};
use steinweiss_core::solver::{maximize, Init, MaximizeOptions};
use steinweiss_core::{SpaceSpec, SteinWeissOperator, SteinWeissParams};

const DIAGONAL_TOL: f64 = 0.05;
const DIAGONAL_BUDGET_S: f64 = 300.0;
const EUCLIDEAN_TOL: f64 = 0.02;
const PROFILE_TOL: f64 = 0.03;
const EUCLIDEAN_BUDGET_S: f64 = 120.0;
const DILATION_TOL: f64 = 0.02;
const DILATIONS: [f64; 4] = [0.5, 0.8, 1.25, 2.0];
const ASCENT_SLACK: f64 = 1e-12;
const ASCENT_STARTS: u64 = 100;
const K_TOL: f64 = 0.02;
const SW_REDUCTION_TOL: f64 = 1e-12;
const SW_SAMPLES: usize = 10_000;
const SYSTEM_TOL: f64 = 1e-6;
const ASYMMETRY_TOL: f64 = 0.03;
const MONOTONICITY_TOL: f64 = 0.01;
const GEOMETRY_SAMPLES: usize = 1000;
const GEOMETRY_BUDGET_S: f64 = 10.0;
const GEOMETRY_SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    /// The failure comes only from a part that cannot be met.
    excused: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, excused: false, detail }
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_config(command: Command, config: &Path, out: &Path) -> ResultManifest {
    run(command, &RunRequest { config: Some(config), out, seed: None })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn heisenberg_diagonal(out: &Path) -> Outcome {
    let start = Instant::now();
    let m = run_config(Command::VerifyDiagonal, &configs().join("verify_heisenberg.json"), out);
    let secs = start.elapsed().as_secs_f64();
    if let Some(e) = &m.error {
        return Outcome::new(false, format!("run failed: {}", e.message));
    }
    let r = &m.result;
    let printed = num(&r["reference"]["printed"]);
    let at_h = num(&r["functional_at_extremal"]);
    let est = num(&r["maximize_estimate"]);
    let g = &r["params"];
    let desc = m.truncation.as_ref().map(|t| t.grid).expect("maximize ran");
    let nodes = desc.build().map(|g| g.node_count()).unwrap_or(0);
    let pass = (printed - 4.0).abs() < 1e-12 && rel(at_h, 4.0) <= DIAGONAL_TOL && rel(est, 4.0) <= DIAGONAL_TOL && secs <= DIAGONAL_BUDGET_S;
    Outcome::new(
        pass,
        format!(
            "H^1 lambda={} p={:.4}: printed {printed:.12}, J(H) {at_h:.5} ({:.2}%), random-start max {est:.5} ({:.2}%), {nodes} nodes, {secs:.0} s [tol {:.0}%, {DIAGONAL_BUDGET_S:.0} s]",
            g["lambda"], num(&g["p"]), 100.0 * rel(at_h, 4.0), 100.0 * rel(est, 4.0), 100.0 * DIAGONAL_TOL
        ),
    )
}

fn euclidean_diagonal(out: &Path) -> Outcome {
    // n = 2, lambda = 1 from the bundled config
    let start = Instant::now();
    let m = run_config(Command::VerifyDiagonal, &configs().join("verify_plane.json"), &out.join("plane"));
    let secs = start.elapsed().as_secs_f64();
    let plane = match &m.error {
        Some(e) => (false, format!("n=2: run failed: {}", e.message)),
        None => {
            let r = &m.result;
            let (q, est, fit) = (num(&r["reference"]["value"]), num(&r["maximize_estimate"]), num(&r["profile_fit"]["relative_l2_error"]));
            let ok = rel(est, q) <= EUCLIDEAN_TOL && fit <= PROFILE_TOL && secs <= EUCLIDEAN_BUDGET_S;
            (ok, format!("n=2 quadrature {q:.5} max {est:.5} ({:.2}%) profile {:.2}% {secs:.1} s", 100.0 * rel(est, q), 100.0 * fit))
        }
    };
    // n = 1, lambda = 1: lambda equals the dimension
    let line_cfg = out.join("line.json");
    let cfg = json!({
        "schema_version": 1, "space": {"kind": "euclidean", "n": 1}, "lambda": 1.0,
        "grid": {"radial_levels": 64, "angular_resolution": 4, "r_min": 1e-4, "r_max": 1e4},
        "init": {"kind": "random"}, "tolerance": EUCLIDEAN_TOL, "profile_tolerance": PROFILE_TOL,
        "maximize": {"max_iter": 3000}
    });
    std::fs::write(&line_cfg, cfg.to_string()).expect("write config");
    let m = run_config(Command::VerifyDiagonal, &line_cfg, &out.join("line"));
    let (line_ok, line_detail, line_excused) = match &m.error {
        Some(e) if e.kind == "inadmissible" => (
            false,
            format!("n=1 lambda=1 rejected ({}): the kernel |x|^-1 is not locally integrable on R, J(f*,f*) is infinite", e.details.join("; ")),
            true,
        ),
        Some(e) => (false, format!("n=1: run failed: {}", e.message), false),
        None => {
            let r = &m.result;
            let (q, est) = (num(&r["reference"]["value"]), num(&r["maximize_estimate"]));
            (rel(est, q) <= EUCLIDEAN_TOL, format!("n=1 quadrature {q:.5} max {est:.5}"), false)
        }
    };
    Outcome {
        pass: plane.0 && line_ok,
        excused: plane.0 && line_excused,
        detail: format!("{}; {line_detail} [tol {:.0}%, profile {:.0}%, {EUCLIDEAN_BUDGET_S:.0} s]", plane.1, 100.0 * EUCLIDEAN_TOL, 100.0 * PROFILE_TOL),
    }
}

/// `(1 + |u|^2)^{-a}` with a mild angular tilt.
fn test_function(grid: &std::sync::Arc<steinweiss_core::QuadratureGrid>, a: f64, tilt: f64) -> GridFunction {
    let norms = grid.node_norms().to_vec();
    let values = (0..grid.node_count())
        .map(|i| {
            let u = grid.node_coords(i);
            let r = norms[i];
            (1.0 + r * r).powf(-a) * (1.0 + tilt * u[0] / r)
        })
        .collect();
    GridFunction::new(grid.clone(), values).expect("positive values")
}

fn dilation_invariance() -> Outcome {
    let sets = [
        ("R^2", SteinWeissParams::balanced(SpaceSpec::euclidean(2), 0.3, 0.1, 1.0, 1.6)),
        ("R^3", SteinWeissParams::balanced(SpaceSpec::euclidean(3), 0.2, 0.2, 1.5, 1.5)),
        ("H^1 |u|", SteinWeissParams::balanced(SpaceSpec::heisenberg(1), 0.5, 0.5, 2.0, 1.6)),
        ("H^1 |z|", SteinWeissParams::balanced(SpaceSpec::heisenberg_horizontal(1), 0.25, 0.25, 2.0, 1.0 / 0.6875)),
        ("R x R |x'|", SteinWeissParams::balanced(SpaceSpec::product(1, 1), 0.1, 0.1, 1.0, 1.0 / 0.7)),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, params) in sets {
        if let Err(e) = params.validate() {
            return Outcome::new(false, format!("{name}: {e}"));
        }
        let grid = build_grid(params.spec, 32, 8, 1e-3, 1e3).expect("grid");
        let op = SteinWeissOperator::new(params, grid.clone()).expect("operator");
        let nf = params.dimension();
        // tails well inside L^{q'} and L^p
        let f = test_function(&grid, 0.75 * nf / params.q_prime, 0.3);
        let g = test_function(&grid, 0.75 * nf / params.p, -0.2);
        let j = op.functional_j(&f, &g).expect("J");
        let mut local: f64 = 0.0;
        for r in DILATIONS {
            let fr = dilate_resample(&f, r, params.q_prime, 0.0).expect("dilate");
            let gr = dilate_resample(&g, r, params.p, 0.0).expect("dilate");
            local = local.max(rel(op.functional_j(&fr, &gr).expect("J"), j));
        }
        worst = worst.max(local);
        parts.push(format!("{name} {:.3}%", 100.0 * local));
    }
    Outcome::new(worst <= DILATION_TOL, format!("max |J(f_r,g_r)-J|/J over r in {DILATIONS:?}: {} [tol {:.0}%]", parts.join(", "), 100.0 * DILATION_TOL))
}

fn monotone_ascent() -> Outcome {
    let sets = [
        ("R^1", SteinWeissParams::balanced(SpaceSpec::euclidean(1), 0.1, 0.1, 0.5, 1.5), (24, 4, 1e-3, 1e3)),
        ("R x R", SteinWeissParams::balanced(SpaceSpec::product(1, 1), 0.1, 0.1, 1.0, 1.0 / 0.7), (12, 8, 1e-2, 1e2)),
        ("H^1 |z|", SteinWeissParams::balanced(SpaceSpec::heisenberg_horizontal(1), 0.25, 0.25, 2.0, 1.0 / 0.6875), (8, 4, 1e-1, 1e1)),
    ];
    let options = MaximizeOptions { max_iter: 60, ..Default::default() };
    let mut worst = f64::NEG_INFINITY;
    let mut runs = 0;
    for (name, params, (k, a, lo, hi)) in sets {
        if let Err(e) = params.validate() {
            return Outcome::new(false, format!("{name}: {e}"));
        }
        let op = SteinWeissOperator::new(params, build_grid(params.spec, k, a, lo, hi).expect("grid")).expect("operator");
        for seed in 0..ASCENT_STARTS {
            let state = maximize(&op, Init::Random { seed }, &options).expect("maximize");
            let drop = state.functional_history.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max(drop);
            runs += 1;
        }
    }
    Outcome::new(worst <= ASCENT_SLACK, format!("{runs} random starts on 3 parameter sets, largest per-step drop {worst:.3e} [tol {ASCENT_SLACK:.0e}]"))
}

fn trichotomy() -> Outcome {
    let sequences = match bundled_sequences() {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, format!("generator failed: {e}")),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for (expected, seq) in sequences {
        let report = concentration_classify(&seq, steinweiss_core::diagnostics::synthetic::EPSILON, &steinweiss_core::diagnostics::synthetic::RADII)
            .expect("classify");
        let mut ok = report.verdict == expected;
        let mut part = format!("{expected:?} -> {:?}", report.verdict);
        if expected == Verdict::Dichotomy {
            let k = report.dichotomy.as_ref().map_or(f64::NAN, |d| d.k);
            ok &= (k - 0.5).abs() <= K_TOL;
            part += &format!(" (k = {k:.4})");
        }
        pass &= ok;
        parts.push(part);
    }
    Outcome::new(pass, format!("{} [k tol {K_TOL}]", parts.join(", ")))
}

fn sawyer_wheeden() -> Outcome {
    let params = SteinWeissParams::new(SpaceSpec::product(1, 1), 0.1, 0.1, 1.0, 1.0 / 0.7, 1.0 / 0.7);
    let report = match sawyer_wheeden_check(&params, &SwOptions::new(1.5, 0.1, SW_SAMPLES, 7)) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("reference run failed: {e}")),
    };
    // alpha q t = 1 at t = 3; anything beyond must be refused as well
    let q = params.q();
    let rejected = [1.0 / (params.alpha * q), 3.0, 5.0]
        .iter()
        .all(|&t| sawyer_wheeden_check(&params, &SwOptions::new(t, 0.1, 10, 0)).is_err());
    let pass = report.condition1_max_deviation <= SW_REDUCTION_TOL && report.condition1_pass && report.condition2_pass && rejected;
    Outcome::new(
        pass,
        format!(
            "condition (1) max rel. gap to (r'/r)^(Q-eps-lambda) {:.2e} on {SW_SAMPLES} pairs, C_eps {:.4} <= {:.4}, normalized C_t {:.4} <= {}, alpha q t >= m rejected: {rejected} [tol {SW_REDUCTION_TOL:.0e}]",
            report.condition1_max_deviation, report.condition1_max, report.condition1_cap, report.condition2_normalized_max, report.condition2_cap
        ),
    )
}

fn system_and_symmetry(out: &Path) -> Outcome {
    let m = run_config(Command::SolveSystem, &configs().join("solve_system_product.json"), out);
    if let Some(e) = &m.error {
        return Outcome::new(false, format!("run failed: {}", e.message));
    }
    let r = &m.result;
    let res = r["residuals"].as_array().map(|v| v.iter().map(num).fold(0.0, f64::max)).unwrap_or(f64::NAN);
    let converged = m.iterate_summary.as_ref().is_some_and(|s| s.converged);
    let (asym, mono) = (num(&r["x_prime_asymmetry"]), num(&r["monotonicity_defect"]));
    let pass = converged && res < SYSTEM_TOL && asym <= ASYMMETRY_TOL && mono <= MONOTONICITY_TOL;
    Outcome::new(
        pass,
        format!(
            "R x R alpha=beta=0.1: maximize converged {converged}, system residual {res:.2e}, x' asymmetry {asym:.2e}, monotonicity defect {mono:.2e} [tol {SYSTEM_TOL:.0e}, {:.0}%, {:.0}%]",
            100.0 * ASYMMETRY_TOL, 100.0 * MONOTONICITY_TOL
        ),
    )
}

fn geometry() -> Outcome {
    let start = Instant::now();
    let report = geometry_suite(GEOMETRY_SAMPLES, GEOMETRY_SEED);
    let secs = start.elapsed().as_secs_f64();
    let worst = report.checks.iter().map(|c| c.max_error).fold(0.0, f64::max);
    Outcome::new(
        report.passed && secs <= GEOMETRY_BUDGET_S,
        format!("{} checks on {GEOMETRY_SAMPLES} samples, worst error {worst:.2e}, {secs:.2} s [tol 1e-12, {GEOMETRY_BUDGET_S:.0} s]", report.checks.len()),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 heisenberg diagonal constant", Box::new(|| heisenberg_diagonal(&dir.path().join("c1")))),
        ("2 euclidean diagonal self-consistency", Box::new(|| euclidean_diagonal(&dir.path().join("c2")))),
        ("3 dilation invariance", Box::new(dilation_invariance)),
        ("4 monotone ascent", Box::new(monotone_ascent)),
        ("5 trichotomy classifier", Box::new(trichotomy)),
        ("6 sawyer-wheeden checker", Box::new(sawyer_wheeden)),
        ("7 system solve and symmetry", Box::new(|| system_and_symmetry(&dir.path().join("c7")))),
        ("8 geometry suite", Box::new(geometry)),
    ];
    let mut unexpected = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let outcome = check();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {} ({:.1} s)", outcome.detail, start.elapsed().as_secs_f64());
        if !outcome.pass && !outcome.excused {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
