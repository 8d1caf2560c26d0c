use steinweiss_core::diagnostics::synthetic::{bundled_grid, bundled_sequences, EPSILON, RADII};
use steinweiss_core::diagnostics::{
    concentration_classify, geometry_suite, sawyer_wheeden_check, symmetry_check, translation_check, SwOptions,
    SymmetryOptions, Verdict,
};
use steinweiss_core::grid::{build_grid, GridFunction};
use steinweiss_core::{SpaceSpec, SteinWeissOperator, SteinWeissParams};

fn reference_product() -> SteinWeissParams {
    SteinWeissParams::new(SpaceSpec::product(1, 1), 0.1, 0.1, 1.0, 1.0 / 0.7, 1.0 / 0.7)
}

#[test]
fn bundled_sequences_are_classified() {
    for (expected, seq) in bundled_sequences().unwrap() {
        let report = concentration_classify(&seq, EPSILON, &RADII).unwrap();
        assert_eq!(report.verdict, expected, "{:?}", report.concentration);
        match expected {
            Verdict::Compactness => assert!(report.compactness.unwrap().radius <= 2.0),
            Verdict::Dichotomy => {
                let w = report.dichotomy.unwrap();
                assert!((w.k - 0.5).abs() < 0.02, "k = {}", w.k);
            }
            Verdict::Vanishing => assert!(report.vanishing.is_some()),
            Verdict::Inconclusive => unreachable!(),
        }
    }
}

#[test]
fn compactness_survives_renormalization() {
    let (_, seq) = bundled_sequences().unwrap().remove(0);
    let renormalized = seq.renormalized().unwrap();
    let report = concentration_classify(&renormalized, EPSILON, &[0.5, 1.0, 2.0, 4.0, 8.0]).unwrap();
    assert_eq!(report.verdict, Verdict::Compactness);
}

#[test]
fn classifier_rejects_bad_input() {
    let (_, seq) = bundled_sequences().unwrap().remove(0);
    assert!(concentration_classify(&seq, 0.6, &RADII).is_err());
    let grid = bundled_grid().unwrap();
    let bad = GridFunction::constant(grid, 1.0).unwrap();
    assert!(steinweiss_core::diagnostics::MeasureSequence::new(vec![bad]).is_err());
}

#[test]
fn radial_functions_are_symmetric() {
    let grid = build_grid(SpaceSpec::product(1, 1), 24, 16, 1e-2, 1e2).unwrap();
    let f = GridFunction::from_fn(grid, |u| (1.0 + u[0] * u[0] + u[1] * u[1]).powf(-1.5)).unwrap();
    let r = symmetry_check(&f, &SymmetryOptions::default()).unwrap();
    assert!(r.x_prime_asymmetry <= 1e-12, "{r:?}");
    assert!(r.x_second_asymmetry <= 1e-12, "{r:?}");
    assert!(r.monotonicity_defect <= 1e-12, "{r:?}");
    assert!(r.x_second_centroid[0].abs() < 1e-12);
}

#[test]
fn shifted_center_is_recovered() {
    let grid = build_grid(SpaceSpec::product(1, 1), 32, 32, 1e-2, 1e2).unwrap();
    let s = 0.7;
    let f = GridFunction::from_fn(grid.clone(), |u| (-(u[0] * u[0] + (u[1] - s).powi(2))).exp()).unwrap();
    let r = symmetry_check(&f, &SymmetryOptions::default()).unwrap();
    let cell = grid.log_spacing() * s;
    assert!((r.x_second_centroid[0] - s).abs() < cell, "{:?}", r.x_second_centroid);
    assert!(r.x_second_asymmetry < 0.05, "{r:?}");
    assert!(r.x_prime_asymmetry < 1e-12);
}

#[test]
fn angular_harmonic_is_detected() {
    let grid = build_grid(SpaceSpec::euclidean(2), 24, 32, 1e-2, 1e2).unwrap();
    let f = GridFunction::from_fn(grid, |u| {
        let r2 = u[0] * u[0] + u[1] * u[1];
        let cos = u[0] / r2.sqrt();
        (-r2).exp() * (1.0 + 0.1 * cos)
    })
    .unwrap();
    let r = symmetry_check(&f, &SymmetryOptions::default()).unwrap();
    assert!(r.x_prime_asymmetry > 0.05 && r.x_prime_asymmetry < 0.2, "{r:?}");
}

#[test]
fn sawyer_wheeden_reference_case() {
    let report = sawyer_wheeden_check(&reference_product(), &SwOptions::new(1.5, 0.1, 10_000, 7)).unwrap();
    assert!(report.condition1_max_deviation <= 1e-12, "{report:?}");
    assert!(report.condition1_pass && report.condition2_pass, "{report:?}");
    let sup = report.condition1_supremum.unwrap();
    assert!(report.condition1_max <= sup * (1.0 + 1e-12));
}

#[test]
fn sawyer_wheeden_rejects_divergent_t() {
    let params = reference_product();
    // alpha q t = 0.1 * 10/3 * t >= 1 for t >= 3
    let err = sawyer_wheeden_check(&params, &SwOptions::new(3.0, 0.1, 10, 0)).unwrap_err();
    assert!(err.to_string().contains("alpha q t"), "{err}");
}

#[test]
fn sawyer_wheeden_flags_unbounded_weights() {
    // alpha + beta < 0: condition (2) grows like (d/r)^{-alpha-beta} for balls far from x' = 0
    let spec = SpaceSpec::product(1, 1);
    let params = SteinWeissParams::balanced(spec, -0.5, 0.1, 1.0, 1.25);
    let report = sawyer_wheeden_check(&params, &SwOptions::new(1.2, 0.1, 2000, 1)).unwrap();
    assert!(!report.condition2_pass, "{report:?}");
}

#[test]
fn geometry_suite_passes() {
    let report = geometry_suite(1000, 42);
    for c in &report.checks {
        assert!(c.passed, "{c:?}");
    }
}

#[test]
fn center_translation_keeps_the_horizontal_quotient() {
    let params = SteinWeissParams::balanced(SpaceSpec::heisenberg_horizontal(1), 0.25, 0.25, 2.0, 1.0 / 0.6875);
    let grid = build_grid(params.spec, 24, 8, 1e-2, 1e2).unwrap();
    let op = SteinWeissOperator::new(params, grid.clone()).unwrap();
    let bump = |u: &[f64]| ((1.0 + u[0] * u[0] + u[1] * u[1]).powi(2) + u[2] * u[2]).powf(-1.5);
    let f = GridFunction::from_fn(grid.clone(), bump).unwrap();
    let report = translation_check(&op, &f, &f, 0.25).unwrap();
    assert!(report.relative_change < 0.02, "{report:?}");
    assert!(translation_check(&op, &f, &f, 0.0).unwrap().relative_change < 1e-12);

    let full = SteinWeissParams::balanced(SpaceSpec::heisenberg(1), 0.25, 0.25, 2.0, 1.0 / 0.6875);
    let grid = build_grid(full.spec, 8, 4, 1e-1, 1e1).unwrap();
    let op = SteinWeissOperator::new(full, grid.clone()).unwrap();
    let f = GridFunction::from_fn(grid, bump).unwrap();
    assert!(translation_check(&op, &f, &f, 0.25).is_err());
}
