//! Riesz potentials of indicator functions against closed-form integrals.

use std::f64::consts::PI;

use steinweiss_core::geometry::SpaceSpec;
use steinweiss_core::grid::{build_grid, GridFunction};
use steinweiss_core::kernel::KernelOperator;

fn potential(k: &KernelOperator, g: &GridFunction) -> Vec<f64> {
    let w = k.grid().node_weights();
    let phi: Vec<f64> = g.values().iter().zip(w).map(|(v, w)| v * w).collect();
    k.apply(&phi)
}

#[test]
fn line_indicator_at_origin() {
    // int_{-1}^{1} |y|^{-1/2} dy = 4; shell edges are aligned with |y| = 1
    let grid = build_grid(SpaceSpec::euclidean(1), 16, 8, 1e-6, 1e2).unwrap();
    let g = GridFunction::from_fn(grid.clone(), |u| if u[0].abs() <= 1.0 { 1.0 } else { 0.0 }).unwrap();
    let k = KernelOperator::new(grid.clone(), 0.5).unwrap();
    let out = potential(&k, &g);
    assert!((out[0] - 4.0).abs() / 4.0 < 0.01, "{}", out[0]);
}

#[test]
fn newtonian_potential_of_ball() {
    // int_{|y|<1} |x-y|^{-1} dy = 2 pi (1 - |x|^2/3) for |x| < 1
    let grid = build_grid(SpaceSpec::euclidean(3), 48, 12, 1e-4, 1e2).unwrap();
    let inside = |u: &[f64]| if u.iter().map(|x| x * x).sum::<f64>() <= 1.0 { 1.0 } else { 0.0 };
    let g = GridFunction::from_fn(grid.clone(), inside).unwrap();
    let k = KernelOperator::new(grid.clone(), 1.0).unwrap();
    let out = potential(&k, &g);
    let mut worst: f64 = 0.0;
    for i in 0..grid.node_count() {
        let r = grid.node_norms()[i];
        if r < 0.8 {
            let exact = 2.0 * PI * (1.0 - r * r / 3.0);
            worst = worst.max((out[i] - exact).abs() / exact);
        }
    }
    assert!(worst < 0.01, "worst relative error {worst}");
}

#[test]
fn heisenberg_ball_potential_at_origin() {
    // int_{|v|<1} |v|^{-2} dv = Q c_Q / (Q - 2) = pi^2 on H^1
    let grid = build_grid(SpaceSpec::heisenberg(1), 24, 8, 1e-5, 1e1).unwrap();
    let g = GridFunction::from_fn(grid.clone(), |u| {
        let z2 = u[0] * u[0] + u[1] * u[1];
        if z2 * z2 + u[2] * u[2] <= 1.0 { 1.0 } else { 0.0 }
    })
    .unwrap();
    let k = KernelOperator::new(grid.clone(), 2.0).unwrap();
    let out = potential(&k, &g);
    let exact = PI * PI;
    for i in 0..grid.nodes_per_shell() {
        assert!((out[i] - exact).abs() / exact < 0.01, "node {i}: {} vs {exact}", out[i]);
    }
}
