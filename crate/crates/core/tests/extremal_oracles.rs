//! The radial reduction of the Euclidean functional against the classical
//! sharp HLS constant `pi^{l/2} G(n/2 - l/2) / G(n - l/2) (G(n/2)/G(n))^{l/n - 1}`.

use steinweiss_core::extremal::{euclidean_diagonal_quotient, ClosedFormExtremal, ExtremalKind};
use steinweiss_core::special::gamma;

fn classical(n: usize, l: f64) -> f64 {
    let nf = n as f64;
    std::f64::consts::PI.powf(l / 2.0) * gamma(nf / 2.0 - l / 2.0) / gamma(nf - l / 2.0)
        * (gamma(nf / 2.0) / gamma(nf)).powf(l / nf - 1.0)
}

#[test]
fn radial_quadrature_matches_classical_constant() {
    for (n, l) in [(1, 0.5), (2, 1.0), (3, 2.0), (3, 1.0), (4, 2.5)] {
        let e = ClosedFormExtremal::new(ExtremalKind::EuclideanDiagonal, n, l).unwrap();
        let quad = euclidean_diagonal_quotient(&e);
        let exact = classical(n, l);
        assert!((quad - exact).abs() < 1e-6 * exact, "n={n} lambda={l}: {quad} vs {exact}");
    }
}

#[test]
fn known_values() {
    assert!((classical(2, 1.0) - 2.0 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    assert!((classical(1, 0.5) - gamma(0.25) / gamma(0.75)).abs() < 1e-12);
}
