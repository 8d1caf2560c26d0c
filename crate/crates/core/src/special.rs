//! Gamma function and the measure constants built from it.
//!
//! Gamma comes from `statrs` (Lanczos, reflection below 1/2); relative
//! accuracy is close to 1e-15 on the ranges used by the closed-form constants.

use std::f64::consts::PI;

use statrs::function::gamma as sg;

/// Gamma function; NaN at the poles 0, -1, -2, ...
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() || is_gamma_pole(x) {
        return f64::NAN;
    }
    // exact on small integers
    if x == x.floor() && x <= 21.0 {
        return factorial(x as usize - 1);
    }
    sg::gamma(x)
}

/// Natural log of |Gamma(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    sg::ln_gamma(x)
}

/// True when `x` is (within rounding) a pole of Gamma.
pub fn is_gamma_pole(x: f64) -> bool {
    x <= 0.0 && (x - x.round()).abs() < 1e-12
}

pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Surface area of the unit sphere S^{d-1} in R^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Lebesgue measure of the Euclidean unit ball in R^d.
pub fn euclidean_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Haar measure of the Korányi unit ball {|z|^4 + t^2 < 1} in H^n.
pub fn heisenberg_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    sphere_area(2 * n) * 0.5 * beta(nf / 2.0, 1.5)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_known_values() {
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(5.0), 24.0);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(1.5), PI.sqrt() / 2.0) < 1e-14);
        assert!(rel(gamma(-0.5), -2.0 * PI.sqrt()) < 1e-13);
        assert!(rel(gamma(-1.5), 4.0 * PI.sqrt() / 3.0) < 1e-13);
        // Gamma(1/4) to 16 digits
        assert!(rel(gamma(0.25), 3.625_609_908_221_908) < 1e-13);
        assert!(rel(gamma(1.0 / 3.0), 2.678_938_534_707_747_6) < 1e-13);
    }

    #[test]
    fn gamma_recurrence_holds() {
        let mut x = 0.137;
        while x < 30.0 {
            assert!(rel(gamma(x + 1.0), x * gamma(x)) < 1e-12, "x={x}");
            x += 0.731;
        }
    }

    #[test]
    fn poles_are_nan() {
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-3.0).is_nan());
        assert!(is_gamma_pole(-2.0));
        assert!(!is_gamma_pole(-0.5));
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &x in &[0.3, 1.7, 4.2, 11.5, 25.0] {
            assert!((ln_gamma(x) - gamma(x).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_volumes() {
        assert!(rel(euclidean_ball_volume(2), PI) < 1e-14);
        assert!(rel(euclidean_ball_volume(3), 4.0 * PI / 3.0) < 1e-14);
        assert!(rel(sphere_area(3), 4.0 * PI) < 1e-14);
        assert!(rel(heisenberg_ball_volume(1), PI * PI / 2.0) < 1e-13);
    }
}
