//! The two-condition test for boundedness of the weighted fractional
//! integral `T g = int |x - y|^{-lambda} g(y) dy` from
//! `L^p(|y'|^{beta p})` to `L^q(|x'|^{-alpha q})` on `R^m x R^n`, with
//! `phi(B) = 2^{24 lambda} r^{-lambda}`.
//!
//! Condition (1) is evaluated literally and compared with its reduction
//! `(r'/r)^{Q - eps - lambda}`. Condition (2) needs ball averages of
//! `|x'|^{-s}`, which depend only on the radius and the distance of the
//! center from `{x' = 0}`; they are reduced to one- or two-dimensional
//! integrals and computed by adaptive quadrature. `Q` is read as `m + n`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::{SpaceKind, WeightKind};
use crate::quadrature::adaptive;
use crate::special::{euclidean_ball_volume, sphere_area};
use crate::steinweiss::SteinWeissParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwOptions {
    pub t: f64,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    /// Cap on condition (1); defaults to the supremum `4^{Q - eps - lambda}`.
    #[serde(default)]
    pub cap_epsilon: Option<f64>,
    /// Cap on condition (2) after dividing out `2^{24 lambda} |B_1|^{(lambda+alpha+beta)/N}`.
    #[serde(default)]
    pub cap_t: Option<f64>,
    /// Ball radii are drawn log-uniformly from this range.
    #[serde(default = "default_radii")]
    pub radius_range: (f64, f64),
}

fn default_radii() -> (f64, f64) {
    (1e-3, 1e3)
}

/// Default normalized cap on condition (2).
pub const DEFAULT_CAP_T: f64 = 10.0;

impl SwOptions {
    pub fn new(t: f64, epsilon: f64, samples: usize, seed: u64) -> Self {
        Self { t, epsilon, samples, seed, cap_epsilon: None, cap_t: None, radius_range: default_radii() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwReport {
    pub homogeneous_dimension: f64,
    pub q_reading: String,
    /// `Q - eps - lambda`.
    pub condition1_exponent: f64,
    pub condition1_max: f64,
    /// `4^{Q - eps - lambda}` when the exponent is positive; unbounded otherwise.
    pub condition1_supremum: Option<f64>,
    /// Largest relative gap between the literal ratio and its reduction.
    pub condition1_max_deviation: f64,
    pub condition1_cap: f64,
    pub condition1_pass: bool,
    pub condition2_max: f64,
    pub condition2_normalized_max: f64,
    pub condition2_cap: f64,
    pub condition2_pass: bool,
    pub samples: usize,
    pub seed: u64,
    pub t: f64,
    pub epsilon: f64,
}

/// `phi(B) = 2^{24 lambda} r^{-lambda}`.
pub fn phi(lambda: f64, r: f64) -> f64 {
    2f64.powf(24.0 * lambda) * r.powf(-lambda)
}

/// Condition (1) for radii `r' <= 4 r`, evaluated as printed.
pub fn condition1(big_q: f64, epsilon: f64, lambda: f64, r: f64, r_small: f64) -> f64 {
    (r_small / r).powf(big_q - epsilon) * (phi(lambda, r_small) / phi(lambda, r))
}

/// Average of `|x'|^{-s}` over the ball of radius `r` in `R^m x R^n`
/// whose center lies at distance `d` from `{x' = 0}`.
pub fn ball_average(m: usize, n: usize, r: f64, d: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    // scale to the unit ball
    r.powf(-s) * unit_ball_average(m, n, d / r, s)
}

fn unit_ball_average(m: usize, n: usize, d: f64, s: f64) -> f64 {
    const TOL: f64 = 1e-10;
    let slice = euclidean_ball_volume(n);
    let height = |rho2: f64| slice * (1.0 - rho2).max(0.0).powf(n as f64 / 2.0);
    let total = euclidean_ball_volume(m + n);
    let integral = if m == 1 {
        // x' = d + sin(theta); the factor cos^{n+1} is smooth and the
        // singular point sin(theta) = -d is absorbed by a power substitution
        let f = |theta: f64| (d + theta.sin()).abs().powf(-s) * slice * theta.cos().powi(n as i32 + 1);
        let half = std::f64::consts::FRAC_PI_2;
        if d < 1.0 && s > 0.0 {
            let theta0 = (-d).asin();
            let k = 1.0 / (1.0 - s);
            let right = |v: f64| {
                let w = (half - theta0) * v.powf(k);
                f(theta0 + w) * k * (half - theta0) * v.powf(k - 1.0)
            };
            let left = |v: f64| {
                let w = (theta0 + half) * v.powf(k);
                f(theta0 - w) * k * (theta0 + half) * v.powf(k - 1.0)
            };
            adaptive(left, 0.0, 1.0, 0.0, TOL) + adaptive(right, 0.0, 1.0, 0.0, TOL)
        } else {
            adaptive(f, -half, half, 0.0, TOL)
        }
    } else {
        // polar coordinates about the center in the x' factor
        let ring = sphere_area(m - 1);
        let inner = |rho: f64| {
            let g = |theta: f64| {
                let x2 = d * d + rho * rho + 2.0 * d * rho * theta.cos();
                x2.max(0.0).powf(-s / 2.0) * theta.sin().powi(m as i32 - 2)
            };
            adaptive(g, 0.0, std::f64::consts::PI, 0.0, 1e-9)
        };
        let f = |rho: f64| ring * rho.powi(m as i32 - 1) * height(rho * rho) * inner(rho);
        if d > 0.0 && d < 1.0 {
            adaptive(f, 0.0, d, 0.0, 1e-9) + adaptive(f, d, 1.0, 0.0, 1e-9)
        } else {
            adaptive(f, 0.0, 1.0, 0.0, 1e-9)
        }
    };
    integral / total
}

/// Condition (2) for the ball of radius `r` at distance `d` from `{x' = 0}`.
pub fn condition2(params: &SteinWeissParams, m: usize, n: usize, t: f64, r: f64, d: f64) -> f64 {
    let (q, pp) = (params.q(), params.p_prime());
    let vol = euclidean_ball_volume(m + n) * r.powi((m + n) as i32);
    let a = ball_average(m, n, r, d, params.alpha * q * t).powf(1.0 / (q * t));
    let b = ball_average(m, n, r, d, params.beta * pp * t).powf(1.0 / (pp * t));
    phi(params.lambda, r) * vol.powf(1.0 / q + 1.0 / pp) * a * b
}

pub fn sawyer_wheeden_check(params: &SteinWeissParams, options: &SwOptions) -> Result<SwReport> {
    let (m, n) = match (params.spec.kind, params.spec.weight_kind) {
        (SpaceKind::Product { m, n }, WeightKind::PartialFirstFactor) => (m, n),
        _ => return invalid("the two-condition check applies to R^m x R^n with weights on x'"),
    };
    let SwOptions { t, epsilon, samples, seed, .. } = *options;
    if !(t > 1.0) {
        return invalid(format!("t must exceed 1, got {t}"));
    }
    if !(epsilon > 0.0) {
        return invalid(format!("epsilon must be positive, got {epsilon}"));
    }
    let (q, pp, mf) = (params.q(), params.p_prime(), m as f64);
    if params.alpha * q * t >= mf {
        return invalid(format!("alpha q t = {} >= m = {m}: the ball averages of |x'|^(-alpha q t) diverge", params.alpha * q * t));
    }
    if params.beta * pp * t >= mf {
        return invalid(format!("beta p' t = {} >= m = {m}: the ball averages of |y'|^(-beta p' t) diverge", params.beta * pp * t));
    }
    let (r_lo, r_hi) = options.radius_range;
    if !(r_lo > 0.0 && r_hi > r_lo) {
        return invalid("radius range must satisfy 0 < lo < hi");
    }
    let big_q = (m + n) as f64;
    let exponent = big_q - epsilon - params.lambda;
    let supremum = (exponent > 0.0).then(|| 4f64.powf(exponent));
    let cap1 = options.cap_epsilon.or(supremum.map(|s| s * (1.0 + 1e-9))).unwrap_or(f64::INFINITY);
    let scale2 = 2f64.powf(24.0 * params.lambda)
        * euclidean_ball_volume(m + n).powf((params.lambda + params.alpha + params.beta) / big_q);
    let cap2 = options.cap_t.unwrap_or(DEFAULT_CAP_T);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (lo.ln() + rng.gen::<f64>() * (hi / lo).ln()).exp();
    let (mut c1_max, mut dev, mut c2_max) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..samples {
        let r = log_uniform(&mut rng, r_lo, r_hi);
        // B' inside 4B: radius up to 4r, the center offset is immaterial
        let r_small = 4.0 * r * (1.0 - rng.gen::<f64>());
        let c1 = condition1(big_q, epsilon, params.lambda, r, r_small);
        let closed = (r_small / r).powf(exponent);
        dev = dev.max((c1 - closed).abs() / closed);
        c1_max = c1_max.max(c1);
        // every tenth ball is centered on the singular set
        let d = if i % 10 == 0 { 0.0 } else { r * log_uniform(&mut rng, 1e-3, 1e3) };
        c2_max = c2_max.max(condition2(params, m, n, t, r, d));
    }
    let normalized = c2_max / scale2;
    Ok(SwReport {
        homogeneous_dimension: big_q,
        q_reading: "Q read as the dimension m + n of the product space".into(),
        condition1_exponent: exponent,
        condition1_max: c1_max,
        condition1_supremum: supremum,
        condition1_max_deviation: dev,
        condition1_cap: cap1,
        condition1_pass: c1_max <= cap1,
        condition2_max: c2_max,
        condition2_normalized_max: normalized,
        condition2_cap: cap2,
        condition2_pass: normalized.is_finite() && normalized <= cap2,
        samples,
        seed,
        t,
        epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_of_constant_is_one() {
        // s -> 0 limit through the quadrature path
        let a = ball_average(1, 1, 2.0, 0.5, 1e-12);
        assert!((a - 1.0).abs() < 1e-9, "{a}");
    }

    #[test]
    fn far_ball_average_is_close_to_center_value() {
        let d = 1e3;
        let a = ball_average(1, 1, 1.0, d, 0.5);
        assert!((a / d.powf(-0.5) - 1.0).abs() < 1e-6, "{a}");
        let b = ball_average(2, 1, 1.0, d, 0.5);
        assert!((b / d.powf(-0.5) - 1.0).abs() < 1e-6, "{b}");
    }

    #[test]
    fn centered_average_matches_closed_form() {
        // R x R, ball at the origin: (1/pi) int_{-1}^{1} |x|^{-s} 2 sqrt(1 - x^2) dx
        //   = (2/pi) B((1-s)/2, 3/2)
        let s = 0.4;
        let exact = 2.0 / std::f64::consts::PI * crate::special::beta((1.0 - s) / 2.0, 1.5);
        let a = ball_average(1, 1, 1.0, 0.0, s);
        assert!((a - exact).abs() < 1e-9 * exact, "{a} vs {exact}");
        // R^2 x R at the origin: 2 pi B(1 - s/2, 3/2) / (4 pi / 3)
        let exact2 = 1.5 * crate::special::beta(1.0 - s / 2.0, 1.5);
        let b = ball_average(2, 1, 1.0, 0.0, s);
        assert!((b - exact2).abs() < 1e-7 * exact2, "{b} vs {exact2}");
    }
}
