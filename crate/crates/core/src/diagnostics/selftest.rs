//! Randomized checks of the group law, norm and quasi-distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{dilation, group_inv, group_mul, homogeneous_norm, left_distance, SpacePoint, SpaceSpec};

pub const GEOMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub space: String,
    pub property: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<SuiteCheck>,
    pub passed: bool,
}

fn sample(spec: &SpaceSpec, rng: &mut ChaCha8Rng) -> SpacePoint {
    SpacePoint((0..spec.coord_len()).map(|_| rng.gen_range(-2.0..2.0)).collect())
}

fn sup_diff(a: &SpacePoint, b: &SpacePoint) -> f64 {
    a.0.iter().zip(&b.0).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Spaces covered by the suite.
pub fn suite_spaces() -> Vec<SpaceSpec> {
    vec![SpaceSpec::heisenberg(1), SpaceSpec::heisenberg(2), SpaceSpec::euclidean(3), SpaceSpec::product(2, 1)]
}

/// Associativity, identity and inverses (absolute error), homogeneity of
/// the norm under dilations, symmetry of the quasi-distance and left
/// invariance (relative error), each on `samples` random draws per space.
pub fn geometry_suite(samples: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for spec in suite_spaces() {
        let e = spec.identity();
        let mut err = [0.0f64; 6];
        for _ in 0..samples {
            let (u, v, w) = (sample(&spec, &mut rng), sample(&spec, &mut rng), sample(&spec, &mut rng));
            let mul = |a: &SpacePoint, b: &SpacePoint| group_mul(a, b, &spec).expect("sampled points match the space");
            let inv = |a: &SpacePoint| group_inv(a, &spec).expect("sampled points match the space");
            let dist = |a: &SpacePoint, b: &SpacePoint| left_distance(a, b, &spec).expect("sampled points match the space");
            err[0] = err[0].max(sup_diff(&mul(&mul(&u, &v), &w), &mul(&u, &mul(&v, &w))));
            err[1] = err[1].max(sup_diff(&mul(&u, &e), &u).max(sup_diff(&mul(&e, &u), &u)));
            err[2] = err[2].max(sup_diff(&mul(&u, &inv(&u)), &e).max(sup_diff(&mul(&inv(&u), &u), &e)));
            let r = (rng.gen_range(-3.0f64..3.0)).exp();
            let du = dilation(&u, r, &spec).expect("positive factor");
            err[3] = err[3].max(rel(homogeneous_norm(&du, &spec), r * homogeneous_norm(&u, &spec)));
            err[4] = err[4].max(rel(dist(&u, &v), dist(&v, &u)));
            err[5] = err[5].max(rel(dist(&mul(&w, &u), &mul(&w, &v)), dist(&u, &v)));
        }
        let names = ["associativity", "identity", "inverse", "norm homogeneity", "metric symmetry", "left invariance"];
        for (name, e) in names.iter().zip(err) {
            checks.push(SuiteCheck {
                space: format!("{:?}", spec.kind),
                property: name.to_string(),
                max_error: e,
                tolerance: GEOMETRY_TOL,
                passed: e <= GEOMETRY_TOL,
            });
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    SuiteReport { samples, seed, checks, passed }
}
