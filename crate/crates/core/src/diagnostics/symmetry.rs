//! Radial symmetry and monotonicity of solutions in the weighted factor.
//!
//! On `R^m x R^n` a positive solution of the integral system is radially
//! symmetric and decreasing in `x'` about the origin and symmetric in `x''`
//! about some point. The checks resample the grid function at transformed
//! nodes and compare in relative `L^1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::SpaceKind;
use crate::grid::{interpolate_values, GridFunction};
use crate::quadrature::compensated_sum;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Max relative `L^1` difference over reflections and rotations of `x'`.
    pub x_prime_asymmetry: f64,
    /// Centroid of `|f|` in the `x''` factor; empty on `R^n`.
    pub x_second_centroid: Vec<f64>,
    /// Max relative `L^1` difference over reflections of `x''` about the centroid.
    pub x_second_asymmetry: f64,
    /// Largest outward increase of the profile averaged over spheres in
    /// `x'` on the slice `x'' = 0`, relative to the profile maximum.
    pub monotonicity_defect: f64,
    pub rotations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SymmetryOptions {
    pub rotations: usize,
    pub seed: u64,
}

impl Default for SymmetryOptions {
    fn default() -> Self {
        Self { rotations: 8, seed: 0 }
    }
}

fn relative_l1(f: &GridFunction, map: impl Fn(&[f64], &mut [f64])) -> f64 {
    let grid = f.grid();
    let w = grid.node_weights();
    let mut buf = vec![0.0; grid.spec().coord_len()];
    let mut diff = Vec::with_capacity(grid.node_count());
    for i in 0..grid.node_count() {
        map(grid.node_coords(i), &mut buf);
        let image = interpolate_values(grid, f.values(), &buf);
        diff.push(w[i] * (f.values()[i] - image).abs());
    }
    let norm = compensated_sum(f.values().iter().zip(w).map(|(v, w)| w * v.abs()));
    compensated_sum(diff) / norm
}

/// Haar-random rotation of `R^m` by Gram–Schmidt on a Gaussian matrix.
fn random_rotation(m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    while rows.len() < m {
        let mut v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        for r in &rows {
            let dot: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            rows.push(v);
        }
    }
    rows
}

pub fn symmetry_check(f: &GridFunction, options: &SymmetryOptions) -> Result<SymmetryReport> {
    let grid = f.grid();
    let (m, d) = match grid.spec().kind {
        SpaceKind::Product { m, n } => (m, m + n),
        SpaceKind::Euclidean { n } => (n, n),
        SpaceKind::Heisenberg { .. } => return invalid("symmetry checks need a Euclidean or product space"),
    };
    let w = grid.node_weights();
    let mass = compensated_sum(f.values().iter().zip(w).map(|(v, w)| w * v.abs()));
    if !(mass > 0.0) {
        return invalid("symmetry check of the zero function");
    }

    let mut asym: f64 = 0.0;
    for j in 0..m {
        asym = asym.max(relative_l1(f, |u, out| {
            out.copy_from_slice(u);
            out[j] = -u[j];
        }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    if m >= 2 {
        for _ in 0..options.rotations {
            let rot = random_rotation(m, &mut rng);
            asym = asym.max(relative_l1(f, |u, out| {
                out.copy_from_slice(u);
                for (i, row) in rot.iter().enumerate() {
                    out[i] = row.iter().zip(&u[..m]).map(|(a, b)| a * b).sum();
                }
            }));
        }
    }

    let mut centroid = vec![0.0; d - m];
    for i in 0..grid.node_count() {
        let u = grid.node_coords(i);
        for (c, x) in centroid.iter_mut().zip(&u[m..]) {
            *c += w[i] * f.values()[i].abs() * x / mass;
        }
    }
    let mut second: f64 = 0.0;
    for j in m..d {
        let c = centroid[j - m];
        second = second.max(relative_l1(f, |u, out| {
            out.copy_from_slice(u);
            out[j] = 2.0 * c - u[j];
        }));
    }

    // averages over spheres in x' on the slice x'' = 0, at the shell radii
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for j in 0..m {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; m];
            e[j] = sign;
            directions.push(e);
        }
    }
    if m >= 2 {
        for _ in 0..options.rotations {
            let v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            directions.push(v.iter().map(|a| a / norm).collect());
        }
    }
    let mut point = vec![0.0; d];
    let profile: Vec<f64> = (0..grid.shell_count())
        .map(|k| {
            let (a, b) = grid.shell_bounds(k);
            let rho = (a * b).sqrt();
            let total: f64 = directions
                .iter()
                .map(|e| {
                    point[..m].iter_mut().zip(e).for_each(|(p, x)| *p = rho * x);
                    interpolate_values(grid, f.values(), &point)
                })
                .sum();
            total / directions.len() as f64
        })
        .collect();
    let peak = profile.iter().cloned().fold(0.0, f64::max);
    let defect = profile.windows(2).map(|p| (p[1] - p[0]).max(0.0)).fold(0.0, f64::max);

    Ok(SymmetryReport {
        x_prime_asymmetry: asym,
        x_second_centroid: centroid,
        x_second_asymmetry: second,
        monotonicity_defect: if peak > 0.0 { defect / peak } else { 0.0 },
        rotations: if m >= 2 { options.rotations } else { 0 },
        seed: options.seed,
    })
}
