//! The Riesz kernel `d(u, v)^{-lambda}` discretized on a log-polar grid.
//!
//! Entry `(i, j)` is the mean of `d(u_i, .)^{-lambda}` over cell `j` (with
//! respect to the Haar measure) whenever cell `j` is not farther out than
//! cell `i`; the remaining entries are fixed by symmetry, so summing against
//! cell volumes gives a symmetric bilinear form. The self cell is integrated
//! in polar coordinates about its node, nearby cells by adaptive tensor Gauss
//! rules.
//!
//! Cells of shell `k + s` are the images of cells of shell `k` under the
//! dilation by `e^{s h}`, and a rotation of the last azimuth by one bin maps
//! cells to cells, so an entry only depends on the shell offset, the
//! non-azimuthal part of the row cell, and the column cell relative to the
//! row's azimuth. Only that table is stored; applying the operator costs
//! `O(nodes^2)` with no matrix in memory.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::geometry::{dilate_into, distance_of, mul_into};
use crate::grid::{AxisKind, QuadratureGrid, MAX_COORDS};
use crate::quadrature::{compensated_sum, gauss_legendre};

#[derive(Debug, Clone)]
pub struct KernelOperator {
    grid: Arc<QuadratureGrid>,
    lambda: f64,
    shells: usize,
    per_shell: usize,
    az: usize,
    rest: usize,
    table: Vec<f64>,
    row_scale: Vec<f64>,
}

impl KernelOperator {
    pub fn new(grid: Arc<QuadratureGrid>, lambda: f64) -> Result<Self> {
        let big_n = grid.spec().homogeneous_dimension() as f64;
        if !(lambda > 0.0 && lambda < big_n) {
            return invalid(format!("kernel exponent must satisfy 0 < lambda < {big_n}, got {lambda}"));
        }
        let shells = grid.shell_count();
        let per_shell = grid.nodes_per_shell();
        let az = grid.azimuth_bins();
        let rest = per_shell / az;
        let integrator = CellIntegrator::new(&grid, lambda);

        // Only offsets l - k >= 0 are integrated, so every entry is a mean
        // over the larger of the two cells while the smaller one is
        // collocated at its node. Negative offsets follow from D_ij = D_ji.
        let raw: Vec<Vec<f64>> = (0..shells * rest)
            .into_par_iter()
            .map(|job| {
                let delta = (job / rest) as i64;
                let a = (job % rest) * az;
                (0..per_shell).map(|b| integrator.average(delta, a, b)).collect()
            })
            .collect();

        let h = grid.log_spacing();
        let offsets = 2 * shells - 1;
        let mut table = vec![0.0; offsets * rest * per_shell];
        for di in 0..offsets {
            let delta = di as i64 - (shells as i64 - 1);
            let damp = (-(delta as f64) * h * lambda).exp();
            for ar in 0..rest {
                for b in 0..per_shell {
                    let (br, bphi) = (b / az, b % az);
                    let back = ar * az + (az - bphi) % az;
                    let forward = || raw[delta as usize * rest + ar][b];
                    let reverse = || damp * raw[(-delta) as usize * rest + br][back];
                    table[(di * rest + ar) * per_shell + b] = match delta.cmp(&0) {
                        Ordering::Greater => forward(),
                        Ordering::Less => reverse(),
                        Ordering::Equal => 0.5 * (forward() + reverse()),
                    };
                }
            }
        }
        let x0 = grid.log_origin();
        let row_scale = (0..shells).map(|k| (-lambda * (x0 + k as f64 * h)).exp()).collect();
        Ok(Self { grid, lambda, shells, per_shell, az, rest, table, row_scale })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Symmetric matrix entry `D_ij`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (k, a) = (i / self.per_shell, i % self.per_shell);
        let (l, b) = (j / self.per_shell, j % self.per_shell);
        let (ar, aphi) = (a / self.az, a % self.az);
        let (br, bphi) = (b / self.az, b % self.az);
        let di = l + self.shells - 1 - k;
        let col = br * self.az + (bphi + self.az - aphi) % self.az;
        self.row_scale[k] * self.table[(di * self.rest + ar) * self.per_shell + col]
    }

    /// `(D phi)_i = sum_j D_ij phi_j`. Rows are independent and each row is
    /// summed in a fixed order, so the result does not depend on the number
    /// of worker threads.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        assert_eq!(phi.len(), self.shells * self.per_shell);
        let active: Vec<bool> = phi.chunks(self.per_shell).map(|c| c.iter().any(|v| *v != 0.0)).collect();
        let mut out = vec![0.0; phi.len()];
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = self.row(i, phi, &active));
        out
    }

    fn row(&self, i: usize, phi: &[f64], active: &[bool]) -> f64 {
        let (ps, az, shells) = (self.per_shell, self.az, self.shells);
        let (k, a) = (i / ps, i % ps);
        let (ar, aphi) = (a / az, a % az);
        let mut acc = 0.0;
        for l in 0..shells {
            if !active[l] {
                continue;
            }
            let di = l + shells - 1 - k;
            let trow = &self.table[(di * self.rest + ar) * ps..][..ps];
            let prow = &phi[l * ps..(l + 1) * ps];
            for (t, p) in trow.chunks_exact(az).zip(prow.chunks_exact(az)) {
                let split = az - aphi;
                acc += dot(&t[..split], &p[aphi..]) + dot(&t[split..], &p[..aphi]);
            }
        }
        acc * self.row_scale[k]
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cell averages of `d(u, .)^{-lambda}` on the reference shell at unit scale.
///
/// Boxes in parameter space are refined around the singular point only: a
/// box whose centre is at least twice its radius away from `u` is closed
/// with a Gauss rule whose order grows as the box gets closer.
struct CellIntegrator<'a> {
    grid: &'a QuadratureGrid,
    lambda: f64,
    rules: Vec<(Vec<f64>, Vec<f64>)>,
}

type Params = [f64; MAX_COORDS];

impl<'a> CellIntegrator<'a> {
    fn new(grid: &'a QuadratureGrid, lambda: f64) -> Self {
        let rules = (0..=6).map(|n| if n == 0 { (vec![], vec![]) } else { gauss_legendre(n) }).collect();
        Self { grid, lambda, rules }
    }

    fn plen(&self) -> usize {
        self.grid.param_len()
    }

    fn coords(&self) -> usize {
        self.grid.spec().coord_len()
    }

    fn point(&self, xi: &[f64], out: &mut [f64]) {
        self.grid.param_to_point(xi, out);
    }

    fn dist(&self, u: &[f64], v: &[f64]) -> f64 {
        distance_of(self.grid.spec(), u, v)
    }

    fn average(&self, delta: i64, a: usize, b: usize) -> f64 {
        let grid = self.grid;
        let h = grid.log_spacing();
        let (plen, d) = (self.plen(), self.coords());
        let mut xi = [0.0; MAX_COORDS];
        grid.node_param(0, a, &mut xi[..plen]);
        xi[0] = 0.5 * h;
        let mut u = [0.0; MAX_COORDS];
        self.point(&xi[..plen], &mut u[..d]);
        let u = &u[..d];

        let xa = delta as f64 * h;
        let (lo_v, hi_v) = grid.cell_box(b, xa, xa + h);
        let mut lo = [0.0; MAX_COORDS];
        let mut hi = [0.0; MAX_COORDS];
        lo[..plen].copy_from_slice(&lo_v);
        hi[..plen].copy_from_slice(&hi_v);
        let nf = grid.spec().homogeneous_dimension() as f64;
        let volume = (nf * xa).exp() * (nf * h).exp_m1() / nf * grid.angular_measure(b);

        let integral = if delta == 0 && a == b {
            self.self_cell(u, &lo, &hi)
        } else {
            self.integrate(u, &lo, &hi)
        };
        integral / volume
    }

    /// Tensor Gauss rule of order `n` in every non-degenerate dimension.
    fn tensor(&self, u: &[f64], lo: &Params, hi: &Params, n: usize) -> f64 {
        let plen = self.plen();
        let d = self.coords();
        let (x, w) = &self.rules[n];
        let mut dims = [0usize; MAX_COORDS];
        let mut nd = 0;
        for k in 0..plen {
            if hi[k] > lo[k] {
                dims[nd] = k;
                nd += 1;
            }
        }
        let mut xi = *lo;
        let mut pt = [0.0; MAX_COORDS];
        let total = n.pow(nd as u32);
        let mut acc = 0.0;
        for idx in 0..total {
            let mut rem = idx;
            let mut weight = 1.0;
            for &k in &dims[..nd] {
                let j = rem % n;
                rem /= n;
                let half = 0.5 * (hi[k] - lo[k]);
                xi[k] = lo[k] + half * (1.0 + x[j]);
                weight *= half * w[j];
            }
            self.point(&xi[..plen], &mut pt[..d]);
            let dist = self.dist(u, &pt[..d]);
            acc += weight * dist.powf(-self.lambda) * self.grid.param_density(&xi[..plen]);
        }
        acc
    }

    /// Image of the box centre, its largest distance to a corner image, and
    /// the metric half-extent along each parameter axis.
    fn box_geometry(&self, lo: &Params, hi: &Params) -> (Params, f64, Params) {
        let plen = self.plen();
        let d = self.coords();
        let mut mid = [0.0; MAX_COORDS];
        for k in 0..plen {
            mid[k] = 0.5 * (lo[k] + hi[k]);
        }
        let mut c = [0.0; MAX_COORDS];
        self.point(&mid[..plen], &mut c[..d]);
        let mut pt = [0.0; MAX_COORDS];
        let mut xi = mid;
        let mut r: f64 = 0.0;
        for mask in 0..(1usize << plen) {
            for k in 0..plen {
                xi[k] = if mask & (1 << k) != 0 { hi[k] } else { lo[k] };
            }
            self.point(&xi[..plen], &mut pt[..d]);
            r = r.max(self.dist(&c[..d], &pt[..d]));
        }
        let mut extent = [0.0; MAX_COORDS];
        for k in 0..plen {
            if hi[k] > lo[k] {
                let mut e: f64 = 0.0;
                for side in [lo[k], hi[k]] {
                    xi = mid;
                    xi[k] = side;
                    self.point(&xi[..plen], &mut pt[..d]);
                    e = e.max(self.dist(&c[..d], &pt[..d]));
                }
                extent[k] = e;
            }
        }
        (c, r, extent)
    }

    /// A box well separated from `u` is closed by one tensor rule; otherwise
    /// the box is refined adaptively until the estimated error meets
    /// `NEAR_TOL` relative to the whole integral.
    fn integrate(&self, u: &[f64], lo: &Params, hi: &Params) -> f64 {
        let d = self.coords();
        let (c, rad, _) = self.box_geometry(lo, hi);
        let ratio = self.dist(u, &c[..d]) / rad;
        if ratio >= 8.0 {
            return self.tensor(u, lo, hi, 2);
        } else if ratio >= 4.0 {
            return self.tensor(u, lo, hi, 3);
        }
        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut error = 0.0;
        let mut evals = 0;
        let push = |heap: &mut BinaryHeap<Piece>, lo: Params, hi: Params, total: &mut f64, error: &mut f64| {
            let fine = self.tensor(u, &lo, &hi, 3);
            let coarse = self.tensor(u, &lo, &hi, 2);
            let err = (fine - coarse).abs();
            *total += fine;
            *error += err;
            heap.push(Piece { err, value: fine, lo, hi });
        };
        push(&mut heap, *lo, *hi, &mut total, &mut error);
        while error > NEAR_TOL * total.abs() && evals < NEAR_BUDGET {
            let Some(worst) = heap.pop() else { break };
            total -= worst.value;
            error -= worst.err;
            let children = self.split(&worst.lo, &worst.hi);
            evals += children.len();
            for (l, h) in children {
                push(&mut heap, l, h, &mut total, &mut error);
            }
        }
        // re-sum to shed the drift of the running totals
        compensated_sum(heap.into_iter().map(|p| p.value))
    }

    /// Bisect the axes that carry most of the metric size; under the
    /// Heisenberg dilation some axes shrink only like sqrt(width).
    fn split(&self, lo: &Params, hi: &Params) -> Vec<(Params, Params)> {
        let plen = self.plen();
        let (_, _, extent) = self.box_geometry(lo, hi);
        let widest = extent[..plen].iter().cloned().fold(0.0, f64::max);
        let dims: Vec<usize> = (0..plen).filter(|&k| hi[k] > lo[k] && extent[k] >= 0.5 * widest).collect();
        (0..1usize << dims.len())
            .map(|mask| {
                let (mut l, mut h) = (*lo, *hi);
                for (bit, &k) in dims.iter().enumerate() {
                    let mid = 0.5 * (lo[k] + hi[k]);
                    if mask & (1 << bit) != 0 {
                        l[k] = mid;
                    } else {
                        h[k] = mid;
                    }
                }
                (l, h)
            })
            .collect()
    }

    /// Self cell in polar coordinates about `u`: with `v = u . delta_s(omega)`
    /// the Haar measure is `s^{N-1} ds d omega`, so the cell integral is
    /// `int s_exit(omega)^{N - lambda} / (N - lambda) d omega`. The exit
    /// distance has kinks where the exit face changes, which a fine uniform
    /// rule handles at second order.
    fn self_cell(&self, u: &[f64], lo: &Params, hi: &Params) -> f64 {
        let (_, rad, _) = self.box_geometry(lo, hi);
        let axes = self.grid.axes();
        let dims = axes.iter().filter(|a| a.kind != AxisKind::Sign).count() as u32;
        let boxes_per_axis = ((RAY_BUDGET / SELF_ORDER.pow(dims)) as f64).powf(1.0 / dims.max(1) as f64) as usize;
        let pieces = boxes_per_axis.max(1);
        let counts: Vec<usize> = axes.iter().map(|a| if a.kind == AxisKind::Sign { 2 } else { pieces }).collect();
        let total: usize = counts.iter().product();
        let parts: Vec<f64> = (0..total)
            .map(|idx| {
                let mut l = [0.0; MAX_COORDS];
                let mut h = [0.0; MAX_COORDS];
                let mut rem = idx;
                for (k, ax) in axes.iter().enumerate() {
                    let j = rem % counts[k];
                    rem /= counts[k];
                    if ax.kind == AxisKind::Sign {
                        l[1 + k] = ax.center(j);
                        h[1 + k] = l[1 + k];
                    } else {
                        let piece = ax.width * ax.bins as f64 / pieces as f64;
                        l[1 + k] = ax.lo + j as f64 * piece;
                        h[1 + k] = l[1 + k] + piece;
                    }
                }
                self.ray_rule(u, &l, &h, lo, hi, rad)
            })
            .collect();
        compensated_sum(parts)
    }

    /// Tensor Gauss rule over a box of directions of
    /// `int s_exit(omega)^{N - lambda} / (N - lambda) d omega`.
    fn ray_rule(&self, u: &[f64], l: &Params, h: &Params, lo: &Params, hi: &Params, rad: f64) -> f64 {
        let grid = self.grid;
        let (plen, d) = (self.plen(), self.coords());
        let e = grid.spec().homogeneous_dimension() as f64 - self.lambda;
        let (x, w) = &self.rules[SELF_ORDER];
        let dims: Vec<usize> = (1..plen).filter(|&k| h[k] > l[k]).collect();
        let mut ang = *l;
        ang[0] = 0.0;
        let mut omega = [0.0; MAX_COORDS];
        let mut acc = 0.0;
        for idx in 0..SELF_ORDER.pow(dims.len() as u32) {
            let mut rem = idx;
            let mut weight = 1.0;
            for &k in &dims {
                let j = rem % SELF_ORDER;
                rem /= SELF_ORDER;
                let half = 0.5 * (h[k] - l[k]);
                ang[k] = l[k] + half * (1.0 + x[j]);
                weight *= half * w[j];
            }
            weight *= grid.param_density(&ang[..plen]);
            grid.param_to_point(&ang[..plen], &mut omega[..d]);
            let s = self.exit_distance(u, &omega[..d], lo, hi, rad);
            acc += weight * s.powf(e) / e;
        }
        acc
    }

    /// First `s` at which `u . delta_s(omega)` leaves the parameter box.
    fn exit_distance(&self, u: &[f64], omega: &[f64], lo: &Params, hi: &Params, rad: f64) -> f64 {
        const STEPS: usize = 64;
        let step = 3.0 * rad / STEPS as f64;
        let mut inside = 0.0;
        let mut outside = None;
        for k in 1..=STEPS {
            let s = k as f64 * step;
            if self.ray_inside(u, omega, s, lo, hi) {
                inside = s;
            } else {
                outside = Some(s);
                break;
            }
        }
        let Some(mut out) = outside else { return inside };
        for _ in 0..48 {
            let mid = 0.5 * (inside + out);
            if self.ray_inside(u, omega, mid, lo, hi) {
                inside = mid;
            } else {
                out = mid;
            }
            if out - inside <= 1e-13 * out {
                break;
            }
        }
        0.5 * (inside + out)
    }

    fn ray_inside(&self, u: &[f64], omega: &[f64], s: f64, lo: &Params, hi: &Params) -> bool {
        let spec = self.grid.spec();
        let (plen, d) = (self.plen(), self.coords());
        let mut w = [0.0; MAX_COORDS];
        let mut v = [0.0; MAX_COORDS];
        dilate_into(spec, omega, s, &mut w[..d]);
        mul_into(spec, u, &w[..d], &mut v[..d]);
        let mut xi = [0.0; MAX_COORDS];
        if self.grid.point_to_param(&v[..d], &mut xi[..plen]).is_none() {
            return false;
        }
        (0..plen).all(|k| xi[k] >= lo[k] && xi[k] <= hi[k])
    }
}

/// Gauss order of the direction rule used on the self cell.
const SELF_ORDER: usize = 2;
/// Approximate number of rays cast from the singular point of a self cell.
const RAY_BUDGET: usize = 100_000;

/// Relative error target for cells close to the singular point.
const NEAR_TOL: f64 = 1e-4;
/// Cap on the number of boxes refined for one cell.
const NEAR_BUDGET: usize = 50_000;

/// A box of the adaptive near-field rule, ordered by its error estimate.
struct Piece {
    err: f64,
    value: f64,
    lo: Params,
    hi: Params,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpaceSpec;
    use crate::grid::build_grid;

    #[test]
    fn matrix_is_symmetric() {
        let grid = build_grid(SpaceSpec::heisenberg(1), 5, 4, 0.3, 3.0).unwrap();
        let k = KernelOperator::new(grid.clone(), 2.0).unwrap();
        let n = grid.node_count();
        for i in (0..n).step_by(3) {
            for j in (0..n).step_by(5) {
                let (a, b) = (k.entry(i, j), k.entry(j, i));
                assert!((a - b).abs() <= 1e-13 * a.abs().max(b.abs()), "{i} {j}: {a} {b}");
                assert!(a > 0.0 && a.is_finite());
            }
        }
    }

    #[test]
    fn apply_matches_entries() {
        let grid = build_grid(SpaceSpec::euclidean(2), 6, 8, 0.2, 5.0).unwrap();
        let k = KernelOperator::new(grid.clone(), 1.0).unwrap();
        let n = grid.node_count();
        let phi: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 + 0.5).collect();
        let out = k.apply(&phi);
        for i in (0..n).step_by(7) {
            let direct: f64 = (0..n).map(|j| k.entry(i, j) * phi[j]).sum();
            assert!((out[i] - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn rejects_out_of_range_lambda() {
        let grid = build_grid(SpaceSpec::euclidean(1), 4, 4, 0.2, 5.0).unwrap();
        assert!(KernelOperator::new(grid.clone(), 1.0).is_err());
        assert!(KernelOperator::new(grid, 0.0).is_err());
    }
}
